/*
 * Copyright 2026 The spkg Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef SPKG_MODEL_HPP
#define SPKG_MODEL_HPP

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "spkg/core.hpp"
#include "spkg/data.hpp"

namespace spkg {

enum class ModelKind { DistMult, SimplE };

inline std::string to_string(ModelKind kind) {
  return kind == ModelKind::DistMult ? "distmult" : "simple";
}

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "distmult") return ModelKind::DistMult;
  if (s == "simple") return ModelKind::SimplE;
  throw ConfigError("unknown model kind: " + s);
}

struct ModelConfig {
  ModelKind kind = ModelKind::DistMult;
  std::int32_t dim = 100;
  double score_cap = 5.0;  // I: constrained scores lie strictly in (-I, I)
  double psi = 0.0;        // prior shift added to the constrained score
  std::uint64_t seed = 0;
  // When false, scoring and gradients use the raw bilinear form with no tanh
  // and no I/dim scaling (the classical negative-sampling baseline setup).
  bool constrained = true;
};

inline void validate(const ModelConfig& config) {
  if (config.dim < 1) throw ConfigError("model dim must be >= 1");
  if (!(config.score_cap > 0.0)) throw ConfigError("score cap I must be > 0");
}

// Instrumentation: triple score evaluations and parameter-vector reads made
// by the factorized all-triples sum. Atomic so concurrent read-only scoring
// stays safe; copying a model snapshots the counts.
struct ScoreCounters {
  std::atomic<std::uint64_t> score_evals{0};
  std::atomic<std::uint64_t> factorized_vector_reads{0};

  ScoreCounters() = default;
  ScoreCounters(const ScoreCounters& other) { *this = other; }
  ScoreCounters& operator=(const ScoreCounters& other) {
    score_evals.store(other.score_evals.load(std::memory_order_relaxed), std::memory_order_relaxed);
    factorized_vector_reads.store(other.factorized_vector_reads.load(std::memory_order_relaxed),
                                  std::memory_order_relaxed);
    return *this;
  }

  void reset() {
    score_evals.store(0, std::memory_order_relaxed);
    factorized_vector_reads.store(0, std::memory_order_relaxed);
  }
};

// Parameter table roles. DistMult uses EntityHead as its single entity table
// and RelationForward as its single relation table.
enum TableId : int {
  kEntityHead = 0,
  kEntityTail = 1,
  kRelationForward = 2,
  kRelationInverse = 3,
};

constexpr int kMaxTables = 4;

struct EmbeddingModel {
  ModelConfig config;
  std::int32_t n_entities = 0;
  std::int32_t n_relations = 0;
  std::array<std::vector<double>, kMaxTables> tables;
  mutable ScoreCounters counters;

  bool is_simple() const { return config.kind == ModelKind::SimplE; }

  bool table_used(int table) const {
    if (is_simple()) return true;
    return table == kEntityHead || table == kRelationForward;
  }

  std::int32_t table_rows(int table) const {
    return (table == kEntityHead || table == kEntityTail) ? n_entities : n_relations;
  }

  std::span<double> row(int table, std::int32_t index) {
    return {tables[static_cast<std::size_t>(table)].data() +
                static_cast<std::size_t>(index) * static_cast<std::size_t>(config.dim),
            static_cast<std::size_t>(config.dim)};
  }

  std::span<const double> row(int table, std::int32_t index) const {
    return {tables[static_cast<std::size_t>(table)].data() +
                static_cast<std::size_t>(index) * static_cast<std::size_t>(config.dim),
            static_cast<std::size_t>(config.dim)};
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (int t = 0; t < kMaxTables; ++t) n += tables[static_cast<std::size_t>(t)].size();
    return n;
  }

  void check_triple(const Triple& t) const {
    if (t.head < 0 || t.head >= n_entities || t.tail < 0 || t.tail >= n_entities || t.relation < 0 ||
        t.relation >= n_relations) {
      throw DataError("triple id out of range");
    }
  }
};

// Parameters are drawn i.i.d. uniform on [-0.1, 0.1]; tables are filled in
// checkpoint order so the same seed gives bit-identical models.
inline EmbeddingModel init_embeddings(const ModelConfig& config, std::int32_t n_entities,
                                      std::int32_t n_relations) {
  validate(config);
  if (n_entities < 1 || n_relations < 1) throw ConfigError("model needs at least one entity and relation");
  EmbeddingModel model;
  model.config = config;
  model.n_entities = n_entities;
  model.n_relations = n_relations;
  Rng rng = make_rng(config.seed, "init");
  for (int t = 0; t < kMaxTables; ++t) {
    if (!model.table_used(t)) continue;
    auto& table = model.tables[static_cast<std::size_t>(t)];
    table.resize(static_cast<std::size_t>(model.table_rows(t)) * static_cast<std::size_t>(config.dim));
    for (double& x : table) x = uniform_real(rng, -0.1, 0.1);
  }
  return model;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Sigmoid of the score, the model's probability that a triple holds.
inline double probability(double score) { return sigmoid(score); }

namespace detail {

inline double dot3(std::span<const double> a, std::span<const double> b, std::span<const double> c) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i] * c[i];
  return sum;
}

inline double dot3_tanh(std::span<const double> a, std::span<const double> b, std::span<const double> c) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::tanh(a[i]) * std::tanh(b[i]) * std::tanh(c[i]);
  return sum;
}

}  // namespace detail

// Bilinear score on raw, unconstrained parameters.
inline double score_raw(const EmbeddingModel& model, const Triple& t) {
  model.check_triple(t);
  model.counters.score_evals.fetch_add(1, std::memory_order_relaxed);
  if (!model.is_simple()) {
    return detail::dot3(model.row(kEntityHead, t.head), model.row(kRelationForward, t.relation),
                        model.row(kEntityHead, t.tail));
  }
  const double forward = detail::dot3(model.row(kEntityHead, t.head), model.row(kRelationForward, t.relation),
                                      model.row(kEntityTail, t.tail));
  const double inverse = detail::dot3(model.row(kEntityHead, t.tail), model.row(kRelationInverse, t.relation),
                                      model.row(kEntityTail, t.head));
  return 0.5 * (forward + inverse);
}

// Same bilinear form with every element passed through tanh and the result
// scaled by I/dim, so the score lies strictly in (-I, I).
inline double score_constrained(const EmbeddingModel& model, const Triple& t) {
  model.check_triple(t);
  model.counters.score_evals.fetch_add(1, std::memory_order_relaxed);
  const double scale = model.config.score_cap / static_cast<double>(model.config.dim);
  if (!model.is_simple()) {
    return scale * detail::dot3_tanh(model.row(kEntityHead, t.head),
                                     model.row(kRelationForward, t.relation),
                                     model.row(kEntityHead, t.tail));
  }
  const double forward = detail::dot3_tanh(model.row(kEntityHead, t.head),
                                           model.row(kRelationForward, t.relation),
                                           model.row(kEntityTail, t.tail));
  const double inverse = detail::dot3_tanh(model.row(kEntityHead, t.tail),
                                           model.row(kRelationInverse, t.relation),
                                           model.row(kEntityTail, t.head));
  return scale * 0.5 * (forward + inverse);
}

// Constrained score plus the prior shift psi. This is the score used for the
// positive loss and at prediction time; the regularizer drives the unshifted
// sum toward zero.
inline double score_shifted(const EmbeddingModel& model, const Triple& t) {
  return score_constrained(model, t) + model.config.psi;
}

// Score used by objectives and evaluation: honours the constraint flag.
inline double predict_score(const EmbeddingModel& model, const Triple& t) {
  if (model.config.constrained) return score_shifted(model, t);
  return score_raw(model, t) + model.config.psi;
}

// ---------------------------------------------------------------------------
// Sparse gradients: only rows touched by a batch carry entries.

struct Gradients {
  std::int32_t dim = 0;
  std::array<std::unordered_map<std::int32_t, std::vector<double>>, kMaxTables> rows;

  explicit Gradients(std::int32_t d = 0) : dim(d) {}

  std::vector<double>& row(int table, std::int32_t index) {
    auto& slot = rows[static_cast<std::size_t>(table)][index];
    if (slot.empty()) slot.assign(static_cast<std::size_t>(dim), 0.0);
    return slot;
  }

  const std::vector<double>* find(int table, std::int32_t index) const {
    const auto& m = rows[static_cast<std::size_t>(table)];
    auto it = m.find(index);
    return it == m.end() ? nullptr : &it->second;
  }

  void clear() {
    for (auto& m : rows) m.clear();
  }

  std::size_t touched_rows() const {
    std::size_t n = 0;
    for (const auto& m : rows) n += m.size();
    return n;
  }
};

// Accumulates d(sum_b upstream_b * score(triple_b)) / d(raw parameters) into
// `out`, where score honours the model's constraint flag.
inline void score_gradients(const EmbeddingModel& model, std::span<const Triple> triples,
                            std::span<const double> upstream, Gradients& out) {
  if (triples.size() != upstream.size()) throw NumericError("score_gradients: size mismatch");
  if (out.dim != model.config.dim) out = Gradients(model.config.dim);
  const std::int32_t dim = model.config.dim;
  const bool constrained = model.config.constrained;
  const bool simple = model.is_simple();
  const double scale = constrained ? model.config.score_cap / static_cast<double>(dim) : 1.0;

  for (std::size_t b = 0; b < triples.size(); ++b) {
    const double u = upstream[b];
    if (u == 0.0) continue;
    const Triple& t = triples[b];
    model.check_triple(t);
    if (!simple) {
      auto zh = model.row(kEntityHead, t.head);
      auto vr = model.row(kRelationForward, t.relation);
      auto zt = model.row(kEntityHead, t.tail);
      auto& gh = out.row(kEntityHead, t.head);
      auto& gr = out.row(kRelationForward, t.relation);
      auto& gt = out.row(kEntityHead, t.tail);
      for (std::int32_t i = 0; i < dim; ++i) {
        double a = zh[static_cast<std::size_t>(i)];
        double r = vr[static_cast<std::size_t>(i)];
        double c = zt[static_cast<std::size_t>(i)];
        double da = 1.0, dr = 1.0, dc = 1.0;
        if (constrained) {
          a = std::tanh(a);
          r = std::tanh(r);
          c = std::tanh(c);
          da = 1.0 - a * a;
          dr = 1.0 - r * r;
          dc = 1.0 - c * c;
        }
        const double f = u * scale;
        gh[static_cast<std::size_t>(i)] += f * da * r * c;
        gr[static_cast<std::size_t>(i)] += f * a * dr * c;
        gt[static_cast<std::size_t>(i)] += f * a * r * dc;
      }
    } else {
      auto hh = model.row(kEntityHead, t.head);
      auto ht = model.row(kEntityTail, t.head);
      auto th = model.row(kEntityHead, t.tail);
      auto tt = model.row(kEntityTail, t.tail);
      auto vf = model.row(kRelationForward, t.relation);
      auto vi = model.row(kRelationInverse, t.relation);
      auto& g_hh = out.row(kEntityHead, t.head);
      auto& g_ht = out.row(kEntityTail, t.head);
      auto& g_th = out.row(kEntityHead, t.tail);
      auto& g_tt = out.row(kEntityTail, t.tail);
      auto& g_vf = out.row(kRelationForward, t.relation);
      auto& g_vi = out.row(kRelationInverse, t.relation);
      const double f = u * scale * 0.5;
      for (std::int32_t i = 0; i < dim; ++i) {
        const auto k = static_cast<std::size_t>(i);
        double a1 = hh[k], r1 = vf[k], c1 = tt[k];  // forward term
        double a2 = th[k], r2 = vi[k], c2 = ht[k];  // inverse term
        double da1 = 1.0, dr1 = 1.0, dc1 = 1.0, da2 = 1.0, dr2 = 1.0, dc2 = 1.0;
        if (constrained) {
          a1 = std::tanh(a1);
          r1 = std::tanh(r1);
          c1 = std::tanh(c1);
          a2 = std::tanh(a2);
          r2 = std::tanh(r2);
          c2 = std::tanh(c2);
          da1 = 1.0 - a1 * a1;
          dr1 = 1.0 - r1 * r1;
          dc1 = 1.0 - c1 * c1;
          da2 = 1.0 - a2 * a2;
          dr2 = 1.0 - r2 * r2;
          dc2 = 1.0 - c2 * c2;
        }
        g_hh[k] += f * da1 * r1 * c1;
        g_vf[k] += f * a1 * dr1 * c1;
        g_tt[k] += f * a1 * r1 * dc1;
        g_th[k] += f * da2 * r2 * c2;
        g_vi[k] += f * a2 * dr2 * c2;
        g_ht[k] += f * a2 * r2 * dc2;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Checkpoint format: "SPKG" magic, u32 version, u8 kind, u8 flags, u32 dim,
// f64 I, f64 psi, u64 |E|, u64 |R|, then parameter tables as little-endian
// f64 blocks (entities before relations; head-role before tail-role and
// forward before inverse for SimplE). A sidecar text file carries the
// vocabulary.

constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const EmbeddingModel& model, const std::filesystem::path& path) {
  std::ofstream os = open_output(path);
  os.write("SPKG", 4);
  write_u32(os, kCheckpointVersion);
  write_u8(os, model.is_simple() ? 1 : 0);
  write_u8(os, model.config.constrained ? 1 : 0);
  write_u32(os, static_cast<std::uint32_t>(model.config.dim));
  write_f64(os, model.config.score_cap);
  write_f64(os, model.config.psi);
  write_u64(os, static_cast<std::uint64_t>(model.n_entities));
  write_u64(os, static_cast<std::uint64_t>(model.n_relations));
  for (int t = 0; t < kMaxTables; ++t) {
    if (!model.table_used(t)) continue;
    for (double x : model.tables[static_cast<std::size_t>(t)]) write_f64(os, x);
  }
  if (!os) throw DataError("failed writing checkpoint: " + path.string());
}

inline EmbeddingModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path.string());
  char magic[4] = {};
  is.read(magic, 4);
  if (is.gcount() != 4 || std::string_view(magic, 4) != "SPKG") {
    throw DataError("not a checkpoint file: " + path.string());
  }
  const std::uint32_t version = read_u32(is);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  EmbeddingModel model;
  const std::uint8_t kind = read_u8(is);
  if (kind > 1) throw DataError("unknown model kind in checkpoint");
  model.config.kind = kind == 1 ? ModelKind::SimplE : ModelKind::DistMult;
  const std::uint8_t flags = read_u8(is);
  model.config.constrained = (flags & 1) != 0;
  model.config.dim = static_cast<std::int32_t>(read_u32(is));
  model.config.score_cap = read_f64(is);
  model.config.psi = read_f64(is);
  model.n_entities = static_cast<std::int32_t>(read_u64(is));
  model.n_relations = static_cast<std::int32_t>(read_u64(is));
  validate(model.config);
  if (model.n_entities < 1 || model.n_relations < 1) throw DataError("checkpoint has empty vocabulary");
  for (int t = 0; t < kMaxTables; ++t) {
    if (!model.table_used(t)) continue;
    auto& table = model.tables[static_cast<std::size_t>(t)];
    table.resize(static_cast<std::size_t>(model.table_rows(t)) *
                 static_cast<std::size_t>(model.config.dim));
    for (double& x : table) x = read_f64(is);
  }
  char extra;
  if (is.get(extra)) throw DataError("trailing bytes in checkpoint: " + path.string());
  return model;
}

inline void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream os = open_output(path);
  os << vocab.n_entities() << '\t' << vocab.n_relations() << '\n';
  for (const std::string& name : vocab.entity_names()) os << name << '\n';
  for (const std::string& name : vocab.relation_names()) os << name << '\n';
  if (!os) throw DataError("failed writing vocabulary: " + path.string());
}

inline Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open vocabulary: " + path.string());
  std::size_t n_entities = 0, n_relations = 0;
  std::string header;
  if (!std::getline(is, header)) throw DataError("empty vocabulary file: " + path.string());
  if (std::sscanf(header.c_str(), "%zu\t%zu", &n_entities, &n_relations) != 2) {
    throw DataError("malformed vocabulary header: " + path.string());
  }
  Vocabulary vocab;
  std::string line;
  for (std::size_t i = 0; i < n_entities; ++i) {
    if (!std::getline(is, line)) throw DataError("vocabulary truncated: " + path.string());
    vocab.add_entity(line);
  }
  for (std::size_t i = 0; i < n_relations; ++i) {
    if (!std::getline(is, line)) throw DataError("vocabulary truncated: " + path.string());
    vocab.add_relation(line);
  }
  if (vocab.n_entities() != n_entities || vocab.n_relations() != n_relations) {
    throw DataError("duplicate names in vocabulary: " + path.string());
  }
  return vocab;
}

}  // namespace spkg

#endif  // SPKG_MODEL_HPP
