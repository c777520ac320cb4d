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
#ifndef SPKG_OBJECTIVES_HPP
#define SPKG_OBJECTIVES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "spkg/core.hpp"
#include "spkg/data.hpp"
#include "spkg/model.hpp"

namespace spkg {

enum class ObjectiveMode { NegSampling, StayPositive };

// Scope of the score-sum regularizer: the distinct entities/relations of the
// current batch (default), or the whole vocabulary.
enum class RegularizerScope { Batch, Global };

struct ObjectiveConfig {
  ObjectiveMode mode = ObjectiveMode::StayPositive;
  std::int32_t neg_ratio = 1;  // negatives per positive (NegSampling)
  double lambda = 0.0;         // regularizer weight (StayPositive)
  std::int32_t p = 1;          // norm order of the regularizer
  RegularizerScope scope = RegularizerScope::Batch;
};

inline void validate(const ObjectiveConfig& config) {
  if (config.mode == ObjectiveMode::NegSampling && config.neg_ratio < 1) {
    throw ConfigError("negative ratio must be >= 1");
  }
  if (config.lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (config.p != 1 && config.p != 2) throw ConfigError("regularizer norm order p must be 1 or 2");
}

// Overflow-safe ln(1 + e^x).
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// Negative log-likelihood of a labelled triple, label in {-1, +1}.
inline double softplus_loss(double score, int label) {
  return softplus(-static_cast<double>(label) * score);
}

// d softplus_loss / d score.
inline double softplus_loss_dscore(double score, int label) {
  const double l = static_cast<double>(label);
  return -l * sigmoid(-l * score);
}

struct BatchLossResult {
  double positive_loss = 0.0;
  double negative_loss = 0.0;
  double regularizer = 0.0;
  double total = 0.0;
  Gradients gradients;
};

// ---------------------------------------------------------------------------
// Negative sampling

// Produces n corruptions of a triple: a coin picks head or tail, the
// replacement entity is uniform over [0, n_entities). The relation is never
// corrupted and samples are not filtered against the train set.
inline std::vector<Triple> neg_sample(const Triple& triple, std::int32_t n, std::int32_t n_entities,
                                      Rng& rng) {
  if (n < 1) throw ConfigError("negative sample count must be >= 1");
  std::vector<Triple> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int32_t i = 0; i < n; ++i) {
    Triple t = triple;
    const bool corrupt_head = uniform_index(rng, 2) == 0;
    const auto entity = static_cast<EntityId>(uniform_index(rng, static_cast<std::uint64_t>(n_entities)));
    (corrupt_head ? t.head : t.tail) = entity;
    out.push_back(t);
  }
  return out;
}

inline std::vector<Triple> sample_batch_negatives(std::span<const Triple> batch, std::int32_t n,
                                                  std::int32_t n_entities, Rng& rng) {
  std::vector<Triple> out;
  out.reserve(batch.size() * static_cast<std::size_t>(n));
  for (const Triple& t : batch) {
    std::vector<Triple> negs = neg_sample(t, n, n_entities, rng);
    out.insert(out.end(), negs.begin(), negs.end());
  }
  return out;
}

// Loss over a batch of positives with pre-drawn negatives. Split out so the
// trainer can time the sampling step separately.
inline BatchLossResult negsampling_batch_loss_with_negatives(const EmbeddingModel& model,
                                                             std::span<const Triple> batch,
                                                             std::span<const Triple> negatives,
                                                             const ObjectiveConfig& config) {
  validate(config);
  if (config.mode != ObjectiveMode::NegSampling) throw ConfigError("objective mode is not neg");
  BatchLossResult result;
  result.gradients = Gradients(model.config.dim);
  if (batch.empty()) return result;

  std::vector<Triple> all;
  all.reserve(batch.size() + negatives.size());
  std::vector<double> upstream;
  upstream.reserve(batch.size() + negatives.size());
  for (const Triple& t : batch) {
    const double s = predict_score(model, t);
    result.positive_loss += softplus_loss(s, +1);
    all.push_back(t);
    upstream.push_back(softplus_loss_dscore(s, +1));
  }
  for (const Triple& t : negatives) {
    const double s = predict_score(model, t);
    result.negative_loss += softplus_loss(s, -1);
    all.push_back(t);
    upstream.push_back(softplus_loss_dscore(s, -1));
  }
  result.total = result.positive_loss + result.negative_loss;
  score_gradients(model, all, upstream, result.gradients);
  return result;
}

inline BatchLossResult negsampling_batch_loss(const EmbeddingModel& model, std::span<const Triple> batch,
                                              const ObjectiveConfig& config, Rng& rng) {
  validate(config);
  const std::vector<Triple> negatives =
      batch.empty() ? std::vector<Triple>{}
                    : sample_batch_negatives(batch, config.neg_ratio, model.n_entities, rng);
  return negsampling_batch_loss_with_negatives(model, batch, negatives, config);
}

// ---------------------------------------------------------------------------
// Factorized all-triples score sum

// Per-dimension sums of tanh-transformed parameter vectors over an entity
// set and a relation set. Building them costs one read per vector (two per
// entity and per relation in the four-table model), counted by the model's
// factorized_vector_reads counter.
struct FactorizedSums {
  std::vector<double> entity_head;
  std::vector<double> entity_tail;      // four-table model only
  std::vector<double> relation_forward;
  std::vector<double> relation_inverse;  // four-table model only
};

inline FactorizedSums compute_factorized_sums(const EmbeddingModel& model,
                                              std::span<const EntityId> entities,
                                              std::span<const RelationId> relations) {
  if (entities.empty() || relations.empty()) {
    throw ConfigError("factorized score sum needs non-empty entity and relation sets");
  }
  const auto dim = static_cast<std::size_t>(model.config.dim);
  FactorizedSums sums;
  sums.entity_head.assign(dim, 0.0);
  sums.relation_forward.assign(dim, 0.0);
  if (model.is_simple()) {
    sums.entity_tail.assign(dim, 0.0);
    sums.relation_inverse.assign(dim, 0.0);
  }
  auto accumulate = [&](int table, std::int32_t index, std::vector<double>& acc) {
    if (index < 0 || index >= model.table_rows(table)) throw DataError("id out of range in factorized sum");
    auto row = model.row(table, index);
    model.counters.factorized_vector_reads.fetch_add(1, std::memory_order_relaxed);
    for (std::size_t i = 0; i < dim; ++i) acc[i] += std::tanh(row[i]);
  };
  for (EntityId e : entities) {
    accumulate(kEntityHead, e, sums.entity_head);
    if (model.is_simple()) accumulate(kEntityTail, e, sums.entity_tail);
  }
  for (RelationId r : relations) {
    accumulate(kRelationForward, r, sums.relation_forward);
    if (model.is_simple()) accumulate(kRelationInverse, r, sums.relation_inverse);
  }
  return sums;
}

inline double factorized_sum_value(const EmbeddingModel& model, const FactorizedSums& sums) {
  const auto dim = static_cast<std::size_t>(model.config.dim);
  const double scale = model.config.score_cap / static_cast<double>(model.config.dim);
  double total = 0.0;
  if (!model.is_simple()) {
    for (std::size_t i = 0; i < dim; ++i) {
      total += sums.entity_head[i] * sums.entity_head[i] * sums.relation_forward[i];
    }
    return scale * total;
  }
  for (std::size_t i = 0; i < dim; ++i) {
    total += sums.entity_head[i] * sums.entity_tail[i] *
             (sums.relation_forward[i] + sums.relation_inverse[i]);
  }
  return scale * 0.5 * total;
}

// Sum of score_constrained over every (h, r, t) in Es x Rs x Es, computed
// from the per-dimension sums instead of enumerating triples.
inline double factorized_score_sum(const EmbeddingModel& model, std::span<const EntityId> entities,
                                   std::span<const RelationId> relations) {
  return factorized_sum_value(model, compute_factorized_sums(model, entities, relations));
}

// Literal triple-loop oracle for factorized_score_sum. Guarded so it is only
// usable at test scale.
inline double brute_force_score_sum(const EmbeddingModel& model, std::span<const EntityId> entities,
                                    std::span<const RelationId> relations) {
  if (entities.empty() || relations.empty()) {
    throw ConfigError("score sum needs non-empty entity and relation sets");
  }
  const double n_terms = static_cast<double>(entities.size()) * static_cast<double>(entities.size()) *
                         static_cast<double>(relations.size());
  if (n_terms > 1e6) {
    throw ConfigError("brute-force score sum over " + fmt_double(n_terms, 3) +
                      " triples exceeds the enumeration guard; use factorized_score_sum");
  }
  double total = 0.0;
  for (EntityId h : entities) {
    for (RelationId r : relations) {
      for (EntityId t : entities) total += score_constrained(model, Triple{h, r, t});
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Stay-positive objective

// |sum of unshifted constrained scores over Es x Rs x Es|^p. The prior shift
// psi never enters here; it lives entirely in score_shifted.
inline double sp_regularizer(const EmbeddingModel& model, std::span<const EntityId> entities,
                             std::span<const RelationId> relations, std::int32_t p) {
  if (p != 1 && p != 2) throw ConfigError("regularizer norm order p must be 1 or 2");
  const double s = factorized_score_sum(model, entities, relations);
  return p == 1 ? std::abs(s) : s * s;
}

// Distinct entity and relation ids of a batch, ascending.
inline void distinct_ids(std::span<const Triple> batch, std::vector<EntityId>& entities,
                         std::vector<RelationId>& relations) {
  entities.clear();
  relations.clear();
  for (const Triple& t : batch) {
    entities.push_back(t.head);
    entities.push_back(t.tail);
    relations.push_back(t.relation);
  }
  std::sort(entities.begin(), entities.end());
  entities.erase(std::unique(entities.begin(), entities.end()), entities.end());
  std::sort(relations.begin(), relations.end());
  relations.erase(std::unique(relations.begin(), relations.end()), relations.end());
}

namespace detail {

// Adds coef * d(sum)/d(raw params) for the factorized score sum whose
// per-dimension sums are given. Reuses the cached sums; only the tanh
// derivative of each touched row is recomputed.
inline void add_factorized_sum_gradients(const EmbeddingModel& model, std::span<const EntityId> entities,
                                         std::span<const RelationId> relations, const FactorizedSums& sums,
                                         double coef, Gradients& out) {
  if (coef == 0.0) return;
  const auto dim = static_cast<std::size_t>(model.config.dim);
  const double scale = model.config.score_cap / static_cast<double>(model.config.dim);
  if (!model.is_simple()) {
    for (EntityId e : entities) {
      auto row = model.row(kEntityHead, e);
      auto& g = out.row(kEntityHead, e);
      for (std::size_t i = 0; i < dim; ++i) {
        const double th = std::tanh(row[i]);
        g[i] += coef * scale * 2.0 * sums.entity_head[i] * sums.relation_forward[i] * (1.0 - th * th);
      }
    }
    for (RelationId r : relations) {
      auto row = model.row(kRelationForward, r);
      auto& g = out.row(kRelationForward, r);
      for (std::size_t i = 0; i < dim; ++i) {
        const double th = std::tanh(row[i]);
        g[i] += coef * scale * sums.entity_head[i] * sums.entity_head[i] * (1.0 - th * th);
      }
    }
    return;
  }
  const double half = scale * 0.5;
  for (EntityId e : entities) {
    auto head_row = model.row(kEntityHead, e);
    auto tail_row = model.row(kEntityTail, e);
    auto& gh = out.row(kEntityHead, e);
    auto& gt = out.row(kEntityTail, e);
    for (std::size_t i = 0; i < dim; ++i) {
      const double rel = sums.relation_forward[i] + sums.relation_inverse[i];
      const double th_h = std::tanh(head_row[i]);
      const double th_t = std::tanh(tail_row[i]);
      gh[i] += coef * half * sums.entity_tail[i] * rel * (1.0 - th_h * th_h);
      gt[i] += coef * half * sums.entity_head[i] * rel * (1.0 - th_t * th_t);
    }
  }
  for (RelationId r : relations) {
    auto fwd_row = model.row(kRelationForward, r);
    auto inv_row = model.row(kRelationInverse, r);
    auto& gf = out.row(kRelationForward, r);
    auto& gi = out.row(kRelationInverse, r);
    for (std::size_t i = 0; i < dim; ++i) {
      const double pair = sums.entity_head[i] * sums.entity_tail[i];
      const double th_f = std::tanh(fwd_row[i]);
      const double th_i = std::tanh(inv_row[i]);
      gf[i] += coef * half * pair * (1.0 - th_f * th_f);
      gi[i] += coef * half * pair * (1.0 - th_i * th_i);
    }
  }
}

}  // namespace detail

// Positives-only NLL on shifted scores plus lambda times the score-sum
// regularizer over the batch's distinct entities and relations (or the whole
// vocabulary under Global scope). The per-dimension sums are computed once
// and shared between the loss value and its gradient.
inline BatchLossResult sp_batch_loss(const EmbeddingModel& model, std::span<const Triple> batch,
                                     const ObjectiveConfig& config) {
  validate(config);
  if (config.mode != ObjectiveMode::StayPositive) throw ConfigError("objective mode is not sp");
  BatchLossResult result;
  result.gradients = Gradients(model.config.dim);
  if (batch.empty()) return result;

  std::vector<double> upstream;
  upstream.reserve(batch.size());
  for (const Triple& t : batch) {
    const double s = predict_score(model, t);
    result.positive_loss += softplus_loss(s, +1);
    upstream.push_back(softplus_loss_dscore(s, +1));
  }
  score_gradients(model, batch, upstream, result.gradients);

  std::vector<EntityId> entities;
  std::vector<RelationId> relations;
  if (config.scope == RegularizerScope::Batch) {
    distinct_ids(batch, entities, relations);
  } else {
    entities.resize(static_cast<std::size_t>(model.n_entities));
    std::iota(entities.begin(), entities.end(), 0);
    relations.resize(static_cast<std::size_t>(model.n_relations));
    std::iota(relations.begin(), relations.end(), 0);
  }
  const FactorizedSums sums = compute_factorized_sums(model, entities, relations);
  const double s = factorized_sum_value(model, sums);
  double dreg_ds;  // d|s|^p / ds with sign(0) taken as 0
  if (config.p == 1) {
    result.regularizer = std::abs(s);
    dreg_ds = s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
  } else {
    result.regularizer = s * s;
    dreg_ds = 2.0 * s;
  }
  result.total = result.positive_loss + config.lambda * result.regularizer;
  detail::add_factorized_sum_gradients(model, entities, relations, sums, config.lambda * dreg_ds,
                                       result.gradients);
  return result;
}

}  // namespace spkg

#endif  // SPKG_OBJECTIVES_HPP
