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
#ifndef SPKG_TRAINER_HPP
#define SPKG_TRAINER_HPP

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "spkg/core.hpp"
#include "spkg/data.hpp"
#include "spkg/evaluation.hpp"
#include "spkg/model.hpp"
#include "spkg/objectives.hpp"

namespace spkg {

enum class SelectionMetric { ValidNLL, ValidFilteredMRR };

inline std::string to_string(SelectionMetric metric) {
  return metric == SelectionMetric::ValidNLL ? "valid_nll" : "valid_filtered_mrr";
}

struct TrainConfig {
  double lr = 0.1;
  double l2 = 0.0;
  double dropout_p = 0.0;
  std::int32_t batch_size = 128;
  std::int32_t epochs = 100;
  std::uint64_t seed = 0;
  ObjectiveConfig objective;
  ModelConfig model;
  SelectionMetric selection_metric = SelectionMetric::ValidFilteredMRR;
  std::int32_t eval_every = 1;
};

inline void validate(const TrainConfig& config) {
  if (!(config.lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (config.l2 < 0.0) throw ConfigError("l2 must be >= 0");
  if (!(config.dropout_p >= 0.0 && config.dropout_p < 1.0)) {
    throw ConfigError("dropout probability must be in [0, 1)");
  }
  if (config.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (config.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (config.eval_every < 1) throw ConfigError("eval-every must be >= 1");
  validate(config.objective);
  validate(config.model);
}

// Per-row accumulated squared gradients, allocated the first time a row is
// updated.
struct AdaGradState {
  double epsilon = 1e-10;
  std::int32_t dim = 0;
  std::array<std::unordered_map<std::int32_t, std::vector<double>>, kMaxTables> acc;

  explicit AdaGradState(std::int32_t d = 0) : dim(d) {}

  std::vector<double>& row(int table, std::int32_t index) {
    auto& slot = acc[static_cast<std::size_t>(table)][index];
    if (slot.empty()) slot.assign(static_cast<std::size_t>(dim), 0.0);
    return slot;
  }
};

// Seeded shuffle of the train split, chunked; the last batch may be short.
inline std::vector<std::vector<Triple>> make_batches(std::span<const Triple> train,
                                                     std::int32_t batch_size, Rng& rng) {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  std::vector<Triple> order(train.begin(), train.end());
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::uint64_t j = uniform_index(rng, i);
    std::swap(order[i - 1], order[static_cast<std::size_t>(j)]);
  }
  std::vector<std::vector<Triple>> batches;
  const auto b = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < order.size(); start += b) {
    const std::size_t end = std::min(order.size(), start + b);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

// Adds l2 * theta to every gradient entry of touched rows, then zeroes each
// entry independently with probability dropout_p, scaling survivors by
// 1/(1 - dropout_p). Rows are visited in sorted order so the random stream
// is consumed deterministically.
inline void apply_regularization_and_dropout(const EmbeddingModel& model, Gradients& grads, double l2,
                                             double dropout_p, Rng& rng) {
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("dropout probability must be in [0, 1)");
  if (l2 == 0.0 && dropout_p == 0.0) return;
  const double keep_scale = 1.0 / (1.0 - dropout_p);
  std::vector<std::int32_t> ids;
  for (int table = 0; table < kMaxTables; ++table) {
    auto& rows = grads.rows[static_cast<std::size_t>(table)];
    if (rows.empty()) continue;
    ids.clear();
    ids.reserve(rows.size());
    for (const auto& [id, unused] : rows) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    for (std::int32_t id : ids) {
      std::vector<double>& g = rows[id];
      auto params = model.row(table, id);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (l2 != 0.0) g[i] += l2 * params[i];
        if (dropout_p != 0.0) {
          if (uniform_unit(rng) < dropout_p) {
            g[i] = 0.0;
          } else {
            g[i] *= keep_scale;
          }
        }
      }
    }
  }
}

// acc += g^2; theta -= lr * g / (sqrt(acc) + epsilon). Entries with g == 0
// leave both the parameter and the accumulator unchanged.
inline void adagrad_update(EmbeddingModel& model, const Gradients& grads, AdaGradState& state, double lr) {
  if (state.dim != model.config.dim) state = AdaGradState(model.config.dim);
  for (int table = 0; table < kMaxTables; ++table) {
    for (const auto& [id, g] : grads.rows[static_cast<std::size_t>(table)]) {
      auto params = model.row(table, id);
      std::vector<double>& acc = state.row(table, id);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double gi = g[i];
        if (gi == 0.0) continue;
        if (!std::isfinite(gi)) throw NumericError("non-finite gradient encountered");
        acc[i] += gi * gi;
        params[i] -= lr * gi / (std::sqrt(acc[i]) + state.epsilon);
      }
    }
  }
}

struct EpochReport {
  std::int32_t epoch = 0;     // 1-based
  double loss = 0.0;          // mean batch loss
  double total_ms = 0.0;
  double sampling_ms = 0.0;   // time inside negative sampling; 0 in sp mode
  double rest_ms = 0.0;
  std::optional<double> valid_metric;
};

// One pass over the train split. Negative-sampling time is measured around
// the sampling call site only; everything else counts as rest.
inline EpochReport train_epoch(EmbeddingModel& model, std::span<const Triple> train,
                               const TrainConfig& config, AdaGradState& state, std::int32_t epoch) {
  using Clock = std::chrono::steady_clock;
  EpochReport report;
  report.epoch = epoch;
  const auto epoch_start = Clock::now();

  Rng shuffle_rng = make_rng(derive_seed(config.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
  Rng sample_rng = make_rng(derive_seed(config.seed, "negsample", static_cast<std::uint64_t>(epoch)));
  Rng dropout_rng = make_rng(derive_seed(config.seed, "dropout", static_cast<std::uint64_t>(epoch)));

  const std::vector<std::vector<Triple>> batches = make_batches(train, config.batch_size, shuffle_rng);
  double loss_sum = 0.0;
  double sampling_ns = 0.0;
  for (const std::vector<Triple>& batch : batches) {
    BatchLossResult result;
    if (config.objective.mode == ObjectiveMode::NegSampling) {
      const auto t0 = Clock::now();
      const std::vector<Triple> negatives =
          sample_batch_negatives(batch, config.objective.neg_ratio, model.n_entities, sample_rng);
      sampling_ns += std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
      result = negsampling_batch_loss_with_negatives(model, batch, negatives, config.objective);
    } else {
      result = sp_batch_loss(model, batch, config.objective);
    }
    if (!std::isfinite(result.total)) {
      throw NumericError("non-finite loss in epoch " + std::to_string(epoch));
    }
    loss_sum += result.total;
    apply_regularization_and_dropout(model, result.gradients, config.l2, config.dropout_p, dropout_rng);
    adagrad_update(model, result.gradients, state, config.lr);
  }
  report.loss = batches.empty() ? 0.0 : loss_sum / static_cast<double>(batches.size());
  report.total_ms = std::chrono::duration<double, std::milli>(Clock::now() - epoch_start).count();
  report.sampling_ms = sampling_ns / 1e6;
  report.rest_ms = report.total_ms - report.sampling_ms;
  return report;
}

struct TrainResult {
  EmbeddingModel model;  // parameters of the best epoch under the selection metric
  std::vector<EpochReport> history;
  std::int32_t best_epoch = 0;  // 0 when validation never ran
  std::optional<double> best_metric;
  bool aborted = false;
  std::string abort_reason;
};

namespace detail {

inline double validation_metric(const EmbeddingModel& model, const Dataset& dataset,
                                const TripleSet& filter, SelectionMetric metric) {
  if (metric == SelectionMetric::ValidNLL) {
    std::vector<ScoredExample> examples;
    examples.reserve(dataset.valid.size());
    for (const LabeledTriple& lt : dataset.valid) {
      examples.push_back({predict_score(model, lt.triple), lt.label});
    }
    return calibration_metrics(examples).nll;
  }
  std::vector<Triple> positives;
  for (const LabeledTriple& lt : dataset.valid) {
    if (lt.label == 1) positives.push_back(lt.triple);
  }
  if (positives.empty()) throw ConfigError("validation split has no positive triples to rank");
  return ranking_metrics(model, positives, filter).mrr_filtered;
}

inline bool metric_improves(SelectionMetric metric, double candidate, double incumbent) {
  return metric == SelectionMetric::ValidNLL ? candidate < incumbent : candidate > incumbent;
}

}  // namespace detail

// Full training run: epochs of train_epoch, periodic validation, and
// retention of the best epoch's parameters. A non-finite loss or gradient
// aborts the run; the result then carries the last finished epoch's
// parameters (or the best validated ones) and the abort reason.
inline TrainResult train(const Dataset& dataset, const TrainConfig& config) {
  validate(config);
  if (dataset.train.empty()) throw DataError("train split is empty");
  const bool has_valid = !dataset.valid.empty();
  if (config.selection_metric == SelectionMetric::ValidNLL && has_valid && !dataset.labeled_valid) {
    throw ConfigError("valid_nll selection requires a labeled validation split");
  }

  TrainResult result;
  result.model = init_embeddings(config.model, static_cast<std::int32_t>(dataset.vocab.n_entities()),
                                 static_cast<std::int32_t>(dataset.vocab.n_relations()));
  AdaGradState state(config.model.dim);
  TripleSet filter;
  if (has_valid) filter = build_filter_set(dataset);

  EmbeddingModel best = result.model;
  EmbeddingModel last_good = result.model;
  for (std::int32_t epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochReport report;
    try {
      report = train_epoch(result.model, dataset.train, config, state, epoch);
    } catch (const NumericError& e) {
      result.aborted = true;
      result.abort_reason = e.what();
      result.model = result.best_epoch > 0 ? best : last_good;
      return result;
    }
    if (has_valid && (epoch % config.eval_every == 0 || epoch == config.epochs)) {
      const double metric =
          detail::validation_metric(result.model, dataset, filter, config.selection_metric);
      report.valid_metric = metric;
      if (!result.best_metric.has_value() ||
          detail::metric_improves(config.selection_metric, metric, *result.best_metric)) {
        result.best_metric = metric;
        result.best_epoch = epoch;
        best = result.model;
      }
    }
    last_good = result.model;
    result.history.push_back(report);
  }
  if (result.best_epoch > 0) {
    result.model = best;
  } else if (result.best_epoch == 0 && !result.history.empty()) {
    result.best_epoch = static_cast<std::int32_t>(result.history.size());
  }
  return result;
}

inline void write_history_csv(const std::filesystem::path& path, std::span<const EpochReport> history) {
  std::ofstream os = open_output(path);
  os << "epoch,loss,total_ms,sampling_ms,rest_ms,valid_metric\n";
  for (const EpochReport& r : history) {
    os << r.epoch << ',' << fmt_double(r.loss) << ',' << fmt_double(r.total_ms) << ','
       << fmt_double(r.sampling_ms) << ',' << fmt_double(r.rest_ms) << ',';
    if (r.valid_metric.has_value()) os << fmt_double(*r.valid_metric);
    os << '\n';
  }
  if (!os) throw DataError("failed writing history: " + path.string());
}

}  // namespace spkg

#endif  // SPKG_TRAINER_HPP
