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
#ifndef SPKG_EVALUATION_HPP
#define SPKG_EVALUATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "spkg/core.hpp"
#include "spkg/data.hpp"
#include "spkg/model.hpp"
#include "spkg/objectives.hpp"

namespace spkg {

struct TripleHash {
  std::size_t operator()(const Triple& t) const {
    std::uint64_t k = static_cast<std::uint32_t>(t.head);
    k = splitmix64(k ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.relation)) << 32));
    k = splitmix64(k ^ static_cast<std::uint32_t>(t.tail));
    return static_cast<std::size_t>(k);
  }
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

// Known-true triples used by the filtered ranking setting: the train split
// plus the positives of validation and test.
inline TripleSet build_filter_set(const Dataset& dataset) {
  TripleSet filter;
  filter.reserve(dataset.train.size() + dataset.valid.size() + dataset.test.size());
  for (const Triple& t : dataset.train) filter.insert(t);
  for (const LabeledTriple& lt : dataset.valid) {
    if (lt.label == 1) filter.insert(lt.triple);
  }
  for (const LabeledTriple& lt : dataset.test) {
    if (lt.label == 1) filter.insert(lt.triple);
  }
  return filter;
}

enum class QuerySlot { Head, Tail };

namespace detail {

struct RankPair {
  std::int64_t raw = 1;
  std::int64_t filtered = 1;
};

// One pass over all candidate entities for a (?, r, t) or (h, r, ?) query.
// Rank = 1 + number of competing candidates scoring >= the true entity
// (ties are pessimistic). Filtered mode additionally ignores candidates that
// form known-true triples, except the true entity itself.
inline RankPair rank_query(const EmbeddingModel& model, const Triple& truth, QuerySlot slot,
                           const TripleSet* filter) {
  model.check_triple(truth);
  const double true_score = predict_score(model, truth);
  const EntityId true_entity = slot == QuerySlot::Head ? truth.head : truth.tail;
  RankPair rank;
  Triple candidate = truth;
  for (EntityId c = 0; c < model.n_entities; ++c) {
    if (c == true_entity) continue;
    (slot == QuerySlot::Head ? candidate.head : candidate.tail) = c;
    const double s = predict_score(model, candidate);
    if (s < true_score) continue;
    ++rank.raw;
    if (filter == nullptr || !filter->contains(candidate)) ++rank.filtered;
  }
  return rank;
}

}  // namespace detail

// Rank of the true entity among all completions of the query; pass a filter
// set for the filtered setting, nullptr for raw.
inline std::int64_t rank_entity(const EmbeddingModel& model, const Triple& truth, QuerySlot slot,
                                const TripleSet* filter = nullptr) {
  const detail::RankPair pair = detail::rank_query(model, truth, slot, filter);
  return filter == nullptr ? pair.raw : pair.filtered;
}

struct RankingReport {
  double mrr_raw = 0.0;
  double mrr_filtered = 0.0;
  double hit1_raw = 0.0;
  double hit3_raw = 0.0;
  double hit10_raw = 0.0;
  double hit1_filtered = 0.0;
  double hit3_filtered = 0.0;
  double hit10_filtered = 0.0;

  bool operator==(const RankingReport&) const = default;
};

// Head and tail queries for every test triple; means follow
// MRR = (1 / 2|Test|) * sum of reciprocal ranks.
inline RankingReport ranking_metrics(const EmbeddingModel& model, std::span<const Triple> test,
                                     const TripleSet& filter) {
  if (test.empty()) throw ConfigError("ranking metrics need a non-empty test set");
  RankingReport report;
  const double denom = 2.0 * static_cast<double>(test.size());
  for (const Triple& t : test) {
    for (QuerySlot slot : {QuerySlot::Head, QuerySlot::Tail}) {
      const detail::RankPair rank = detail::rank_query(model, t, slot, &filter);
      report.mrr_raw += 1.0 / static_cast<double>(rank.raw);
      report.mrr_filtered += 1.0 / static_cast<double>(rank.filtered);
      report.hit1_raw += rank.raw <= 1;
      report.hit3_raw += rank.raw <= 3;
      report.hit10_raw += rank.raw <= 10;
      report.hit1_filtered += rank.filtered <= 1;
      report.hit3_filtered += rank.filtered <= 3;
      report.hit10_filtered += rank.filtered <= 10;
    }
  }
  report.mrr_raw /= denom;
  report.mrr_filtered /= denom;
  report.hit1_raw /= denom;
  report.hit3_raw /= denom;
  report.hit10_raw /= denom;
  report.hit1_filtered /= denom;
  report.hit3_filtered /= denom;
  report.hit10_filtered /= denom;
  return report;
}

// ---------------------------------------------------------------------------
// Calibration

struct ScoredExample {
  double score = 0.0;
  int label = 1;  // -1 or +1
};

struct CalibrationReport {
  double nll = 0.0;
  double brier = 0.0;
  std::optional<double> auc;  // absent when only one class is present
  std::vector<std::uint64_t> histogram;
};

// Probabilities sigma(score) assigned to equal-width bins over [0,1]; the
// boundary value 1.0 falls in the last bin.
inline std::vector<std::uint64_t> probability_histogram(std::span<const double> scores, int n_bins) {
  if (n_bins < 1) throw ConfigError("histogram needs at least one bin");
  std::vector<std::uint64_t> bins(static_cast<std::size_t>(n_bins), 0);
  for (double s : scores) {
    const double p = probability(s);
    auto bin = static_cast<std::int64_t>(p * static_cast<double>(n_bins));
    if (bin >= n_bins) bin = n_bins - 1;
    if (bin < 0) bin = 0;
    ++bins[static_cast<std::size_t>(bin)];
  }
  return bins;
}

// Area under the ROC curve via the rank statistic; tied scores share average
// ranks, which credits ties at one half. Returns nothing for one-class input.
inline std::optional<double> rank_auc(std::span<const ScoredExample> examples) {
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return examples[a].score < examples[b].score; });
  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && examples[order[j]].score == examples[order[i]].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based average over [i+1, j]
    for (std::size_t k = i; k < j; ++k) {
      if (examples[order[k]].label == 1) {
        positive_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = examples.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double p = static_cast<double>(n_pos);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(n_neg));
}

inline CalibrationReport calibration_metrics(std::span<const ScoredExample> examples, int n_bins = 10) {
  if (examples.empty()) throw ConfigError("calibration metrics need a non-empty input");
  CalibrationReport report;
  std::vector<double> scores;
  scores.reserve(examples.size());
  for (const ScoredExample& e : examples) {
    if (e.label != 1 && e.label != -1) throw DataError("calibration label must be -1 or +1");
    report.nll += softplus_loss(e.score, e.label);
    const double y = e.label == 1 ? 1.0 : 0.0;
    const double diff = probability(e.score) - y;
    report.brier += diff * diff;
    scores.push_back(e.score);
  }
  report.nll /= static_cast<double>(examples.size());
  report.brier /= static_cast<double>(examples.size());
  report.auc = rank_auc(examples);
  report.histogram = probability_histogram(scores, n_bins);
  return report;
}

// ---------------------------------------------------------------------------
// Platt scaling

struct PlattParams {
  double a = 1.0;
  double b = 0.0;
  bool converged = true;
};

inline double platt_apply(const PlattParams& params, double score) {
  return sigmoid(params.a * score + params.b);
}

inline double platt_nll(std::span<const ScoredExample> examples, double a, double b) {
  double total = 0.0;
  for (const ScoredExample& e : examples) total += softplus_loss(a * e.score + b, e.label);
  return total / static_cast<double>(examples.size());
}

// Fits sigma(a*score + b) by minimizing the mean softplus NLL with damped
// Newton steps from (1, 0). The objective is convex; steps are halved until
// they do not increase it, so the result is never worse than the identity.
inline PlattParams platt_fit(std::span<const ScoredExample> examples) {
  if (examples.empty()) throw ConfigError("Platt scaling needs a non-empty input");
  bool has_pos = false, has_neg = false;
  for (const ScoredExample& e : examples) {
    if (e.label == 1) has_pos = true;
    else if (e.label == -1) has_neg = true;
    else throw DataError("calibration label must be -1 or +1");
  }
  if (!has_pos || !has_neg) throw ConfigError("Platt scaling needs both classes");

  PlattParams params;
  const double m = static_cast<double>(examples.size());
  double current = platt_nll(examples, params.a, params.b);
  for (int iter = 0; iter < 100; ++iter) {
    double ga = 0.0, gb = 0.0, haa = 0.0, hab = 0.0, hbb = 0.0;
    for (const ScoredExample& e : examples) {
      const double z = params.a * e.score + params.b;
      const double l = static_cast<double>(e.label);
      const double d = -l * sigmoid(-l * z);
      ga += d * e.score;
      gb += d;
      const double w = sigmoid(z) * (1.0 - sigmoid(z));
      haa += w * e.score * e.score;
      hab += w * e.score;
      hbb += w;
    }
    ga /= m;
    gb /= m;
    haa /= m;
    hab /= m;
    hbb /= m;
    if (std::sqrt(ga * ga + gb * gb) < 1e-8) {
      params.converged = true;
      return params;
    }
    double det = haa * hbb - hab * hab;
    if (!(det > 1e-18)) {
      haa += 1e-9;
      hbb += 1e-9;
      det = haa * hbb - hab * hab;
    }
    double step_a = -(hbb * ga - hab * gb) / det;
    double step_b = -(-hab * ga + haa * gb) / det;
    double scale = 1.0;
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      const double na = params.a + scale * step_a;
      const double nb = params.b + scale * step_b;
      const double candidate = platt_nll(examples, na, nb);
      if (candidate <= current) {
        params.a = na;
        params.b = nb;
        current = candidate;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;  // no descent direction left at this precision
  }
  double ga = 0.0, gb = 0.0;
  for (const ScoredExample& e : examples) {
    const double z = params.a * e.score + params.b;
    const double l = static_cast<double>(e.label);
    ga += -l * sigmoid(-l * z) * e.score;
    gb += -l * sigmoid(-l * z);
  }
  params.converged = std::sqrt(ga * ga + gb * gb) / m < 1e-8;
  return params;
}

}  // namespace spkg

#endif  // SPKG_EVALUATION_HPP
