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
#ifndef SPKG_CLI_HPP
#define SPKG_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spkg/core.hpp"
#include "spkg/data.hpp"
#include "spkg/evaluation.hpp"
#include "spkg/model.hpp"
#include "spkg/objectives.hpp"
#include "spkg/synthetic.hpp"
#include "spkg/trainer.hpp"

namespace spkg {

namespace cli_detail {

inline void require_readable(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open input file: " + path.string());
}

// Applies key=value lines from a config file to a parsed subcommand. Options
// already given on the command line keep their values. Keys are option names
// without the leading dashes; blank lines and #/; comments are ignored.
inline void apply_config_file(CLI::App* sub, const CLI::Option* config_opt) {
  if (config_opt->count() == 0) return;
  const std::string path = config_opt->as<std::string>();
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string at = path + " line " + std::to_string(line_no);
    std::string entry = CLI::detail::trim_copy(line);
    if (entry.empty() || entry[0] == '#' || entry[0] == ';') continue;
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos) throw ConfigError(at + ": expected key=value");
    const std::string key = CLI::detail::trim_copy(entry.substr(0, eq));
    std::string value = CLI::detail::trim_copy(entry.substr(eq + 1));
    if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                              (value.front() == '\'' && value.back() == '\''))) {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) throw ConfigError(at + ": empty key");
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) throw ConfigError(at + ": unknown key \"" + key + "\"");
    if (opt == config_opt) throw ConfigError(at + ": config files cannot set --config");
    if (opt->count() > 0) continue;
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError(at + ": " + e.what());
    }
  }
}

inline std::filesystem::path default_vocab_path(std::filesystem::path checkpoint) {
  checkpoint.replace_extension(".vocab");
  return checkpoint;
}

struct ResolvedSplit {
  std::vector<LabeledTriple> triples;
  bool labeled = false;
  std::size_t skipped = 0;
};

inline ResolvedSplit resolve_file(const std::filesystem::path& path, const Vocabulary& vocab,
                                  LoadPolicy policy) {
  const std::vector<RawTriple> records = read_triple_file(path);
  ResolvedSplit out;
  out.labeled = detect_labeled(records);
  LoadResult res = resolve_triples(records, vocab, policy);
  out.triples = std::move(res.triples);
  out.skipped = res.skipped;
  return out;
}

inline std::vector<Triple> positives_of(std::span<const LabeledTriple> triples) {
  std::vector<Triple> out;
  for (const LabeledTriple& lt : triples) {
    if (lt.label == 1) out.push_back(lt.triple);
  }
  return out;
}

// ---------------------------------------------------------------------------
// clean

struct CleanArgs {
  std::string train, valid, test, out_dir;
};

inline int run_clean(const CleanArgs& args) {
  require_readable(args.train);
  require_readable(args.valid);
  require_readable(args.test);
  const std::vector<RawTriple> train = read_triple_file(args.train);
  const std::vector<RawTriple> valid = read_triple_file(args.valid);
  const std::vector<RawTriple> test = read_triple_file(args.test);
  const CleanResult result = clean_splits(train, valid, test);

  const std::filesystem::path out(args.out_dir);
  write_raw_triples(out / "valid.tsv", result.valid);
  write_raw_triples(out / "test.tsv", result.test);
  {
    std::ofstream os = open_output(out / "clean_report.csv");
    os << "split,removed_count,unseen_entity\n";
    auto emit = [&os](const char* split, std::size_t removed, const std::set<std::string>& entities) {
      if (entities.empty()) {
        os << split << ',' << removed << ",\n";
        return;
      }
      for (const std::string& e : entities) os << split << ',' << removed << ',' << e << '\n';
    };
    emit("valid", result.report.removed_valid, result.report.unseen_valid_entities);
    emit("test", result.report.removed_test, result.report.unseen_test_entities);
    if (!os) throw DataError("failed writing clean report");
  }
  std::cout << "train: " << train.size() << " triples (vocabulary source, unchanged)\n";
  std::cout << "valid: kept " << result.valid.size() << ", removed " << result.report.removed_valid << " ("
            << result.report.unseen_valid_entities.size() << " unseen entities, "
            << result.report.unseen_valid_relations.size() << " unseen relations)\n";
  std::cout << "test: kept " << result.test.size() << ", removed " << result.report.removed_test << " ("
            << result.report.unseen_test_entities.size() << " unseen entities, "
            << result.report.unseen_test_relations.size() << " unseen relations)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string train, valid, test, out_dir;
  std::string model = "distmult";
  std::string objective = "sp";
  std::int32_t dim = 100;
  double lr = 0.1;
  double lambda = 0.1;
  double psi = 0.0;
  double cap_i = 5.0;
  std::int32_t p = 1;
  std::int32_t neg_ratio = 1;
  std::int32_t batch_size = 128;
  std::int32_t epochs = 100;
  double dropout = 0.0;
  double l2 = 0.0;
  std::uint64_t seed = 0;
  std::string sp_scope = "batch";
  std::string selection = "mrr";
  std::int32_t eval_every = 1;
  bool skip_unseen = false;
  bool constrained = true;
  // set after parsing: whether the flag appeared at all
  bool gave_neg_ratio = false;
  bool gave_lambda = false;
  bool gave_sp_scope = false;
  bool gave_p = false;
  bool gave_constraint = false;
};

inline TrainConfig build_train_config(const TrainArgs& args) {
  TrainConfig config;
  config.lr = args.lr;
  config.l2 = args.l2;
  config.dropout_p = args.dropout;
  config.batch_size = args.batch_size;
  config.epochs = args.epochs;
  config.seed = args.seed;
  config.eval_every = args.eval_every;
  config.selection_metric =
      args.selection == "nll" ? SelectionMetric::ValidNLL : SelectionMetric::ValidFilteredMRR;
  config.model.kind = parse_model_kind(args.model);
  config.model.dim = args.dim;
  config.model.score_cap = args.cap_i;
  config.model.psi = args.psi;
  config.model.seed = args.seed;
  // The tanh-bounded form is mandatory for sp training and the default there;
  // the neg baseline scores with the raw bilinear form unless asked otherwise.
  config.model.constrained = args.gave_constraint ? args.constrained : args.objective == "sp";
  config.objective.mode =
      args.objective == "neg" ? ObjectiveMode::NegSampling : ObjectiveMode::StayPositive;
  config.objective.neg_ratio = args.neg_ratio;
  config.objective.lambda = args.lambda;
  config.objective.p = args.p;
  config.objective.scope =
      args.sp_scope == "global" ? RegularizerScope::Global : RegularizerScope::Batch;
  return config;
}

inline void check_train_contradictions(const TrainArgs& args) {
  if (args.objective == "sp") {
    if (args.gave_neg_ratio) throw ConfigError("--neg-ratio applies to the neg objective only");
    if (args.gave_constraint && !args.constrained) {
      throw ConfigError("the sp objective requires bounded scores; drop --unconstrained");
    }
  } else {
    if (args.gave_lambda) throw ConfigError("--lambda applies to the sp objective only");
    if (args.gave_sp_scope) throw ConfigError("--sp-scope applies to the sp objective only");
    if (args.gave_p) throw ConfigError("--p applies to the sp objective only");
  }
}

inline int run_train(TrainArgs& args) {
  check_train_contradictions(args);
  if (args.objective == "neg") args.lambda = 0.0;
  require_readable(args.train);
  if (!args.valid.empty()) require_readable(args.valid);
  if (!args.test.empty()) require_readable(args.test);

  const LoadPolicy policy = args.skip_unseen ? LoadPolicy::Skip : LoadPolicy::Strict;
  DatasetLoadInfo info;
  const Dataset dataset = load_dataset(args.train, args.valid, args.test, policy, &info);
  if (info.skipped_valid + info.skipped_test > 0) {
    std::cout << "skipped " << info.skipped_valid << " valid and " << info.skipped_test
              << " test triples with unseen names\n";
  }
  const TrainConfig config = build_train_config(args);
  const TrainResult result = train(dataset, config);

  const std::filesystem::path out(args.out_dir);
  save_checkpoint(result.model, out / "model.ckpt");
  save_vocabulary(dataset.vocab, out / "model.vocab");
  write_history_csv(out / "history.csv", result.history);

  std::cout << "trained " << result.history.size() << " epochs on " << dataset.train.size()
            << " triples (|E|=" << dataset.n_entities() << ", |R|=" << dataset.n_relations() << ")\n";
  if (result.best_metric.has_value()) {
    std::cout << "best epoch " << result.best_epoch << ": " << to_string(config.selection_metric) << " = "
              << fmt_double(*result.best_metric, 6) << '\n';
  }
  std::cout << "checkpoint: " << (out / "model.ckpt").string() << '\n';
  if (result.aborted) {
    std::cerr << "training aborted: " << result.abort_reason << " (last stable parameters kept)\n";
    return 3;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string checkpoint, vocab, train, valid, test, out_dir;
  std::string metrics = "both";
  bool filtered = true;
  std::int32_t bins = 10;
  bool skip_unseen = false;
};

inline void write_metric_rows(std::ofstream& os, const char* family, const RankingReport& r) {
  os << family << ",mrr_raw," << fmt_double(r.mrr_raw) << '\n';
  os << family << ",mrr_filtered," << fmt_double(r.mrr_filtered) << '\n';
  os << family << ",hit1_raw," << fmt_double(r.hit1_raw) << '\n';
  os << family << ",hit3_raw," << fmt_double(r.hit3_raw) << '\n';
  os << family << ",hit10_raw," << fmt_double(r.hit10_raw) << '\n';
  os << family << ",hit1_filtered," << fmt_double(r.hit1_filtered) << '\n';
  os << family << ",hit3_filtered," << fmt_double(r.hit3_filtered) << '\n';
  os << family << ",hit10_filtered," << fmt_double(r.hit10_filtered) << '\n';
}

inline int run_eval(const EvalArgs& args) {
  const bool want_ranking = args.metrics == "ranking" || args.metrics == "both";
  const bool want_calibration = args.metrics == "calibration" || args.metrics == "both";
  require_readable(args.checkpoint);
  const std::filesystem::path vocab_path =
      args.vocab.empty() ? default_vocab_path(args.checkpoint) : std::filesystem::path(args.vocab);
  require_readable(vocab_path);
  require_readable(args.train);
  if (!args.valid.empty()) require_readable(args.valid);
  require_readable(args.test);

  const EmbeddingModel model = load_checkpoint(args.checkpoint);
  const Vocabulary vocab = load_vocabulary(vocab_path);
  if (static_cast<std::int32_t>(vocab.n_entities()) != model.n_entities ||
      static_cast<std::int32_t>(vocab.n_relations()) != model.n_relations) {
    throw DataError("vocabulary sizes do not match the checkpoint");
  }

  const LoadPolicy policy = args.skip_unseen ? LoadPolicy::Skip : LoadPolicy::Strict;
  const ResolvedSplit train = resolve_file(args.train, vocab, policy);
  ResolvedSplit valid;
  if (!args.valid.empty()) valid = resolve_file(args.valid, vocab, policy);
  const ResolvedSplit test = resolve_file(args.test, vocab, policy);
  if (want_calibration && !test.labeled) {
    throw ConfigError("calibration metrics need a labeled test split");
  }

  Dataset dataset;
  dataset.vocab = vocab;
  dataset.train = positives_of(train.triples);
  dataset.valid = valid.triples;
  dataset.test = test.triples;
  dataset.labeled_valid = valid.labeled;
  dataset.labeled_test = test.labeled;

  RankingReport ranking;
  if (want_ranking) {
    const std::vector<Triple> test_positives = positives_of(dataset.test);
    const TripleSet filter = args.filtered ? build_filter_set(dataset) : TripleSet{};
    ranking = ranking_metrics(model, test_positives, filter);
  }
  CalibrationReport calibration;
  std::vector<ScoredExample> examples;
  if (want_calibration) {
    examples.reserve(dataset.test.size());
    for (const LabeledTriple& lt : dataset.test) {
      examples.push_back({predict_score(model, lt.triple), lt.label});
    }
    calibration = calibration_metrics(examples, args.bins);
  }

  const std::filesystem::path out(args.out_dir);
  {
    std::ofstream os = open_output(out / "eval_metrics.csv");
    os << "metric,name,value\n";
    if (want_ranking) write_metric_rows(os, "ranking", ranking);
    if (want_calibration) {
      os << "calibration,nll," << fmt_double(calibration.nll) << '\n';
      os << "calibration,brier," << fmt_double(calibration.brier) << '\n';
      os << "calibration,auc,";
      if (calibration.auc.has_value()) os << fmt_double(*calibration.auc);
      os << '\n';
      for (std::size_t i = 0; i < calibration.histogram.size(); ++i) {
        os << "histogram,bin_" << i << ',' << calibration.histogram[i] << '\n';
      }
    }
    if (!os) throw DataError("failed writing eval metrics");
  }
  if (want_calibration) {
    std::ofstream os = open_output(out / "probabilities.csv");
    os << "triple_index,label,probability\n";
    for (std::size_t i = 0; i < examples.size(); ++i) {
      os << i << ',' << examples[i].label << ',' << fmt_double(probability(examples[i].score)) << '\n';
    }
    if (!os) throw DataError("failed writing probabilities");
  }

  if (want_ranking) {
    std::cout << "ranking over " << positives_of(dataset.test).size() << " test positives\n";
    std::cout << "  mrr raw " << fmt_double(ranking.mrr_raw, 6) << ", filtered "
              << fmt_double(ranking.mrr_filtered, 6) << '\n';
    std::cout << "  hit@1/3/10 filtered " << fmt_double(ranking.hit1_filtered, 6) << ' '
              << fmt_double(ranking.hit3_filtered, 6) << ' ' << fmt_double(ranking.hit10_filtered, 6)
              << '\n';
  }
  if (want_calibration) {
    std::cout << "calibration over " << examples.size() << " labeled test triples\n";
    std::cout << "  nll " << fmt_double(calibration.nll, 6) << ", brier "
              << fmt_double(calibration.brier, 6);
    if (calibration.auc.has_value()) std::cout << ", auc " << fmt_double(*calibration.auc, 6);
    std::cout << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateArgs {
  std::string checkpoint, vocab, valid, test, out_dir;
  bool skip_unseen = false;
};

inline int run_calibrate(const CalibrateArgs& args) {
  require_readable(args.checkpoint);
  const std::filesystem::path vocab_path =
      args.vocab.empty() ? default_vocab_path(args.checkpoint) : std::filesystem::path(args.vocab);
  require_readable(vocab_path);
  require_readable(args.valid);
  require_readable(args.test);

  const EmbeddingModel model = load_checkpoint(args.checkpoint);
  const Vocabulary vocab = load_vocabulary(vocab_path);
  if (static_cast<std::int32_t>(vocab.n_entities()) != model.n_entities ||
      static_cast<std::int32_t>(vocab.n_relations()) != model.n_relations) {
    throw DataError("vocabulary sizes do not match the checkpoint");
  }
  const LoadPolicy policy = args.skip_unseen ? LoadPolicy::Skip : LoadPolicy::Strict;
  const ResolvedSplit valid = resolve_file(args.valid, vocab, policy);
  const ResolvedSplit test = resolve_file(args.test, vocab, policy);
  if (!valid.labeled || !test.labeled) throw ConfigError("calibrate needs labeled valid and test splits");
  if (test.triples.empty()) throw ConfigError("calibrate needs a non-empty test split");

  auto score_all = [&model](std::span<const LabeledTriple> triples) {
    std::vector<ScoredExample> out;
    out.reserve(triples.size());
    for (const LabeledTriple& lt : triples) out.push_back({predict_score(model, lt.triple), lt.label});
    return out;
  };
  const std::vector<ScoredExample> valid_examples = score_all(valid.triples);
  std::vector<ScoredExample> test_examples = score_all(test.triples);

  const PlattParams params = platt_fit(valid_examples);
  const CalibrationReport pre = calibration_metrics(test_examples);
  for (ScoredExample& e : test_examples) e.score = params.a * e.score + params.b;
  const CalibrationReport post = calibration_metrics(test_examples);

  const std::filesystem::path out(args.out_dir);
  {
    std::ofstream os = open_output(out / "platt.csv");
    os << "a,b,converged\n";
    os << fmt_double(params.a) << ',' << fmt_double(params.b) << ',' << (params.converged ? 1 : 0)
       << '\n';
  }
  {
    std::ofstream os = open_output(out / "calibration_report.csv");
    os << "stage,name,value\n";
    os << "pre,nll," << fmt_double(pre.nll) << '\n';
    os << "pre,brier," << fmt_double(pre.brier) << '\n';
    os << "post,nll," << fmt_double(post.nll) << '\n';
    os << "post,brier," << fmt_double(post.brier) << '\n';
    if (!os) throw DataError("failed writing calibration report");
  }
  std::cout << "platt fit: a = " << fmt_double(params.a, 6) << ", b = " << fmt_double(params.b, 6)
            << (params.converged ? "" : " (not converged)") << '\n';
  std::cout << "test nll " << fmt_double(pre.nll, 6) << " -> " << fmt_double(post.nll, 6) << ", brier "
            << fmt_double(pre.brier, 6) << " -> " << fmt_double(post.brier, 6) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string train, out_dir;
  std::vector<std::int32_t> neg_ratios = {1, 10};
  std::string model = "simple";
  std::int32_t dim = 100;
  std::int32_t epochs_per_point = 1;
  std::int32_t batch_size = 100;
  double lr = 0.1;
  double lambda = 0.1;
  std::uint64_t seed = 0;
};

struct BenchRun {
  double total_ms = 0.0;
  double sampling_ms = 0.0;
  std::uint64_t score_evals = 0;
};

inline BenchRun bench_run(const Dataset& dataset, const TrainConfig& config) {
  EmbeddingModel model =
      init_embeddings(config.model, static_cast<std::int32_t>(dataset.n_entities()),
                      static_cast<std::int32_t>(dataset.n_relations()));
  AdaGradState state(config.model.dim);
  BenchRun run;
  for (std::int32_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const EpochReport report = train_epoch(model, dataset.train, config, state, epoch);
    run.total_ms += report.total_ms;
    run.sampling_ms += report.sampling_ms;
  }
  run.total_ms /= static_cast<double>(config.epochs);
  run.sampling_ms /= static_cast<double>(config.epochs);
  run.score_evals = model.counters.score_evals.load(std::memory_order_relaxed);
  return run;
}

inline int run_bench(const BenchArgs& args) {
  if (args.epochs_per_point < 1) throw ConfigError("epochs-per-point must be >= 1");
  require_readable(args.train);
  const std::vector<RawTriple> records = read_triple_file(args.train);
  const Dataset dataset = make_dataset(records, {}, {}, LoadPolicy::Strict, nullptr);

  TrainConfig base;
  base.lr = args.lr;
  base.epochs = args.epochs_per_point;
  base.seed = args.seed;
  base.model.kind = parse_model_kind(args.model);
  base.model.dim = args.dim;
  base.model.seed = args.seed;

  const std::filesystem::path out(args.out_dir);
  std::ofstream os = open_output(out / "bench.csv");
  os << "n,neg_total_ms,neg_sampling_ms,neg_rest_ms,sp_total_ms,reduction_pct,neg_score_evals,"
        "sp_score_evals\n";
  for (std::int32_t n : args.neg_ratios) {
    if (n < 1) throw ConfigError("negative ratios must be >= 1");
    TrainConfig neg = base;
    neg.batch_size = args.batch_size;
    neg.objective.mode = ObjectiveMode::NegSampling;
    neg.objective.neg_ratio = n;
    const BenchRun neg_run = bench_run(dataset, neg);

    TrainConfig sp = base;
    sp.batch_size = args.batch_size * (n + 1);
    sp.objective.mode = ObjectiveMode::StayPositive;
    sp.objective.lambda = args.lambda;
    const BenchRun sp_run = bench_run(dataset, sp);

    const double reduction = 100.0 * (neg_run.total_ms - sp_run.total_ms) / neg_run.total_ms;
    os << n << ',' << fmt_double(neg_run.total_ms, 6) << ',' << fmt_double(neg_run.sampling_ms, 6) << ','
       << fmt_double(neg_run.total_ms - neg_run.sampling_ms, 6) << ',' << fmt_double(sp_run.total_ms, 6)
       << ',' << fmt_double(reduction, 6) << ',' << neg_run.score_evals << ',' << sp_run.score_evals
       << '\n';
    std::cout << "n=" << n << ": neg " << fmt_double(neg_run.total_ms, 4) << " ms/epoch ("
              << fmt_double(100.0 * neg_run.sampling_ms / neg_run.total_ms, 3) << "% sampling), sp "
              << fmt_double(sp_run.total_ms, 4) << " ms/epoch, reduction "
              << fmt_double(reduction, 3) << "%\n";
  }
  if (!os) throw DataError("failed writing bench csv");
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string kind = "pattern";
  std::string out_dir;
  std::uint64_t seed = 0;
  std::int32_t entities = 10000;
  std::int32_t relations = 10;
  std::uint64_t triples = 100000;
};

inline int run_synth(const SynthArgs& args) {
  const std::filesystem::path out(args.out_dir);
  if (args.kind == "pattern") {
    const Dataset ds = make_pattern_kg(args.seed);
    write_triples_tsv(out / "train.tsv", ds.vocab, ds.train);
    write_triples_tsv(out / "test.tsv", ds.vocab, positives_of(ds.test));
    std::cout << "pattern KG: " << ds.n_entities() << " entities, " << ds.n_relations() << " relations, "
              << ds.train.size() << " train / " << ds.test.size() << " test triples\n";
    return 0;
  }
  const Dataset ds = make_random_kg(args.entities, args.relations, args.triples, args.seed);
  write_triples_tsv(out / "train.tsv", ds.vocab, ds.train);
  std::cout << "random KG: " << ds.n_entities() << " entities, " << ds.n_relations() << " relations, "
            << ds.train.size() << " train triples\n";
  return 0;
}

}  // namespace cli_detail

// Builds the command-line application and runs one command. Exit codes:
// 0 success, 1 usage/config error, 2 data error, 3 numeric failure.
inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Knowledge-graph embedding toolkit: bilinear link prediction trained with negative "
               "sampling or a factorized score-sum regularizer"};
  app.require_subcommand(1);

  cli_detail::CleanArgs clean_args;
  CLI::App* clean = app.add_subcommand(
      "clean", "Drop validation/test triples whose entities or relations never occur in train");
  CLI::Option* clean_cfg =
      clean->add_option("--config", "key=value config file; command-line flags override");
  clean->add_option("--train", clean_args.train, "train TSV")->required();
  clean->add_option("--valid", clean_args.valid, "validation TSV")->required();
  clean->add_option("--test", clean_args.test, "test TSV")->required();
  clean->add_option("--out-dir", clean_args.out_dir, "output directory")->required();

  cli_detail::TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train an embedding model");
  CLI::Option* train_cfg =
      train->add_option("--config", "key=value config file; command-line flags override");
  train->add_option("--train", train_args.train, "train TSV")->required();
  train->add_option("--valid", train_args.valid, "validation TSV (plain or labeled)");
  train->add_option("--test", train_args.test, "test TSV, used only for the ranking filter");
  train->add_option("--out-dir", train_args.out_dir, "output directory")->required();
  train->add_option("--model", train_args.model, "model kind")
      ->check(CLI::IsMember({"distmult", "simple"}));
  train->add_option("--objective", train_args.objective, "training objective")
      ->check(CLI::IsMember({"neg", "sp"}));
  train->add_option("--dim", train_args.dim, "embedding width");
  train->add_option("--lr", train_args.lr, "AdaGrad learning rate");
  CLI::Option* opt_lambda = train->add_option("--lambda", train_args.lambda, "regularizer weight (sp)");
  train->add_option("--psi", train_args.psi, "prior score shift");
  train->add_option("--cap-I", train_args.cap_i, "score bound I");
  CLI::Option* opt_p = train->add_option("--p", train_args.p, "regularizer norm order (sp)");
  CLI::Option* opt_neg_ratio =
      train->add_option("--neg-ratio", train_args.neg_ratio, "negatives per positive (neg)");
  train->add_option("--batch-size", train_args.batch_size, "mini-batch size");
  train->add_option("--epochs", train_args.epochs, "training epochs");
  train->add_option("--dropout", train_args.dropout, "gradient dropout probability");
  train->add_option("--l2", train_args.l2, "L2 weight decay");
  train->add_option("--seed", train_args.seed, "random seed");
  CLI::Option* opt_sp_scope =
      train->add_option("--sp-scope", train_args.sp_scope, "regularizer scope (sp)")
          ->check(CLI::IsMember({"batch", "global"}));
  train->add_option("--selection", train_args.selection, "best-epoch metric")
      ->check(CLI::IsMember({"mrr", "nll"}));
  train->add_option("--eval-every", train_args.eval_every, "validation cadence in epochs");
  train->add_flag("--skip-unseen", train_args.skip_unseen,
                  "drop valid/test triples with unseen names instead of failing");
  CLI::Option* opt_constraint =
      train->add_flag("--constrained,!--unconstrained", train_args.constrained,
                      "tanh-bounded scores (default: on for sp, off for neg)");

  cli_detail::EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  CLI::Option* eval_cfg =
      eval->add_option("--config", "key=value config file; command-line flags override");
  eval->add_option("--checkpoint", eval_args.checkpoint, "model checkpoint")->required();
  eval->add_option("--vocab", eval_args.vocab, "vocabulary sidecar (default: checkpoint with .vocab)");
  eval->add_option("--train", eval_args.train, "train TSV (ranking filter)")->required();
  eval->add_option("--valid", eval_args.valid, "validation TSV (ranking filter)");
  eval->add_option("--test", eval_args.test, "test TSV")->required();
  eval->add_option("--out-dir", eval_args.out_dir, "output directory")->required();
  eval->add_option("--metrics", eval_args.metrics, "which metric families to compute")
      ->check(CLI::IsMember({"ranking", "calibration", "both"}));
  eval->add_flag("--filtered,!--no-filtered", eval_args.filtered,
                 "exclude known-true competitors from ranking");
  eval->add_option("--bins", eval_args.bins, "probability histogram bins");
  eval->add_flag("--skip-unseen", eval_args.skip_unseen, "drop triples with unseen names");

  cli_detail::CalibrateArgs cal_args;
  CLI::App* calibrate = app.add_subcommand("calibrate", "Fit Platt scaling on labeled validation data");
  CLI::Option* cal_cfg =
      calibrate->add_option("--config", "key=value config file; command-line flags override");
  calibrate->add_option("--checkpoint", cal_args.checkpoint, "model checkpoint")->required();
  calibrate->add_option("--vocab", cal_args.vocab, "vocabulary sidecar (default: checkpoint with .vocab)");
  calibrate->add_option("--valid", cal_args.valid, "labeled validation TSV")->required();
  calibrate->add_option("--test", cal_args.test, "labeled test TSV")->required();
  calibrate->add_option("--out-dir", cal_args.out_dir, "output directory")->required();
  calibrate->add_flag("--skip-unseen", cal_args.skip_unseen, "drop triples with unseen names");

  cli_detail::BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand("bench", "Compare epoch times of the two objectives");
  CLI::Option* bench_cfg =
      bench->add_option("--config", "key=value config file; command-line flags override");
  bench->add_option("--train", bench_args.train, "train TSV")->required();
  bench->add_option("--out-dir", bench_args.out_dir, "output directory")->required();
  bench->add_option("--neg-ratios", bench_args.neg_ratios, "negative ratios to benchmark")
      ->delimiter(',');
  bench->add_option("--model", bench_args.model, "model kind")
      ->check(CLI::IsMember({"distmult", "simple"}));
  bench->add_option("--dim", bench_args.dim, "embedding width");
  bench->add_option("--epochs-per-point", bench_args.epochs_per_point, "epochs averaged per ratio");
  bench->add_option("--batch-size", bench_args.batch_size, "positive batch size B");
  bench->add_option("--lr", bench_args.lr, "AdaGrad learning rate");
  bench->add_option("--lambda", bench_args.lambda, "regularizer weight for the sp runs");
  bench->add_option("--seed", bench_args.seed, "random seed");

  cli_detail::SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "Generate synthetic datasets");
  CLI::Option* synth_cfg =
      synth->add_option("--config", "key=value config file; command-line flags override");
  synth->add_option("--kind", synth_args.kind, "pattern: 20-entity compositional KG; random: uniform")
      ->check(CLI::IsMember({"pattern", "random"}));
  synth->add_option("--out-dir", synth_args.out_dir, "output directory")->required();
  synth->add_option("--seed", synth_args.seed, "random seed");
  synth->add_option("--entities", synth_args.entities, "entity count (random)");
  synth->add_option("--relations", synth_args.relations, "relation count (random)");
  synth->add_option("--triples", synth_args.triples, "triple count (random)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const std::pair<CLI::App*, CLI::Option*> config_pairs[] = {
        {clean, clean_cfg}, {train, train_cfg}, {eval, eval_cfg},
        {calibrate, cal_cfg}, {bench, bench_cfg}, {synth, synth_cfg}};
    for (const auto& [sub, copt] : config_pairs) {
      if (sub->parsed()) cli_detail::apply_config_file(sub, copt);
    }
    train_args.gave_neg_ratio = opt_neg_ratio->count() > 0;
    train_args.gave_lambda = opt_lambda->count() > 0;
    train_args.gave_sp_scope = opt_sp_scope->count() > 0;
    train_args.gave_p = opt_p->count() > 0;
    train_args.gave_constraint = opt_constraint->count() > 0;
    if (clean->parsed()) return cli_detail::run_clean(clean_args);
    if (train->parsed()) return cli_detail::run_train(train_args);
    if (eval->parsed()) return cli_detail::run_eval(eval_args);
    if (calibrate->parsed()) return cli_detail::run_calibrate(cal_args);
    if (bench->parsed()) return cli_detail::run_bench(bench_args);
    if (synth->parsed()) return cli_detail::run_synth(synth_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace spkg

#endif  // SPKG_CLI_HPP
