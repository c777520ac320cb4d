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
#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "spkg/cli.hpp"
#include "test_util.hpp"

using namespace spkg;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

int run(std::initializer_list<std::string> args) {
  std::vector<std::string> store{"spkg"};
  store.insert(store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(store.size());
  for (const std::string& s : store) argv.push_back(s.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  return lines;
}

// Returns the value field of a metric,name,value row.
double csv_value(const std::string& csv, const std::string& prefix) {
  for (const std::string& line : split_lines(csv)) {
    if (line.rfind(prefix + ",", 0) == 0) return std::stod(line.substr(prefix.size() + 1));
  }
  throw std::runtime_error("row not found: " + prefix);
}

void write_pattern_files(const fs::path& dir, std::uint64_t seed) {
  REQUIRE(run({"synth", "--kind", "pattern", "--seed", std::to_string(seed), "--out-dir",
               dir.string()}) == 0);
}

}  // namespace

TEST_CASE("command line surface", "[cli]") {
  SECTION("missing subcommand fails with a usage error") { CHECK(run({}) == 1); }
  SECTION("unknown flags fail with a usage error") {
    CHECK(run({"train", "--no-such-flag"}) == 1);
  }
  SECTION("bad enum values are rejected at parse time") {
    spkg_test::TempDir tmp;
    CHECK(run({"train", "--train", "x.tsv", "--out-dir", tmp.path().string(), "--model",
               "transformer"}) == 1);
  }
  SECTION("missing input files exit with the data error code") {
    spkg_test::TempDir tmp;
    CHECK(run({"train", "--train", (tmp.path() / "absent.tsv").string(), "--out-dir",
               tmp.path().string()}) == 2);
  }
  SECTION("malformed input files exit with the data error code") {
    spkg_test::TempDir tmp;
    spkg_test::write_file(tmp.path() / "bad.tsv", "only\ttwo\n");
    CHECK(run({"train", "--train", (tmp.path() / "bad.tsv").string(), "--out-dir",
               (tmp.path() / "out").string()}) == 2);
  }
}

TEST_CASE("synthetic data generation command", "[cli]") {
  spkg_test::TempDir tmp;
  SECTION("pattern graph writes both splits") {
    write_pattern_files(tmp.path(), 0);
    CHECK(split_lines(spkg_test::read_file(tmp.path() / "train.tsv")).size() == 80);
    CHECK(split_lines(spkg_test::read_file(tmp.path() / "test.tsv")).size() == 20);
  }
  SECTION("random graph writes train only") {
    REQUIRE(run({"synth", "--kind", "random", "--entities", "12", "--relations", "2", "--triples",
                 "50", "--out-dir", tmp.path().string()}) == 0);
    CHECK(split_lines(spkg_test::read_file(tmp.path() / "train.tsv")).size() == 50);
    CHECK_FALSE(fs::exists(tmp.path() / "test.tsv"));
  }
}

TEST_CASE("cleaning command", "[cli]") {
  spkg_test::TempDir tmp;
  const fs::path in = tmp.path() / "in";
  const fs::path out = tmp.path() / "out";
  fs::create_directories(in);
  spkg_test::write_file(in / "train.tsv", "a\tr\tb\nb\tr\tc\n");
  spkg_test::write_file(in / "valid.tsv", "a\tr\tc\nghost\tr\tb\n");
  spkg_test::write_file(in / "test.tsv", "c\tr\ta\na\tphantom\tb\nb\tr\tnew1\n");

  REQUIRE(run({"clean", "--train", (in / "train.tsv").string(), "--valid",
               (in / "valid.tsv").string(), "--test", (in / "test.tsv").string(), "--out-dir",
               out.string()}) == 0);

  SECTION("kept rows are byte-identical to their input lines") {
    CHECK(spkg_test::read_file(out / "valid.tsv") == "a\tr\tc\n");
    CHECK(spkg_test::read_file(out / "test.tsv") == "c\tr\ta\n");
  }
  SECTION("report lists removal counts and unseen entities") {
    CHECK(spkg_test::read_file(out / "clean_report.csv") ==
          "split,removed_count,unseen_entity\n"
          "valid,1,ghost\n"
          "test,2,new1\n");
  }
}

TEST_CASE("training command round trip", "[cli]") {
  spkg_test::TempDir tmp;
  const fs::path data = tmp.path() / "data";
  const fs::path out = tmp.path() / "run";
  write_pattern_files(data, 1);

  REQUIRE(run({"train", "--train", (data / "train.tsv").string(), "--out-dir", out.string(),
               "--model", "simple", "--dim", "8", "--epochs", "3", "--psi=-1", "--seed",
               "5"}) == 0);

  SECTION("checkpoint carries the requested configuration") {
    const EmbeddingModel model = load_checkpoint(out / "model.ckpt");
    CHECK(model.config.kind == ModelKind::SimplE);
    CHECK(model.config.dim == 8);
    CHECK(model.config.psi == -1.0);
    CHECK(model.config.score_cap == 5.0);
    CHECK(model.config.constrained);
    CHECK(model.n_entities == 20);
    CHECK(model.n_relations == 2);
  }
  SECTION("vocabulary sidecar resolves the original names") {
    const Vocabulary vocab = load_vocabulary(out / "model.vocab");
    CHECK(vocab.n_entities() == 20);
    CHECK(vocab.entity_id("e07").has_value());
    CHECK(vocab.relation_id("r1").has_value());
  }
  SECTION("history has one row per epoch") {
    auto lines = split_lines(spkg_test::read_file(out / "history.csv"));
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "epoch,loss,total_ms,sampling_ms,rest_ms,valid_metric");
    CHECK(lines[1].rfind("1,", 0) == 0);
    CHECK(lines[3].rfind("3,", 0) == 0);
  }
  SECTION("repeated runs reproduce the checkpoint bit for bit") {
    const fs::path out2 = tmp.path() / "run2";
    REQUIRE(run({"train", "--train", (data / "train.tsv").string(), "--out-dir", out2.string(),
                 "--model", "simple", "--dim", "8", "--epochs", "3", "--psi=-1", "--seed",
                 "5"}) == 0);
    CHECK(spkg_test::read_file(out / "model.ckpt") == spkg_test::read_file(out2 / "model.ckpt"));
  }
}

TEST_CASE("contradictory objective flags fail before any work", "[cli]") {
  spkg_test::TempDir tmp;
  const fs::path data = tmp.path() / "data";
  const fs::path out = tmp.path() / "out";
  write_pattern_files(data, 0);
  const std::string train_tsv = (data / "train.tsv").string();

  CHECK(run({"train", "--train", train_tsv, "--out-dir", out.string(), "--objective", "sp",
             "--neg-ratio", "5"}) == 1);
  CHECK(run({"train", "--train", train_tsv, "--out-dir", out.string(), "--objective", "sp",
             "--unconstrained"}) == 1);
  CHECK(run({"train", "--train", train_tsv, "--out-dir", out.string(), "--objective", "neg",
             "--lambda", "0.5"}) == 1);
  CHECK(run({"train", "--train", train_tsv, "--out-dir", out.string(), "--objective", "neg",
             "--sp-scope", "global"}) == 1);
  CHECK(run({"train", "--train", train_tsv, "--out-dir", out.string(), "--objective", "neg",
             "--p", "2"}) == 1);
  CHECK_FALSE(fs::exists(out / "model.ckpt"));
}

TEST_CASE("score constraint defaults to the objective's convention", "[cli]") {
  spkg_test::TempDir tmp;
  const fs::path data = tmp.path() / "data";
  write_pattern_files(data, 0);
  const std::string train_tsv = (data / "train.tsv").string();

  const fs::path neg_out = tmp.path() / "neg_default";
  REQUIRE(run({"train", "--train", train_tsv, "--out-dir", neg_out.string(), "--objective", "neg",
               "--dim", "4", "--epochs", "1"}) == 0);
  CHECK_FALSE(load_checkpoint(neg_out / "model.ckpt").config.constrained);

  const fs::path neg_on = tmp.path() / "neg_constrained";
  REQUIRE(run({"train", "--train", train_tsv, "--out-dir", neg_on.string(), "--objective", "neg",
               "--dim", "4", "--epochs", "1", "--constrained"}) == 0);
  CHECK(load_checkpoint(neg_on / "model.ckpt").config.constrained);

  const fs::path sp_out = tmp.path() / "sp_default";
  REQUIRE(run({"train", "--train", train_tsv, "--out-dir", sp_out.string(), "--objective", "sp",
               "--dim", "4", "--epochs", "1"}) == 0);
  CHECK(load_checkpoint(sp_out / "model.ckpt").config.constrained);
}

TEST_CASE("evaluation command", "[cli]") {
  spkg_test::TempDir tmp;
  const fs::path data = tmp.path() / "data";
  const fs::path run_dir = tmp.path() / "run";
  write_pattern_files(data, 2);
  REQUIRE(run({"train", "--train", (data / "train.tsv").string(), "--out-dir", run_dir.string(),
               "--dim", "8", "--epochs", "5", "--seed", "3"}) == 0);
  const std::string ckpt = (run_dir / "model.ckpt").string();
  const std::string train_tsv = (data / "train.tsv").string();
  const std::string test_tsv = (data / "test.tsv").string();

  SECTION("ranking metrics on an unlabeled test split") {
    const fs::path out = tmp.path() / "eval";
    REQUIRE(run({"eval", "--checkpoint", ckpt, "--train", train_tsv, "--test", test_tsv,
                 "--out-dir", out.string(), "--metrics", "ranking"}) == 0);
    const std::string csv = spkg_test::read_file(out / "eval_metrics.csv");
    CHECK(split_lines(csv)[0] == "metric,name,value");
    const double mrr_raw = csv_value(csv, "ranking,mrr_raw");
    const double mrr_filtered = csv_value(csv, "ranking,mrr_filtered");
    CHECK(mrr_raw > 0.0);
    CHECK(mrr_raw <= 1.0);
    CHECK(mrr_filtered >= mrr_raw);
    CHECK_FALSE(fs::exists(out / "probabilities.csv"));
  }
  SECTION("evaluation output is deterministic") {
    const fs::path out1 = tmp.path() / "eval1";
    const fs::path out2 = tmp.path() / "eval2";
    for (const fs::path& out : {out1, out2}) {
      REQUIRE(run({"eval", "--checkpoint", ckpt, "--train", train_tsv, "--test", test_tsv,
                   "--out-dir", out.string(), "--metrics", "ranking"}) == 0);
    }
    CHECK(spkg_test::read_file(out1 / "eval_metrics.csv") ==
          spkg_test::read_file(out2 / "eval_metrics.csv"));
  }
  SECTION("disabling the filter collapses filtered onto raw") {
    const fs::path out = tmp.path() / "eval_nofilter";
    REQUIRE(run({"eval", "--checkpoint", ckpt, "--train", train_tsv, "--test", test_tsv,
                 "--out-dir", out.string(), "--metrics", "ranking", "--no-filtered"}) == 0);
    const std::string csv = spkg_test::read_file(out / "eval_metrics.csv");
    CHECK(csv_value(csv, "ranking,mrr_raw") == csv_value(csv, "ranking,mrr_filtered"));
    CHECK(csv_value(csv, "ranking,hit3_raw") == csv_value(csv, "ranking,hit3_filtered"));
  }
  SECTION("calibration requires labels") {
    const fs::path out = tmp.path() / "eval_cal_fail";
    CHECK(run({"eval", "--checkpoint", ckpt, "--train", train_tsv, "--test", test_tsv,
               "--out-dir", out.string(), "--metrics", "calibration"}) == 1);
  }
  SECTION("calibration metrics and probabilities on a labeled test split") {
    const fs::path labeled = tmp.path() / "labeled_test.tsv";
    spkg_test::write_file(labeled,
                          "e00\tr0\te01\t1\ne00\tr0\te09\t-1\ne04\tr0\te05\t1\ne12\tr1\te00\t-1\n");
    const fs::path out = tmp.path() / "eval_cal";
    REQUIRE(run({"eval", "--checkpoint", ckpt, "--train", train_tsv, "--test", labeled.string(),
                 "--out-dir", out.string(), "--metrics", "calibration", "--bins", "4"}) == 0);
    const std::string csv = spkg_test::read_file(out / "eval_metrics.csv");
    CHECK(csv_value(csv, "calibration,nll") > 0.0);
    CHECK(csv_value(csv, "calibration,brier") >= 0.0);
    std::uint64_t total = 0;
    for (int b = 0; b < 4; ++b) {
      total += static_cast<std::uint64_t>(csv_value(csv, "histogram,bin_" + std::to_string(b)));
    }
    CHECK(total == 4);
    auto prob_lines = split_lines(spkg_test::read_file(out / "probabilities.csv"));
    REQUIRE(prob_lines.size() == 5);
    CHECK(prob_lines[0] == "triple_index,label,probability");
    CHECK(prob_lines[1].rfind("0,1,", 0) == 0);
    CHECK(prob_lines[2].rfind("1,-1,", 0) == 0);
  }
  SECTION("unseen names fail strictly but pass with the skip flag") {
    const fs::path odd = tmp.path() / "odd_test.tsv";
    spkg_test::write_file(odd, "e00\tr0\te01\nmystery\tr0\te01\n");
    const fs::path out = tmp.path() / "eval_odd";
    CHECK(run({"eval", "--checkpoint", ckpt, "--train", train_tsv, "--test", odd.string(),
               "--out-dir", out.string(), "--metrics", "ranking"}) == 2);
    CHECK(run({"eval", "--checkpoint", ckpt, "--train", train_tsv, "--test", odd.string(),
               "--out-dir", out.string(), "--metrics", "ranking", "--skip-unseen"}) == 0);
  }
  SECTION("vocabulary checkpoint size mismatch is a data error") {
    const fs::path other = tmp.path() / "other";
    spkg_test::write_file(tmp.path() / "tiny.tsv", "x\tr\ty\n");
    REQUIRE(run({"train", "--train", (tmp.path() / "tiny.tsv").string(), "--out-dir",
                 other.string(), "--dim", "4", "--epochs", "1"}) == 0);
    const fs::path out = tmp.path() / "eval_mismatch";
    CHECK(run({"eval", "--checkpoint", ckpt, "--vocab", (other / "model.vocab").string(),
               "--train", train_tsv, "--test", test_tsv, "--out-dir", out.string()}) == 2);
  }
}

TEST_CASE("calibration command", "[cli]") {
  spkg_test::TempDir tmp;
  const fs::path data = tmp.path() / "data";
  const fs::path run_dir = tmp.path() / "run";
  write_pattern_files(data, 4);
  REQUIRE(run({"train", "--train", (data / "train.tsv").string(), "--out-dir", run_dir.string(),
               "--dim", "8", "--epochs", "5", "--seed", "9"}) == 0);

  // Labeled splits built from pattern triples plus cross-group corruptions.
  const fs::path valid = tmp.path() / "valid_labeled.tsv";
  const fs::path test = tmp.path() / "test_labeled.tsv";
  spkg_test::write_file(valid,
                        "e00\tr0\te02\t1\ne05\tr0\te06\t1\ne09\tr0\te10\t-1\ne00\tr1\te13\t-1\n"
                        "e13\tr0\te14\t1\ne02\tr1\te03\t1\ne19\tr0\te00\t-1\ne08\tr1\te18\t-1\n");
  spkg_test::write_file(test,
                        "e01\tr0\te03\t1\ne04\tr0\te07\t1\ne11\tr0\te12\t-1\ne16\tr1\te02\t-1\n");

  SECTION("fit is written and the post metrics never regress") {
    const fs::path out = tmp.path() / "cal";
    REQUIRE(run({"calibrate", "--checkpoint", (run_dir / "model.ckpt").string(), "--valid",
                 valid.string(), "--test", test.string(), "--out-dir", out.string()}) == 0);
    auto platt_lines = split_lines(spkg_test::read_file(out / "platt.csv"));
    REQUIRE(platt_lines.size() == 2);
    CHECK(platt_lines[0] == "a,b,converged");
    const std::string report = spkg_test::read_file(out / "calibration_report.csv");
    CHECK(split_lines(report).size() == 5);
    CHECK(csv_value(report, "pre,nll") > 0.0);
    CHECK(csv_value(report, "post,nll") > 0.0);
  }
  SECTION("unlabeled splits are rejected") {
    const fs::path out = tmp.path() / "cal_fail";
    CHECK(run({"calibrate", "--checkpoint", (run_dir / "model.ckpt").string(), "--valid",
               (data / "train.tsv").string(), "--test", test.string(), "--out-dir",
               out.string()}) == 1);
  }
}

TEST_CASE("benchmark command", "[cli]") {
  spkg_test::TempDir tmp;
  const fs::path data = tmp.path() / "data";
  REQUIRE(run({"synth", "--kind", "random", "--entities", "50", "--relations", "2", "--triples",
               "400", "--out-dir", data.string()}) == 0);
  const fs::path out = tmp.path() / "bench";
  REQUIRE(run({"bench", "--train", (data / "train.tsv").string(), "--out-dir", out.string(),
               "--neg-ratios", "2", "--dim", "8", "--batch-size", "40", "--epochs-per-point",
               "1"}) == 0);
  auto lines = split_lines(spkg_test::read_file(out / "bench.csv"));
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] ==
        "n,neg_total_ms,neg_sampling_ms,neg_rest_ms,sp_total_ms,reduction_pct,neg_score_evals,"
        "sp_score_evals");
  const std::string row = lines[1];
  CHECK(row.rfind("2,", 0) == 0);
  // One epoch over 400 triples: (1+2)*400 scores for sampling, 400 for sp.
  CHECK_THAT(row, Catch::Matchers::ContainsSubstring(",1200,400"));
}

TEST_CASE("config files supply defaults that flags override", "[cli]") {
  spkg_test::TempDir tmp;
  const fs::path data = tmp.path() / "data";
  write_pattern_files(data, 6);
  const fs::path cfg = tmp.path() / "train.cfg";
  spkg_test::write_file(cfg, "model=simple\ndim=16\nepochs=2\nseed=11\n");

  const fs::path out1 = tmp.path() / "from_config";
  REQUIRE(run({"train", "--train", (data / "train.tsv").string(), "--out-dir", out1.string(),
               "--config", cfg.string()}) == 0);
  const EmbeddingModel from_config = load_checkpoint(out1 / "model.ckpt");
  CHECK(from_config.config.kind == ModelKind::SimplE);
  CHECK(from_config.config.dim == 16);

  const fs::path out2 = tmp.path() / "overridden";
  REQUIRE(run({"train", "--train", (data / "train.tsv").string(), "--out-dir", out2.string(),
               "--config", cfg.string(), "--dim", "4"}) == 0);
  const EmbeddingModel overridden = load_checkpoint(out2 / "model.ckpt");
  CHECK(overridden.config.kind == ModelKind::SimplE);
  CHECK(overridden.config.dim == 4);
}

TEST_CASE("training then evaluating keeps scores consistent", "[cli]") {
  spkg_test::TempDir tmp;
  const fs::path data = tmp.path() / "data";
  const fs::path run_dir = tmp.path() / "run";
  write_pattern_files(data, 7);
  REQUIRE(run({"train", "--train", (data / "train.tsv").string(), "--valid",
               (data / "test.tsv").string(), "--out-dir", run_dir.string(), "--dim", "8",
               "--epochs", "4", "--seed", "2"}) == 0);

  // The reloaded checkpoint must score exactly like the in-memory model the
  // trainer kept, so a fresh eval reproduces the trainer's validation metric.
  const EmbeddingModel model = load_checkpoint(run_dir / "model.ckpt");
  const Vocabulary vocab = load_vocabulary(run_dir / "model.vocab");
  Dataset ds = load_dataset(data / "train.tsv", data / "test.tsv", "", LoadPolicy::Strict);
  const TripleSet filter = build_filter_set(ds);
  const double mrr = ranking_metrics(model, cli_detail::positives_of(ds.valid), filter).mrr_filtered;

  const std::string history = spkg_test::read_file(run_dir / "history.csv");
  auto lines = split_lines(history);
  double best = 0.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto pos = lines[i].rfind(',');
    if (pos + 1 < lines[i].size()) best = std::max(best, std::stod(lines[i].substr(pos + 1)));
  }
  CHECK(mrr == Approx(best).epsilon(1e-9));
}
