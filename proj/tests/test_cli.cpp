#include <doctest.h>

#include "adr/cli.hpp"
#include "adr/corpus.hpp"
#include "adr/util.hpp"
#include "helpers.hpp"

using namespace adr;

TEST_CASE("exit codes by error category") {
  CHECK(exit_code_for(Error::Category::config) == 2);
  CHECK(exit_code_for(Error::Category::data) == 3);
  CHECK(exit_code_for(Error::Category::job) == 4);
}

TEST_CASE("cli subcommands on a demo workspace") {
  const auto dir = test::temp_dir("cli");
  REQUIRE(run_cli({"-q", "ingest", "--demo-dir", dir.string()}) == 0);
  const auto target = (dir / "data" / "target.jsonl").string();
  CHECK(run_cli({"-q", "stats", target, "--out", (dir / "stats").string()}) == 0);
  CHECK(std::filesystem::exists(dir / "stats" / "token_histogram.csv"));
  CHECK(run_cli({"-q", "split", target, "--out", (dir / "split").string(), "--seed", "42"}) == 0);
  CHECK(load_corpus(dir / "split" / "test.jsonl").count_label(1) == 21);
  CHECK(run_cli({"-q", "sample", (dir / "split" / "train_dev.jsonl").string(), "--mode", "add_neg", "--shots", "10",
                 "--n-neg", "200", "--seed", "3", "--out", (dir / "sets").string()}) == 0);
  CHECK(load_corpus(dir / "sets" / "train.jsonl").size() == 210);

  // a quick two-seed SVM scenario, then evaluation and post-processing of its votes
  REQUIRE(run_cli({"-q", "run", "--config", (dir / "demo.toml").string(), "--scenario", "svm_per_class_10"}) == 0);
  const auto votes = dir / "runs" / "svm_per_class_10" / "1" / "votes.csv";
  REQUIRE(std::filesystem::exists(votes));
  CHECK(std::filesystem::exists(dir / "runs" / "report.md"));
  CHECK(run_cli({"-q", "evaluate", votes.string(), target, "--out", (dir / "eval").string()}) == 0);
  CHECK(run_cli({"-q", "postprocess", "--rule", "med", "--lexicon", (dir / "lexicons" / "med.txt").string(), "--preds",
                 votes.string(), "--corpus", target, "--out", (dir / "post").string()}) == 0);
  CHECK(std::filesystem::exists(dir / "post" / "flips.csv"));
  CHECK(run_cli({"-q", "report", "--run-dir", (dir / "runs").string()}) == 0);
}

TEST_CASE("cli errors map to exit codes") {
  const auto dir = test::temp_dir("cli_err");
  CHECK(run_cli({"no-such-command"}) == 2);
  CHECK(run_cli({"stats", (dir / "missing.jsonl").string()}) == 3);
  write_file_atomic(dir / "bad.toml", "[paths]\nunknown_key = 1\n");
  CHECK(run_cli({"run", "--config", (dir / "bad.toml").string()}) == 2);
  write_file_atomic(dir / "bad.jsonl", "{\"id\": 1}\n");
  CHECK(run_cli({"stats", (dir / "bad.jsonl").string()}) == 3);
  CHECK(run_cli({"sample", (dir / "bad.jsonl").string(), "--mode", "per_class", "--shots", "3"}) == 3);
}
