#include <doctest.h>

#include "adr/config.hpp"
#include "adr/error.hpp"

using namespace adr;

namespace {

const char* kBase = R"(
[paths]
target_corpus = "t.jsonl"
source_corpora = ["a.jsonl",
                  "b.jsonl"]  # trailing comment
registry = "registry.json"
med_lexicon = "med.txt"
wh_lexicon = "wh.txt"
run_dir = "runs"

[stage1]
model_id = "stub"
learning_rate = 1e-5
batch_size = 7

[ensemble]
sampling_seeds = [1, 2, 3]

[scenario.few]
kind = "few_shot"
mode = "add_source"
shots = 40
n_neg = 300
n_source = 300
)";

std::string error_of(const std::string& text) {
  try {
    parse_experiment_config(text, "/base", false);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("config table parsing") {
  const auto t = ConfigTable::parse("a = 1\nb = \"x # y\"\n[s.t]\nc = [1.5, true]\nd = -3\n");
  CHECK(std::get<std::int64_t>(t.find("a")->value) == 1);
  CHECK(std::get<std::string>(t.find("b")->value) == "x # y");
  CHECK(t.contains("s.t.c"));
  CHECK(std::get<std::int64_t>(t.find("s.t.d")->value) == -3);
  CHECK(t.subsections("s") == std::vector<std::string>{"t"});
  CHECK_THROWS_AS(ConfigTable::parse("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(ConfigTable::parse("[x]\n[x]\n"), ConfigError);
  CHECK_THROWS_AS(ConfigTable::parse("a = [1, 2\n"), ConfigError);
  CHECK_THROWS_AS(ConfigTable::parse("a = 'single'\n"), ConfigError);
}

TEST_CASE("experiment config resolution") {
  const auto cfg = parse_experiment_config(kBase, "/base", false);
  CHECK(cfg.target_corpus == std::filesystem::path("/base/t.jsonl"));
  CHECK(cfg.source_corpora.size() == 2);
  CHECK(cfg.stage1.learning_rate == doctest::Approx(1e-5));
  CHECK(cfg.stage1.batch_size == 7);
  CHECK(cfg.ensemble.sampling_seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(cfg.ensemble.model_seeds.size() == 10);
  const auto& sc = cfg.scenario("few");
  CHECK(sc.kind == ScenarioKind::few_shot);
  CHECK(sc.fewshot.set_size() == 640);
  CHECK(sc.model_id == "stub");
  CHECK(sc.model_seeds == cfg.ensemble.model_seeds);
}

TEST_CASE("invalid configs list every problem with its key") {
  const auto msg = error_of(std::string(kBase) + "\n[stage2]\nlearning_rate = -1\nbogus = 3\n[scenario.bad]\nkind = \"few_shot\"\nmode = \"per_class\"\nshots = 11\n");
  CHECK(msg.find("stage2: learning_rate") != std::string::npos);
  CHECK(msg.find("stage2.bogus") != std::string::npos);
  CHECK(msg.find("scenario.bad") != std::string::npos);
  CHECK(error_of(std::string(kBase) + "\n[ensemble]\n") != "");
  CHECK(error_of("[paths]\nrun_dir = 5\n") != "");
}

TEST_CASE("scenario hashes track relevant settings only") {
  const auto a = parse_experiment_config(kBase, "/base", false);
  auto text = std::string(kBase);
  const auto b = parse_experiment_config(text + "\n[report]\npostprocess = false\n", "/base", false);
  CHECK(a.scenario_hash(a.scenario("few")) == b.scenario_hash(b.scenario("few")));
  const auto c = parse_experiment_config(text.replace(text.find("[1, 2, 3]"), 9, "[1, 2, 4]"), "/base", false);
  CHECK(a.scenario_hash(a.scenario("few")) != c.scenario_hash(c.scenario("few")));
  CHECK(a.stage1_hash() == c.stage1_hash());
}
