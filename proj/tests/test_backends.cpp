#include <doctest.h>

#include <cmath>

#include "adr/error.hpp"
#include "adr/external_backend.hpp"
#include "adr/metrics.hpp"
#include "adr/registry.hpp"
#include "adr/stub_backend.hpp"
#include "adr/svm_backend.hpp"
#include "adr/util.hpp"
#include "helpers.hpp"
#include "svm_fixtures.hpp"

using namespace adr;

namespace {

std::vector<ProcessedDocument> toy_docs(std::size_t n, std::uint64_t seed, const std::string& prefix) {
  Rng rng(seed);
  const std::vector<std::string> pos = {"rash", "nausea", "headache", "dizzy", "after", "taking"};
  const std::vector<std::string> neg = {"hello", "appointment", "weather", "thanks", "question", "doctor"};
  std::vector<ProcessedDocument> docs;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 3 == 0);
    std::string text;
    for (int k = 0; k < 8; ++k) {
      const auto& words = (rng.below(5) == 0) == (label == 1) ? neg : pos;
      text += words[rng.below(words.size())] + " ";
    }
    docs.push_back(test::processed(prefix + std::to_string(i), text, label));
  }
  return docs;
}

TrainConfig quick_config(std::uint64_t seed, FreezePolicy freeze = FreezePolicy::all_but_classifier) {
  TrainConfig c;
  c.learning_rate = 0.01;
  c.batch_size = 8;
  c.max_epochs = 5;
  c.model_seed = seed;
  c.freeze_policy = freeze;
  return c;
}

ConfusionMatrix evaluate(const TrainedModel& model, const std::vector<ProcessedDocument>& docs) {
  std::vector<int> p, g;
  for (const auto& pr : predict(model, docs)) p.push_back(pr.label);
  for (const auto& d : kept(docs)) g.push_back(d.label);
  return confusion(p, g);
}

}  // namespace

TEST_CASE("stub stage 2 with a frozen encoder leaves encoder parameters untouched") {
  const StubBackend backend;
  const auto src = toy_docs(120, 1, "s");
  const auto tgt = toy_docs(40, 2, "t");
  const auto stage1 = backend.fit_stage1(src, src, quick_config(78, FreezePolicy::none));
  const auto stage2 = backend.fit_stage2(*stage1, tgt, tgt, quick_config(78));
  CHECK(stage2->encoder_checksum() == stage1->encoder_checksum());
  CHECK(stage2->classifier_checksum() != stage1->classifier_checksum());
  CHECK(stub_parameters(*stage2).encoder_bytes() == stub_parameters(*stage1).encoder_bytes());

  const auto unfrozen = backend.fit_stage2(*stage1, tgt, tgt, quick_config(78, FreezePolicy::none));
  CHECK(unfrozen->encoder_checksum() != stage1->encoder_checksum());
}

TEST_CASE("stub training is deterministic and learns the toy task") {
  const StubBackend backend;
  const auto train = toy_docs(150, 3, "a");
  const auto test_docs = toy_docs(90, 4, "b");
  const auto m1 = backend.fit_stage1(train, train, quick_config(5));
  const auto m2 = backend.fit_stage1(train, train, quick_config(5));
  const auto m3 = backend.fit_stage1(train, train, quick_config(6));
  CHECK(m1->encoder_checksum() == m2->encoder_checksum());
  CHECK(m1->classifier_checksum() == m2->classifier_checksum());
  CHECK(m1->encoder_checksum() != m3->encoder_checksum());
  CHECK(report(evaluate(*m1, test_docs)).f1_macro > 80.0);
  CHECK_FALSE(m1->log().empty());
  CHECK(m1->best_epoch() >= 1);
}

TEST_CASE("stub models survive save and load") {
  const StubBackend backend;
  const auto docs = toy_docs(60, 7, "x");
  const auto model = backend.fit_stage1(docs, docs, quick_config(9));
  const auto dir = test::temp_dir("stub_save");
  model->save(dir);
  const auto back = backend.load(dir);
  CHECK(back->encoder_checksum() == model->encoder_checksum());
  CHECK(back->score(docs) == model->score(docs));
  CHECK(std::filesystem::exists(dir / "train_log.csv"));
  CHECK(std::filesystem::exists(dir / "config.json"));
}

TEST_CASE("training input validation") {
  const StubBackend backend;
  CHECK_THROWS_AS(backend.fit_stage1({}, {}, quick_config(1)), ArgumentError);
  auto bad = quick_config(1);
  bad.learning_rate = 0;
  const auto docs = toy_docs(10, 1, "v");
  CHECK_THROWS_AS(backend.fit_stage1(docs, docs, bad), ConfigError);
}

TEST_CASE("SVM separates a linearly separable fixture") {
  const auto emb = test::cluster_vectors(16, 40, 1.0, 0.3, 1);
  const auto train = test::cluster_docs(60, 60, 40, 6, 0.0, 2, "tr");
  const auto test_docs = test::cluster_docs(100, 100, 40, 6, 0.0, 3, "te");
  const auto model = fit_svm_baseline(train, emb);
  const auto r = report(evaluate(*model, test_docs));
  CHECK(r.f1_1 >= 95.0);
}

TEST_CASE("balanced class weights raise positive recall under 1:40 imbalance") {
  const auto emb = test::cluster_vectors(16, 40, 0.3, 1.0, 4);
  const auto train = test::cluster_docs(25, 1000, 40, 6, 0.3, 5, "tr");
  const auto test_docs = test::cluster_docs(100, 400, 40, 6, 0.3, 6, "te");
  SvmOptions balanced;
  SvmOptions plain;
  plain.balanced = false;
  const auto rb = report(evaluate(*fit_svm_baseline(train, emb, balanced), test_docs));
  const auto rp = report(evaluate(*fit_svm_baseline(train, emb, plain), test_docs));
  CHECK(rb.r1 > rp.r1);
}

TEST_CASE("SVM solver basics") {
  CHECK(balanced_class_weight(1025, 25) == doctest::Approx(20.5));
  const std::vector<std::vector<double>> x = {{-2, 0}, {-1, 0}, {1, 0}, {2, 0}};
  const std::vector<int> y = {0, 0, 1, 1};
  SvmOptions opt;
  opt.kernel = SvmKernel::linear;
  opt.c = 10;
  const auto sol = solve_svm(x, y, opt);
  CHECK(sol.decision(std::vector<double>{3, 0}) > 0);
  CHECK(sol.decision(std::vector<double>{-3, 0}) < 0);
  CHECK(std::abs(sol.decision(std::vector<double>{0, 0})) < 1e-3);
}

TEST_CASE("SVM models persist and stage 2 retrains") {
  const auto emb = test::cluster_vectors(8, 10, 1.0, 0.2, 8);
  const SvmBackend backend(emb);
  CHECK_FALSE(backend.capabilities().supports_freezing);
  const auto docs = test::cluster_docs(20, 20, 10, 5, 0.0, 9, "s");
  const auto m = backend.fit_stage1(docs, docs, {});
  const auto dir = test::temp_dir("svm_save");
  m->save(dir);
  const auto back = backend.load(dir);
  CHECK(back->score(docs) == m->score(docs));
  const auto other = test::cluster_docs(10, 10, 10, 5, 0.0, 10, "o");
  const auto m2 = backend.fit_stage2(*m, other, other, {});
  CHECK(m2->classifier_checksum() != m->classifier_checksum());
}

TEST_CASE("documents without known words embed as zero") {
  const auto emb = test::cluster_vectors(4, 3, 1.0, 0.0, 1);
  std::size_t known = 99;
  const std::vector<std::string> tokens = {"unknown", "words"};
  const auto v = document_embedding(tokens, *emb, &known);
  CHECK(known == 0);
  for (double x : v) CHECK(x == 0.0);
  const auto parsed = parse_vec("2 3\nfoo 1 2 3\nbar 0 0 1\n", false);
  CHECK(parsed->lookup("Bar,") != nullptr);
  CHECK_THROWS_AS(parse_vec("1 3\nfoo 1 2\n", false), LoadError);
}

TEST_CASE("external trainer adapter") {
  const auto script = std::filesystem::path(ADR_TEST_FIXTURES) / "fake_trainer.py";
  const auto work = test::temp_dir("external");
  ExternalBackend backend({{"python3", script.string()}, "fake-checkpoint", work, {true, true, true}});
  const auto src = toy_docs(60, 11, "s");
  const auto tgt = toy_docs(30, 12, "t");
  const auto m1 = backend.fit_stage1(src, src, quick_config(1));
  const auto m2 = backend.fit_stage2(*m1, tgt, tgt, quick_config(1));
  CHECK(m2->encoder_checksum() == m1->encoder_checksum());
  CHECK(m2->classifier_checksum() != m1->classifier_checksum());
  const auto m3 = backend.fit_stage2(*m1, tgt, tgt, quick_config(1, FreezePolicy::none));
  CHECK(m3->encoder_checksum() != m1->encoder_checksum());
  CHECK(m1->log().size() == 2);
  CHECK(report(evaluate(*m2, tgt)).f1_macro > 60.0);

  ExternalBackend failing({{"python3", script.string()}, "fail", work, {true, true, true}});
  CHECK_THROWS_AS(failing.fit_stage1(src, src, quick_config(1)), JobFailure);
  ExternalBackend missing({{"/nonexistent/trainer"}, "", work, {true, true, true}});
  CHECK_THROWS_AS(missing.fit_stage1(src, src, quick_config(1)), JobFailure);
}

TEST_CASE("registry resolves backends") {
  const auto dir = test::temp_dir("registry");
  write_file_atomic(dir / "vec.vec", "2 2\nfoo 1 0\nbar 0 1\n");
  const auto reg = Registry::parse(
      R"({"models": {"stub": {"kind": "stub"}, "svm": {"kind": "svm", "embeddings": "vec.vec", "aligned": true}}})",
      dir);
  CHECK(reg.contains("stub"));
  CHECK(reg.kind("svm") == "svm");
  CHECK(reg.resolve("svm")->name() == "svm");
  CHECK_THROWS_AS(reg.resolve("bert"), ConfigError);
  CHECK_THROWS_AS(Registry::parse(R"({"models": {"x": {"kind": "gpu"}}})", dir), ConfigError);
}
