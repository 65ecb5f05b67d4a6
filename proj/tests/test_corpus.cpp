#include <doctest.h>

#include <set>

#include "adr/corpus.hpp"
#include "adr/error.hpp"
#include "adr/synthetic.hpp"
#include "adr/util.hpp"
#include "helpers.hpp"

using namespace adr;

TEST_CASE("stratified split keeps 21 of 101 positives for any seed") {
  const auto corpus = generate_synthetic(101, 4068, lifeline_topic_weights(), "de", 1);
  for (std::uint64_t seed : {0ull, 1ull, 42ull, 1234567ull}) {
    const auto s = stratified_split(corpus, {0.2, seed});
    CHECK(s.test.count_label(1) == 21);
    CHECK(s.test.count_label(0) == 814);
    CHECK(s.test.size() + s.train_dev.size() == corpus.size());
    std::set<std::string> ids;
    for (const auto& d : s.test) ids.insert(d.id);
    for (const auto& d : s.train_dev) CHECK(ids.count(d.id) == 0);
  }
}

TEST_CASE("split is deterministic per seed and differs across seeds") {
  const auto corpus = test::make_corpus(30, 300);
  const auto a = stratified_split(corpus, {0.2, 5});
  const auto b = stratified_split(corpus, {0.2, 5});
  const auto c = stratified_split(corpus, {0.2, 6});
  CHECK(a.test == b.test);
  CHECK_FALSE(a.test == c.test);
}

TEST_CASE("stratified test counts") {
  CHECK(stratified_test_count(101, 0.2) == 21);
  CHECK(stratified_test_count(4068, 0.2) == 814);
  CHECK(stratified_test_count(10, 0.2) == 2);
}

TEST_CASE("corpus validation") {
  std::vector<Document> docs{{"a", "x y", 1, "", "de", ""}, {"a", "x z", 0, "", "de", ""}};
  CHECK_THROWS_AS(Corpus("c", docs), UniquenessError);
  docs[1].id = "b";
  docs[1].label = 3;
  CHECK_THROWS_AS(Corpus("c", docs), ValueError);
}

TEST_CASE("jsonl round trip and line numbers in errors") {
  const auto dir = test::temp_dir("corpus_io");
  const auto corpus = test::make_corpus(3, 4);
  save_corpus(corpus, dir / "c.jsonl");
  const auto back = load_corpus(dir / "c.jsonl");
  CHECK(back.documents() == corpus.documents());

  write_file_atomic(dir / "bad.jsonl", "{\"id\":\"a\",\"text\":\"t\",\"label\":1}\n{\"id\":\"b\",\"text\":\"t\"}\n");
  try {
    load_corpus(dir / "bad.jsonl");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("csv corpora load") {
  const auto dir = test::temp_dir("corpus_csv");
  write_file_atomic(dir / "c.csv", "id,text,label,topic,lang\n1,\"hello, world\",1,skin,de\n2,bye,0,skin,de\n");
  const auto c = load_corpus(dir / "c.csv");
  REQUIRE(c.size() == 2);
  CHECK(c.documents()[0].text == "hello, world");
  CHECK(c.count_label(1) == 1);
}

TEST_CASE("combine rewrites colliding ids") {
  const auto a = test::make_corpus(1, 1, "d");
  auto b_docs = test::make_corpus(1, 1, "d").documents();
  const Corpus b("other", b_docs);
  const auto all = combine({a, b}, "all");
  CHECK(all.size() == 4);
  CHECK(all.find("other/d0") != nullptr);
}

TEST_CASE("corpus statistics") {
  const auto corpus = generate_synthetic(101, 4068, lifeline_topic_weights(), "de", 3);
  const auto stats = compute_stats(corpus);
  CHECK(stats.n_pos == 101);
  CHECK(stats.n_neg == 4068);
  CHECK(stats.neg_per_pos == doctest::Approx(4068.0 / 101.0));
  CHECK(count_sentences("One. Two! Three? ") == 3);
  CHECK(count_tokens("a  b\tc\n") == 3);
  CHECK(stats.mean_tokens_per_label.at(1) > stats.mean_tokens_per_label.at(0));
}

TEST_CASE("synthetic generator is deterministic") {
  const auto a = generate_synthetic(5, 20, source_topic_weights(), "en", 9);
  const auto b = generate_synthetic(5, 20, source_topic_weights(), "en", 9);
  CHECK(a == b);
  CHECK_THROWS(generate_synthetic(1, 1, {{"x", 0.5}}, "en", 1));
}
