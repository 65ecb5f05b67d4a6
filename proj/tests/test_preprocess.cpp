#include <doctest.h>

#include "adr/error.hpp"
#include "adr/preprocess.hpp"
#include "adr/rng.hpp"

using namespace adr;

TEST_CASE("entity masking fixtures") {
  const NormalizerConfig cfg;
  CHECK(mask_entities("see https://example.org/a?b=1 now", cfg) == "see <URL> now");
  CHECK(mask_entities("mail anna.b@example.de please", cfg) == "mail <EMAIL> please");
  CHECK(mask_entities("thanks @doc_holiday!", cfg) == "thanks <USER>!");
  CHECK(mask_entities("since 12.03.2019 I take it", cfg) == "since <DATE> I take it");
  CHECK(mask_entities("took 20 mg twice", cfg) == "took <NUMBER> mg twice");
}

TEST_CASE("masking only touches configured classes") {
  NormalizerConfig cfg;
  cfg.mask_classes = {EntityClass::url};
  CHECK(mask_entities("visit www.example.com at 10", cfg) == "visit <URL> at 10");
  cfg.mask_classes = {};
  CHECK(mask_entities("@user 2020-01-01", cfg) == "@user 2020-01-01");
}

TEST_CASE("masking is idempotent") {
  const NormalizerConfig cfg;
  const std::vector<std::string> pieces = {"a",   "@bob", "x@y.com", "http://a.b/c", "1.2.2020", "42",
                                           "mg.", "www.q.de", "<URL>", "Tag",  "7x",       "2020-05-01"};
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    std::string text;
    const auto n = 1 + rng.below(12);
    for (std::size_t k = 0; k < n; ++k) text += pieces[rng.below(pieces.size())] + " ";
    const auto once = mask_entities(text, cfg);
    REQUIRE(mask_entities(once, cfg) == once);
  }
}

TEST_CASE("length filter and truncation") {
  NormalizerConfig cfg;
  cfg.min_tokens = 4;
  cfg.max_tokens = 6;
  const auto short_doc = preprocess({"s", "too short", 0, "", "de", ""}, cfg);
  CHECK(short_doc.dropped);
  const auto long_doc = preprocess({"l", "one two three four five six seven eight", 1, "", "de", ""}, cfg);
  CHECK_FALSE(long_doc.dropped);
  CHECK(long_doc.tokens.size() == 6);
  CHECK(long_doc.tokens.front() == "one");
  CHECK(long_doc.text() == "one two three four five six");
  CHECK(long_doc.original_id == "l");
}

TEST_CASE("corpus preprocessing keeps order and reports drops") {
  Corpus c("c", {{"a", "a b c d e", 1, "", "de", ""}, {"b", "x", 0, "", "de", ""}, {"c", "p q r s", 0, "", "de", ""}});
  const auto docs = preprocess_corpus(c, {});
  REQUIRE(docs.size() == 3);
  const auto k = kept(docs);
  REQUIRE(k.size() == 2);
  CHECK(k[0].id == "a");
  CHECK(k[1].id == "c");
}

TEST_CASE("normalizer validation") {
  NormalizerConfig cfg;
  cfg.min_tokens = 10;
  cfg.max_tokens = 5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(parse_entity_class("number-like") == EntityClass::number);
  CHECK_THROWS(parse_entity_class("phone"));
}
