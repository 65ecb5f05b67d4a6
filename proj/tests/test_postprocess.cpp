#include <doctest.h>

#include "adr/error.hpp"
#include "adr/metrics.hpp"
#include "adr/postprocess.hpp"
#include "adr/rng.hpp"

using namespace adr;

namespace {

const std::vector<std::string> kVocab = {"ibuprofen", "pille", "kopf", "schmerz", "zyklus", "bauch", "arzt",
                                         "übelkeit",  "tag",   "gut",  "müde",    "nacht",  "spirale", "l-thyroxin"};

struct Fixture {
  Corpus docs;
  std::vector<LabeledPrediction> preds;
  Lexicon lexicon;
};

Fixture random_fixture(Rng& rng) {
  std::vector<std::string> terms;
  for (const auto& w : kVocab)
    if (rng.below(3) == 0) terms.push_back(w);
  if (terms.empty()) terms.push_back(kVocab[rng.below(kVocab.size())]);
  if (rng.below(4) == 0) terms.push_back(kVocab[rng.below(kVocab.size())] + " " + kVocab[rng.below(kVocab.size())]);
  std::vector<Document> docs;
  std::vector<LabeledPrediction> preds;
  const auto n = 5 + rng.below(40);
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    const auto len = 1 + rng.below(12);
    for (std::size_t k = 0; k < len; ++k) {
      auto w = kVocab[rng.below(kVocab.size())];
      if (rng.below(5) == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
      if (rng.below(6) == 0) w += ",";
      text += w + " ";
    }
    const std::string id = "d" + std::to_string(i);
    docs.push_back({id, text, static_cast<int>(rng.below(2)), "", "de", ""});
    preds.push_back({id, static_cast<int>(rng.below(2))});
  }
  return {Corpus("fx", docs), preds, Lexicon("lex", terms)};
}

MetricsReport score(const std::vector<int>& labels, const Corpus& docs) {
  std::vector<int> gold;
  for (const auto& d : docs) gold.push_back(d.label);
  return report(confusion(labels, gold));
}

}  // namespace

TEST_CASE("lexicon matching is whole-token and case-insensitive") {
  const Lexicon lex("med", {"Ibuprofen", "l-thyroxin", "pille danach"});
  CHECK(lex.matches("Nehme IBUPROFEN, seit gestern"));
  CHECK(lex.matches("die Pille danach."));
  CHECK_FALSE(lex.matches("die pille"));
  CHECK_FALSE(lex.matches("ibuprofenhaltig"));
  CHECK(lex.first_match("mit L-Thyroxin!") == "l-thyroxin");
  CHECK_THROWS_AS(Lexicon("x", {"  ", ""}), LoadError);
  CHECK(parse_lexicon("# comment\n\nfoo\nFOO\nbar\n", "l").size() == 2);
}

TEST_CASE("rule semantics on single documents") {
  const Lexicon med("med", {"ibuprofen"});
  const Lexicon wh("wh", {"zyklus"});
  const Document with_drug{"a", "ibuprofen macht kopf", 1, "", "de", ""};
  const Document no_drug{"b", "mein zyklus ist kurz", 0, "", "de", ""};
  CHECK_FALSE(apply_med_rule(with_drug, 1, med).flipped);
  const auto flip = apply_med_rule(no_drug, 1, med);
  CHECK(flip.flipped);
  CHECK(flip.corrected == 0);
  const auto wh_flip = apply_wh_rule(no_drug, 1, wh);
  CHECK(wh_flip.flipped);
  CHECK(wh_flip.evidence == "zyklus");
  CHECK_FALSE(apply_wh_rule(no_drug, 0, wh).flipped);
  CHECK(parse_rule("wh") == Rule::womens_health);
  CHECK(parse_rule("med_presence") == Rule::med_presence);
  CHECK_THROWS(parse_rule("other"));
}

TEST_CASE("rules are idempotent, never add positives and never raise positive recall") {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const auto fx = random_fixture(rng);
    for (auto rule : {Rule::med_presence, Rule::womens_health}) {
      const auto once = apply_rule_all(rule, fx.preds, fx.docs, fx.lexicon);
      std::vector<LabeledPrediction> corrected;
      std::vector<int> before, after;
      for (std::size_t k = 0; k < once.size(); ++k) {
        REQUIRE(once[k].doc_id == fx.preds[k].doc_id);
        REQUIRE(!(fx.preds[k].label == 0 && once[k].corrected == 1));
        corrected.push_back({once[k].doc_id, once[k].corrected});
        before.push_back(fx.preds[k].label);
        after.push_back(once[k].corrected);
      }
      const auto twice = apply_rule_all(rule, corrected, fx.docs, fx.lexicon);
      for (std::size_t k = 0; k < twice.size(); ++k) REQUIRE(twice[k].corrected == once[k].corrected);
      if (fx.docs.count_label(1) > 0) REQUIRE(score(after, fx.docs).r1 <= score(before, fx.docs).r1);
    }
  }
}

TEST_CASE("the medication rule raises positive precision when false positives lack drug terms") {
  const Lexicon med("med", {"ibuprofen", "pille"});
  std::vector<Document> docs;
  std::vector<LabeledPrediction> preds;
  for (int i = 0; i < 10; ++i) {
    docs.push_back({"tp" + std::to_string(i), "nach ibuprofen übelkeit", 1, "", "de", ""});
    preds.push_back({"tp" + std::to_string(i), 1});
  }
  for (int i = 0; i < 15; ++i) {
    docs.push_back({"fp" + std::to_string(i), "kopf schmerz seit tagen", 0, "", "de", ""});
    preds.push_back({"fp" + std::to_string(i), 1});
  }
  for (int i = 0; i < 40; ++i) {
    docs.push_back({"tn" + std::to_string(i), "termin beim arzt", 0, "", "de", ""});
    preds.push_back({"tn" + std::to_string(i), 0});
  }
  const Corpus gold("fx", docs);
  const auto reports = evaluate_rules(preds, gold, {{Rule::med_presence, &med}});
  std::vector<int> raw;
  for (const auto& p : preds) raw.push_back(p.label);
  const auto base = score(raw, gold);
  const auto& after = reports.at(Rule::med_presence);
  CHECK(after.p1 >= base.p1);
  CHECK(after.p1 == doctest::Approx(100.0));
  CHECK(after.r1 == base.r1);
}

TEST_CASE("alignment errors and audit output") {
  const Lexicon med("med", {"ibuprofen"});
  const Corpus docs("c", {{"a", "kein medikament", 0, "", "de", ""}});
  CHECK_THROWS_AS(apply_rule_all(Rule::med_presence, {{"missing", 1}}, docs, med), AlignmentError);
  const auto out = apply_rule_all(Rule::med_presence, {{"a", 1}}, docs, med);
  CHECK(flip_audit_csv(out).find("a,med_presence,1,0") != std::string::npos);
  CHECK(corrected_csv(out).find("a,0") != std::string::npos);
}
