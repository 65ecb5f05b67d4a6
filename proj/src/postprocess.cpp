#include "adr/postprocess.hpp"

#include <cctype>
#include <unordered_map>

#include "adr/error.hpp"
#include "adr/util.hpp"

namespace adr {

namespace {

std::string strip_edges(std::string_view s) {
  std::size_t b = 0, e = s.size();
  auto punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  while (b < e && punct(s[b])) ++b;
  while (e > b && punct(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::vector<std::string> match_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& t : split_whitespace(text)) {
    auto s = strip_edges(to_lower(t));
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

Lexicon::Lexicon(std::string name, const std::vector<std::string>& terms) : name_(std::move(name)) {
  for (const auto& raw : terms) {
    const auto toks = match_tokens(raw);
    if (toks.empty()) continue;
    const auto term = join(toks, " ");
    if (terms_.insert(term).second) by_first_token_[toks.front()].push_back(toks);
  }
  if (terms_.empty()) throw LoadError("lexicon '" + name_ + "' has no terms");
}

std::string Lexicon::first_match(std::string_view text) const {
  const auto toks = match_tokens(text);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto it = by_first_token_.find(toks[i]);
    if (it == by_first_token_.end()) continue;
    for (const auto& term : it->second) {
      if (i + term.size() > toks.size()) continue;
      if (std::equal(term.begin(), term.end(), toks.begin() + static_cast<std::ptrdiff_t>(i))) return join(term, " ");
    }
  }
  return {};
}

bool Lexicon::matches(std::string_view text) const { return !first_match(text).empty(); }

Lexicon parse_lexicon(std::string_view text, std::string name) {
  std::vector<std::string> terms;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(pos, end - pos));
    if (!line.empty() && line[0] != '#') terms.push_back(line);
    pos = end + 1;
  }
  return Lexicon(std::move(name), terms);
}

Lexicon load_lexicon(const std::filesystem::path& path, std::string name) {
  if (name.empty()) name = path.stem().string();
  return parse_lexicon(read_file(path), std::move(name));
}

std::string to_string(Rule r) { return r == Rule::med_presence ? "med_presence" : "womens_health"; }

Rule parse_rule(std::string_view s) {
  if (s == "med" || s == "med_presence") return Rule::med_presence;
  if (s == "wh" || s == "womens_health") return Rule::womens_health;
  throw ArgumentError("unknown rule '" + std::string(s) + "' (expected med or wh)");
}

RuleOutcome apply_med_rule(const Document& doc, int pred, const Lexicon& lex) {
  RuleOutcome o{doc.id, pred, pred, Rule::med_presence, false, {}};
  if (pred != 1) return o;
  o.evidence = lex.first_match(doc.text);
  if (o.evidence.empty()) {
    o.corrected = 0;
    o.flipped = true;
  }
  return o;
}

RuleOutcome apply_wh_rule(const Document& doc, int pred, const Lexicon& lex) {
  RuleOutcome o{doc.id, pred, pred, Rule::womens_health, false, {}};
  if (pred != 1) return o;
  o.evidence = lex.first_match(doc.text);
  if (!o.evidence.empty()) {
    o.corrected = 0;
    o.flipped = true;
  }
  return o;
}

RuleOutcome apply_rule(Rule rule, const Document& doc, int pred, const Lexicon& lex) {
  return rule == Rule::med_presence ? apply_med_rule(doc, pred, lex) : apply_wh_rule(doc, pred, lex);
}

std::vector<RuleOutcome> apply_rule_all(Rule rule, const std::vector<LabeledPrediction>& preds, const Corpus& docs,
                                        const Lexicon& lex) {
  std::vector<RuleOutcome> out;
  out.reserve(preds.size());
  for (const auto& p : preds) {
    const auto* doc = docs.find(p.doc_id);
    if (!doc) throw AlignmentError("postprocess: prediction for unknown document '" + p.doc_id + "'");
    out.push_back(apply_rule(rule, *doc, p.label, lex));
  }
  return out;
}

std::map<Rule, MetricsReport> evaluate_rules(const std::vector<LabeledPrediction>& preds, const Corpus& gold,
                                             const std::map<Rule, const Lexicon*>& lexicons) {
  std::vector<int> truth;
  truth.reserve(preds.size());
  for (const auto& p : preds) {
    const auto* doc = gold.find(p.doc_id);
    if (!doc) throw AlignmentError("evaluate_rules: prediction for unknown document '" + p.doc_id + "'");
    truth.push_back(doc->label);
  }
  std::map<Rule, MetricsReport> out;
  for (const auto& [rule, lex] : lexicons) {
    if (!lex) throw ArgumentError("evaluate_rules: null lexicon for " + to_string(rule));
    std::vector<int> corrected;
    for (const auto& o : apply_rule_all(rule, preds, gold, *lex)) corrected.push_back(o.corrected);
    out[rule] = report(confusion(corrected, truth));
  }
  return out;
}

std::string corrected_csv(const std::vector<RuleOutcome>& outcomes) {
  std::string out = csv_row({"doc_id", "label"});
  for (const auto& o : outcomes) out += csv_row({o.doc_id, std::to_string(o.corrected)});
  return out;
}

std::string flip_audit_csv(const std::vector<RuleOutcome>& outcomes) {
  std::string out = csv_row({"doc_id", "rule", "original", "corrected", "evidence"});
  for (const auto& o : outcomes)
    if (o.flipped)
      out += csv_row({o.doc_id, to_string(o.rule), std::to_string(o.original), std::to_string(o.corrected),
                      o.evidence.empty() ? "no_term" : o.evidence});
  return out;
}

}  // namespace adr
