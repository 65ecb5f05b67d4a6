#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "adr/corpus.hpp"
#include "adr/metrics.hpp"

namespace adr {

/// Normalized term list. Terms may span several tokens; matching is
/// case-insensitive and whole-token (a term must equal a contiguous run of
/// document tokens after punctuation at token edges is stripped).
class Lexicon {
 public:
  /// Normalizes and deduplicates; throws LoadError when no term remains.
  Lexicon(std::string name, const std::vector<std::string>& terms);

  const std::string& name() const noexcept { return name_; }
  const std::set<std::string>& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }

  bool matches(std::string_view text) const;
  /// First matching term, or empty.
  std::string first_match(std::string_view text) const;

 private:
  std::string name_;
  std::set<std::string> terms_;
  std::map<std::string, std::vector<std::vector<std::string>>> by_first_token_;
};

/// One term per line, '#' starts a comment line, blank lines are ignored.
Lexicon parse_lexicon(std::string_view text, std::string name);
Lexicon load_lexicon(const std::filesystem::path& path, std::string name = {});

/// Lowercased whitespace tokens with leading/trailing punctuation removed.
std::vector<std::string> match_tokens(std::string_view text);

enum class Rule { med_presence, womens_health };
std::string to_string(Rule r);
/// Accepts "med", "med_presence", "wh" and "womens_health".
Rule parse_rule(std::string_view s);

struct RuleOutcome {
  std::string doc_id;
  int original = 0;
  int corrected = 0;
  Rule rule = Rule::med_presence;
  bool flipped = false;
  /// Term that triggered (wh) or was missing (empty for med flips).
  std::string evidence;
};

/// Flips a positive prediction to negative when the document mentions no
/// medication term.
RuleOutcome apply_med_rule(const Document& doc, int pred, const Lexicon& lex);
/// Flips a positive prediction to negative when the document mentions any
/// women's-health term.
RuleOutcome apply_wh_rule(const Document& doc, int pred, const Lexicon& lex);
RuleOutcome apply_rule(Rule rule, const Document& doc, int pred, const Lexicon& lex);

struct LabeledPrediction {
  std::string doc_id;
  int label = 0;
};

/// Applies `rule` to every prediction; documents are looked up by id.
/// Throws AlignmentError for ids missing from `docs`.
std::vector<RuleOutcome> apply_rule_all(Rule rule, const std::vector<LabeledPrediction>& preds, const Corpus& docs,
                                        const Lexicon& lex);

/// One report per rule, each computed from the raw predictions (rules are
/// never chained). Gold labels come from `gold`, joined by id; throws
/// AlignmentError when a prediction id is missing there.
std::map<Rule, MetricsReport> evaluate_rules(const std::vector<LabeledPrediction>& preds, const Corpus& gold,
                                             const std::map<Rule, const Lexicon*>& lexicons);

/// doc_id,label CSV of corrected labels.
std::string corrected_csv(const std::vector<RuleOutcome>& outcomes);
/// Flipped documents only: doc_id,rule,original,corrected,evidence.
std::string flip_audit_csv(const std::vector<RuleOutcome>& outcomes);

}  // namespace adr
