#include "adr/preprocess.hpp"

#include <regex>

#include "adr/error.hpp"
#include "adr/util.hpp"

namespace adr {

namespace {

// Patterns approximate the categories of common social-media normalizers.
// They only need to be stable, not exhaustive.
const std::regex& pattern(EntityClass cls) {
  static const std::regex url(R"((?:https?://|www\.)[^\s<>]+)", std::regex::icase | std::regex::optimize);
  static const std::regex email(R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9.\-]+\.[A-Za-z]{2,})", std::regex::optimize);
  static const std::regex user(R"(@[A-Za-z0-9_]+)", std::regex::optimize);
  // 12.03.2020, 12.3.20, 12/03/2020, 2020-03-12
  static const std::regex date(R"(\b(?:\d{1,2}[./]\d{1,2}[./](?:\d{4}|\d{2})|\d{4}-\d{1,2}-\d{1,2})\b)",
                               std::regex::optimize);
  static const std::regex number(R"(\b\d+(?:[.,]\d+)*\b)", std::regex::optimize);
  switch (cls) {
    case EntityClass::url: return url;
    case EntityClass::email: return email;
    case EntityClass::user: return user;
    case EntityClass::date: return date;
    case EntityClass::number: return number;
  }
  throw InvariantError("unknown entity class");
}

constexpr EntityClass kOrder[] = {EntityClass::url, EntityClass::email, EntityClass::user, EntityClass::date,
                                  EntityClass::number};

}  // namespace

std::string placeholder(EntityClass cls) {
  switch (cls) {
    case EntityClass::url: return "<URL>";
    case EntityClass::email: return "<EMAIL>";
    case EntityClass::user: return "<USER>";
    case EntityClass::date: return "<DATE>";
    case EntityClass::number: return "<NUMBER>";
  }
  throw InvariantError("unknown entity class");
}

std::string to_string(EntityClass cls) {
  switch (cls) {
    case EntityClass::url: return "url";
    case EntityClass::email: return "email";
    case EntityClass::user: return "user";
    case EntityClass::date: return "date";
    case EntityClass::number: return "number";
  }
  throw InvariantError("unknown entity class");
}

EntityClass parse_entity_class(std::string_view name) {
  const auto n = to_lower(name);
  if (n == "url") return EntityClass::url;
  if (n == "email") return EntityClass::email;
  if (n == "user") return EntityClass::user;
  if (n == "date") return EntityClass::date;
  if (n == "number" || n == "number-like") return EntityClass::number;
  throw ConfigError("unknown mask class '" + std::string(name) + "'");
}

void NormalizerConfig::validate() const {
  if (min_tokens < 1) throw ConfigError("preprocess.min_tokens must be >= 1");
  if (max_tokens <= min_tokens) throw ConfigError("preprocess.max_tokens must exceed preprocess.min_tokens");
}

std::string ProcessedDocument::text() const { return join(tokens, " "); }

std::string mask_entities(std::string_view text, const NormalizerConfig& config) {
  std::string out(text);
  for (EntityClass cls : kOrder) {
    if (!config.mask_classes.count(cls)) continue;
    out = std::regex_replace(out, pattern(cls), placeholder(cls));
  }
  return out;
}

ProcessedDocument preprocess(const Document& doc, const NormalizerConfig& config) {
  ProcessedDocument out;
  out.id = doc.id;
  out.original_id = doc.id;
  out.label = doc.label;
  out.lang = doc.lang;
  out.tokens = split_whitespace(mask_entities(doc.text, config));
  if (out.tokens.size() < config.min_tokens) {
    out.dropped = true;
  } else if (out.tokens.size() > config.max_tokens) {
    out.tokens.resize(config.max_tokens);
  }
  return out;
}

std::vector<ProcessedDocument> preprocess_corpus(const Corpus& corpus, const NormalizerConfig& config) {
  config.validate();
  std::vector<ProcessedDocument> out;
  out.reserve(corpus.size());
  for (const auto& d : corpus) out.push_back(preprocess(d, config));
  return out;
}

std::vector<ProcessedDocument> kept(std::span<const ProcessedDocument> docs) {
  std::vector<ProcessedDocument> out;
  for (const auto& d : docs)
    if (!d.dropped) out.push_back(d);
  return out;
}

}  // namespace adr
