#pragma once

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adr/corpus.hpp"

namespace adr {

enum class EntityClass { url, email, user, date, number };

std::string placeholder(EntityClass cls);
std::string to_string(EntityClass cls);
/// Accepts "url", "user", "date", "email", "number" and "number-like".
EntityClass parse_entity_class(std::string_view name);

struct NormalizerConfig {
  std::size_t min_tokens = 4;
  std::size_t max_tokens = 300;
  std::set<EntityClass> mask_classes = {EntityClass::url, EntityClass::email, EntityClass::user, EntityClass::date,
                                        EntityClass::number};

  /// Throws ConfigError unless 1 <= min_tokens < max_tokens.
  void validate() const;
};

struct ProcessedDocument {
  std::string id;
  std::string original_id;
  std::vector<std::string> tokens;
  int label = 0;
  std::string lang;
  bool dropped = false;

  std::string text() const;
};

/// Replaces configured entities with <URL>, <EMAIL>, <USER>, <DATE>,
/// <NUMBER>. Classes are applied in that order, so an email address is never
/// half-masked as a user handle. Placeholders never re-match.
std::string mask_entities(std::string_view text, const NormalizerConfig& config);

/// Masks, whitespace-tokenizes, drops documents shorter than min_tokens and
/// keeps the first max_tokens tokens of longer ones.
ProcessedDocument preprocess(const Document& doc, const NormalizerConfig& config);

std::vector<ProcessedDocument> preprocess_corpus(const Corpus& corpus, const NormalizerConfig& config);

/// Kept documents only.
std::vector<ProcessedDocument> kept(std::span<const ProcessedDocument> docs);

}  // namespace adr
