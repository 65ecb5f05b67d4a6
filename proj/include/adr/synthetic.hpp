#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "adr/corpus.hpp"

namespace adr {

/// Topic distribution of the German forum corpus (train/dev + test counts
/// normalized to sum to one).
std::map<std::string, double> lifeline_topic_weights();

/// Topic distribution used for synthetic English source-language posts.
std::map<std::string, double> source_topic_weights();

/// Deterministic list of pseudo drug names; the first entries are common
/// real generic names so fixtures read naturally.
std::vector<std::string> synthetic_medication_names(std::size_t count = 500);

/// Women's-health vocabulary and abbreviations (German and English).
std::vector<std::string> womens_health_terms();

/// Generates a labeled corpus of forum-like posts.
///
/// Positive posts mention at least one name from synthetic_medication_names()
/// together with an adverse-effect phrase; negatives are drawn shorter on
/// average and may mention drugs or symptoms in neutral contexts. A small
/// share of negatives are one- to three-word replies. Supported languages are
/// "de" and "en". Throws ArgumentError when topic weights do not sum to 1
/// within 1e-6.
Corpus generate_synthetic(std::size_t n_pos, std::size_t n_neg, const std::map<std::string, double>& topic_weights,
                          const std::string& lang, std::uint64_t seed, const std::string& source = "synthetic");

/// Word vectors in fastText text format ("<n> <dim>" header) for the whole
/// synthetic vocabulary. German and English words for the same concept share
/// a base vector, so the space is cross-lingually aligned.
std::string synthetic_embeddings_vec(std::size_t dim, std::uint64_t seed);

}  // namespace adr
