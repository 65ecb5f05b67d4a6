#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "adr/corpus.hpp"
#include "adr/preprocess.hpp"
#include "adr/rng.hpp"

namespace adr::test {

inline Corpus make_corpus(std::size_t n_pos, std::size_t n_neg, const std::string& prefix = "d",
                          const std::string& lang = "de") {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n_pos + n_neg; ++i) {
    Document d;
    d.id = prefix + std::to_string(i);
    d.label = i < n_pos ? 1 : 0;
    d.text = "post number " + std::to_string(i) + " with some words";
    d.topic = "t" + std::to_string(i % 3);
    d.lang = lang;
    d.source = prefix;
    docs.push_back(d);
  }
  return Corpus(prefix, std::move(docs));
}

inline ProcessedDocument processed(const std::string& id, const std::string& text, int label) {
  Document d{id, text, label, "t", "en", "s"};
  NormalizerConfig cfg;
  cfg.min_tokens = 1;
  return preprocess(d, cfg);
}

/// Fresh empty directory below the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("adr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace adr::test
