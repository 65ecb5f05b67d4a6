#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "adr/backend.hpp"

namespace adr {

/// Maps model_id strings to backend factories.
///
/// The registry file is JSON:
///
///   {"models": {
///     "stub":  {"kind": "stub", "buckets": 1024, "hidden": 64},
///     "svm":   {"kind": "svm", "embeddings": "vec/aligned.vec", "aligned": true,
///               "kernel": "rbf", "C": 1.0, "balanced": true},
///     "xlm-roberta-base": {"kind": "external", "command": ["python3", "train.py"],
///                          "checkpoint": "xlm-roberta-base"}}}
///
/// Relative paths (embeddings, command elements starting with "./" or
/// ending in ".py", local checkpoints) resolve against the registry file's
/// directory.
class Registry {
 public:
  Registry() = default;
  static Registry parse(std::string_view json_text, const std::filesystem::path& base_dir);
  static Registry load(const std::filesystem::path& path);

  bool contains(const std::string& model_id) const { return entries_.count(model_id) != 0; }
  /// Throws ConfigError for unknown ids. `work_dir` is used by external
  /// backends for job files.
  BackendPtr resolve(const std::string& model_id, const std::filesystem::path& work_dir = {}) const;
  std::string kind(const std::string& model_id) const;

 private:
  struct Entry {
    std::string kind;
    std::string json;
  };
  std::map<std::string, Entry> entries_;
  std::filesystem::path base_dir_;
};

}  // namespace adr
