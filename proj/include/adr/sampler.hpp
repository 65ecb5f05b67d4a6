#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adr/corpus.hpp"

namespace adr {

enum class FewShotMode { per_class, add_neg, add_source };

std::string to_string(FewShotMode mode);
FewShotMode parse_fewshot_mode(std::string_view name);

/// Description of one sampled train/dev pair.
///
/// The meaning of `shots` depends on the mode:
///  - per_class: total examples per set, split evenly between the labels
///    (shots = 10 means 5 positive + 5 negative in train, and again in dev);
///  - add_neg, add_source: positives only; n_neg target negatives and, for
///    add_source, n_source source-language documents of any label are added.
struct FewShotSpec {
  FewShotMode mode = FewShotMode::per_class;
  std::size_t shots = 10;
  std::size_t n_neg = 0;
  std::size_t n_source = 0;
  std::uint64_t sampling_seed = 0;

  /// Throws ArgumentError when the mode constraints are violated.
  void validate() const;

  std::size_t positives_per_set() const;
  std::size_t target_negatives_per_set() const;
  std::size_t set_size() const;
  /// Compact label such as "40 + 300 neg + 300 source".
  std::string describe() const;
};

enum class SetRole { train, dev };
enum class Origin { target, source };

struct ManifestEntry {
  std::string id;
  SetRole role;
  Origin origin;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct FewShotSets {
  Corpus train;
  Corpus dev;
  FewShotSpec spec;
  std::vector<ManifestEntry> manifest;
};

/// Draws train then dev from one seeded permutation of each pool, so the two
/// sets are disjoint by construction. Throws CapacityError when a pool cannot
/// supply both sets, and InvariantError if an overlap is ever detected.
FewShotSets build_fewshot_sets(const Corpus& target_pool, const Corpus& source_pool, const FewShotSpec& spec);

/// One seeded permutation of the train/dev pool per sampling seed.
/// Throws ArgumentError on duplicate seeds.
std::vector<Corpus> enumerate_seed_pools(const Corpus& train_dev, const std::vector<std::uint64_t>& seeds);

/// {"id":…, "role":"train|dev", "origin":"target|source"} per line.
std::string manifest_jsonl(const std::vector<ManifestEntry>& manifest);

}  // namespace adr
