#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "adr/backend.hpp"
#include "adr/corpus.hpp"
#include "adr/ensemble.hpp"
#include "adr/preprocess.hpp"
#include "adr/sampler.hpp"

namespace adr {

/// Scalar or array value of the key-value config format.
struct ConfigValue {
  using Array = std::vector<ConfigValue>;
  std::variant<std::string, std::int64_t, double, bool, Array> value;
  std::size_t line = 0;

  std::string type_name() const;
  std::string canonical() const;
};

/// Flat "section.key" -> value table parsed from a TOML subset: [section]
/// and [section.sub] headers, key = value pairs, basic strings, integers,
/// floats, booleans, (multi-line) arrays and # comments. Throws ConfigError
/// with line numbers on syntax errors or duplicate keys.
class ConfigTable {
 public:
  static ConfigTable parse(std::string_view text);

  const std::map<std::string, ConfigValue>& values() const noexcept { return values_; }
  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const ConfigValue* find(const std::string& key) const;
  /// Section names that start with `prefix.`, e.g. the NAME in [scenario.NAME].
  std::vector<std::string> subsections(const std::string& prefix) const;
  /// Sorted "key = canonical value" lines.
  std::string canonical(const std::vector<std::string>& exclude_prefixes = {}) const;

 private:
  std::map<std::string, ConfigValue> values_;
  std::vector<std::string> section_order_;
};

enum class ScenarioKind { zero_shot, full, few_shot };
std::string to_string(ScenarioKind k);

struct ScenarioConfig {
  std::string name;
  ScenarioKind kind = ScenarioKind::few_shot;
  FewShotSpec fewshot;
  /// Backend for stage 2; defaults to the stage-1 model_id.
  std::string model_id;
  /// Train on the target sets directly with fit_stage1 instead of
  /// continuing from the stage-1 models.
  bool from_scratch = false;
  std::vector<std::uint64_t> model_seeds;
  std::vector<std::uint64_t> sampling_seeds;
  std::string display_name;
};

struct ExperimentConfig {
  std::filesystem::path config_path;
  std::filesystem::path target_corpus;
  std::vector<std::filesystem::path> source_corpora;
  std::filesystem::path med_lexicon;
  std::filesystem::path wh_lexicon;
  std::filesystem::path registry;
  std::filesystem::path run_dir;

  NormalizerConfig normalizer;
  SplitSpec split;
  /// Held-out share of the source corpus used as stage-1 dev data.
  double source_dev_fraction = 0.2;
  /// Dev share when splitting train/dev for the full-data scenario.
  double full_dev_fraction = 0.2;

  TrainConfig stage1;
  TrainConfig stage2;
  TrainConfig full;

  EnsembleSpec ensemble;
  bool save_checkpoints = false;
  bool postprocess = true;

  std::vector<ScenarioConfig> scenarios;
  ConfigTable table;

  const ScenarioConfig& scenario(const std::string& name) const;
  /// Hash of every setting that influences `scenario`'s outputs, including
  /// the content of the input files. Worker count and run_dir are excluded.
  std::string scenario_hash(const ScenarioConfig& scenario) const;
  std::string stage1_hash() const;
};

/// Parses and validates. Relative paths resolve against `base_dir`. Every
/// problem is collected; the ConfigError lists one per line with its key.
ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir,
                                         bool check_paths = true);
/// Loads from disk; ADR_RUN_DIR, when set, replaces paths.run_dir.
ExperimentConfig load_experiment_config(const std::filesystem::path& path, bool check_paths = true);

}  // namespace adr
