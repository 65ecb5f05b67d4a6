#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adr/config.hpp"
#include "adr/corpus.hpp"
#include "adr/ensemble.hpp"
#include "adr/registry.hpp"

namespace adr {

struct PreparedData {
  Corpus target;
  Split split;
  Corpus source;
  Corpus source_train;
  Corpus source_dev;
  std::vector<ProcessedDocument> test;
  std::size_t test_kept = 0;
};

/// Loads the corpora, splits the target corpus and preprocesses the test set.
PreparedData prepare_data(const ExperimentConfig& cfg);

/// Stage-1 models for `model_seeds`, trained on the source corpus or loaded
/// from <run_dir>/stage1/<model_id>/model_<seed>/ when already present.
std::vector<ModelPtr> stage1_models(const ExperimentConfig& cfg, const PreparedData& data, const Registry& registry,
                                    const std::string& model_id, const std::vector<std::uint64_t>& model_seeds,
                                    std::size_t* trained = nullptr);

struct ScenarioSummary {
  std::string name;
  std::vector<ReportRow> rows;
  std::size_t jobs_run = 0;
  std::size_t jobs_skipped = 0;
  std::size_t failed_seeds = 0;
};

struct RunSummary {
  std::vector<ScenarioSummary> scenarios;
  std::size_t stage1_trained = 0;
};

/// Executes the configured scenarios (all when `only` is empty) and writes
/// the per-scenario and combined reports below cfg.run_dir.
RunSummary run_experiment(const ExperimentConfig& cfg, const std::vector<std::string>& only = {},
                          const std::string& command = "run");

/// Rebuilds <run_dir>/report.{csv,md} from the scenario summaries on disk.
/// Returns the markdown.
std::string write_combined_report(const std::filesystem::path& run_dir, const std::vector<std::string>& scenario_order);

/// Directory-safe form of a model id ("org/model" -> "org_model").
std::string safe_name(std::string_view id);

}  // namespace adr
