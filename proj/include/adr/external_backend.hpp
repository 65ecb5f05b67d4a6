#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "adr/backend.hpp"

namespace adr {

/// Adapter for trainers that live outside this process (for example a
/// Python transformer fine-tuning script).
///
/// The command is invoked as `<command...> fit <job.json>` and
/// `<command...> predict <job.json>`. A fit job names train/dev JSONL files,
/// the TrainConfig, the stage, an optional init model directory and an output
/// directory; the command must leave `checksums.json`
/// (`{"encoder": hex, "classifier": hex}`) and `train_log.csv` there. A
/// predict job names a model directory, a documents JSONL and an output CSV
/// path with `doc_id,score` columns.
class ExternalBackend final : public ClassifierBackend {
 public:
  struct Options {
    std::vector<std::string> command;
    /// Passed through to the command as "checkpoint" (hub id or local path).
    std::string checkpoint;
    std::filesystem::path work_dir;
    Capabilities capabilities{true, true, true};
  };

  explicit ExternalBackend(Options options);

  std::string name() const override { return "external"; }
  Capabilities capabilities() const override { return options_.capabilities; }

  ModelPtr fit_stage1(std::span<const ProcessedDocument> train, std::span<const ProcessedDocument> dev,
                      const TrainConfig& config) const override;
  ModelPtr fit_stage2(const TrainedModel& init, std::span<const ProcessedDocument> train,
                      std::span<const ProcessedDocument> dev, const TrainConfig& config) const override;
  ModelPtr load(const std::filesystem::path& dir) const override;

 private:
  ModelPtr fit(int stage, const TrainedModel* init, std::span<const ProcessedDocument> train,
               std::span<const ProcessedDocument> dev, const TrainConfig& config) const;

  Options options_;
};

/// Runs argv without a shell and returns the exit status. Throws JobFailure
/// when the process cannot be started.
int run_process(const std::vector<std::string>& argv);

/// One JSON object per line: id, tokens (joined by spaces), label, lang.
std::string processed_jsonl(std::span<const ProcessedDocument> docs);

}  // namespace adr
