#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adr/backend.hpp"
#include "adr/metrics.hpp"
#include "adr/sampler.hpp"

namespace adr {

enum class TieBreak { positive, negative };
std::string to_string(TieBreak t);
TieBreak parse_tie_break(std::string_view s);

/// Initialization seeds of the ten ensemble members.
const std::vector<std::uint64_t>& default_model_seeds();

struct EnsembleSpec {
  std::vector<std::uint64_t> model_seeds = default_model_seeds();
  std::vector<std::uint64_t> sampling_seeds = {1, 2, 3, 4, 5};
  FewShotSpec fewshot;
  TieBreak tie_break = TieBreak::positive;
  /// Parallel fit jobs.
  std::size_t workers = 1;
  /// Fail the whole grid when any sampling seed fails.
  bool strict = false;

  /// Throws ConfigError on empty or duplicate seed lists or workers == 0.
  void validate() const;
};

struct VoteRecord {
  std::string doc_id;
  std::vector<int> votes;
  int final = 0;
  bool was_tie = false;

  friend bool operator==(const VoteRecord&, const VoteRecord&) = default;
};

/// Majority label per document; ties follow `tie_break`. Order of the input
/// is kept. Throws ArgumentError on ragged or empty vote lists and ValueError
/// on votes outside {0,1}.
std::vector<VoteRecord> majority_vote(const std::vector<std::pair<std::string, std::vector<int>>>& votes_per_doc,
                                      TieBreak tie_break = TieBreak::positive);

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1). Throws ArgumentError for fewer than two
/// values.
double std_dev(std::span<const double> values);

struct AggregateResult {
  std::vector<std::uint64_t> seeds;
  std::vector<MetricsReport> per_seed_reports;
  MetricsReport mean_report;
  MetricsReport std_report;
};

/// Field-wise mean and sample std. Throws ArgumentError for fewer than two
/// reports.
AggregateResult aggregate(const std::vector<MetricsReport>& reports, std::vector<std::uint64_t> seeds = {});

/// Train/dev sets for one sampling seed.
using SetBuilder = std::function<FewShotSets(std::uint64_t sampling_seed)>;

struct GridInputs {
  SetBuilder build_sets;
  /// Preprocessed target test set; dropped documents are skipped.
  std::vector<ProcessedDocument> test;
  NormalizerConfig normalizer;
  BackendPtr backend;
  /// One per model seed, in model_seeds order. Empty: each job trains from
  /// scratch with fit_stage1 on the sampled sets.
  std::vector<ModelPtr> stage1_models;
  TrainConfig stage2_config;
  /// Empty disables persistence and resumption.
  std::filesystem::path scenario_dir;
  /// Written into done markers; a mismatch forces a job to rerun.
  std::string config_hash;
  bool save_checkpoints = false;
};

struct SeedOutcome {
  std::uint64_t sampling_seed = 0;
  bool ok = false;
  std::string error;
  std::vector<VoteRecord> votes;
  MetricsReport report;
  std::size_t jobs_run = 0;
  std::size_t jobs_skipped = 0;
};

struct GridResult {
  std::vector<SeedOutcome> seeds;
  std::optional<AggregateResult> aggregate;
};

/// Runs every (sampling seed x model seed) fit on a bounded worker pool,
/// votes per sampling seed and aggregates over the successful seeds.
///
/// With a scenario directory, the layout is
///   <dir>/<sampling_seed>/sets_manifest.jsonl
///   <dir>/<sampling_seed>/model_<seed>/predictions.csv, done.json
///   <dir>/<sampling_seed>/votes.csv, report.csv
/// and jobs whose done.json carries `config_hash` are loaded, not rerun.
/// Throws JobFailure when fewer than two seeds succeed, or on any failure
/// when spec.strict is set.
GridResult run_grid(const EnsembleSpec& spec, const GridInputs& inputs);

/// Votes of per-model predictions aligned on document order. Throws
/// AlignmentError when the models predicted different document lists.
std::vector<VoteRecord> vote_predictions(const std::vector<std::vector<Prediction>>& per_model, TieBreak tie_break);

/// Confusion-based report of vote finals against gold labels of `docs`
/// (joined by id). Throws AlignmentError for unknown ids.
MetricsReport score_votes(const std::vector<VoteRecord>& votes, std::span<const ProcessedDocument> docs);

std::string votes_csv(const std::vector<VoteRecord>& votes);
std::vector<VoteRecord> parse_votes_csv(std::string_view text);

/// One labeled row per scenario. Cells are fractions; aggregated rows use
/// "mean ± std".
struct ReportRow {
  std::string label;
  MetricsReport mean;
  std::optional<MetricsReport> std;
};

std::string aggregate_csv(const std::vector<ReportRow>& rows);
std::string aggregate_markdown(const std::vector<ReportRow>& rows, const std::string& title = {});
std::string per_seed_csv(const std::string& label, const AggregateResult& agg);

}  // namespace adr
