#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "adr/preprocess.hpp"

namespace adr {

enum class FreezePolicy { all_but_classifier, none };
enum class TrainSampler { random, class_weighted };

std::string to_string(FreezePolicy p);
std::string to_string(TrainSampler s);
FreezePolicy parse_freeze_policy(std::string_view s);
TrainSampler parse_train_sampler(std::string_view s);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;
  FreezePolicy freeze_policy = FreezePolicy::all_but_classifier;
  TrainSampler train_sampler = TrainSampler::random;
  std::size_t max_epochs = 10;
  /// Epochs without dev macro-F1 improvement before stopping.
  std::size_t patience = 3;
  std::uint64_t model_seed = 0;
  std::string model_id;

  /// Throws ConfigError unless learning_rate > 0 and batch_size >= 1.
  void validate() const;

  // Best configurations found by the original hyper-parameter search.
  static TrainConfig xlmr_source();
  static TrainConfig brb_source();
  static TrainConfig xlmr_target_full();
};

inline constexpr double kDecisionThreshold = 0.5;

struct Prediction {
  std::string doc_id;
  int label = 0;
  /// Positive-class confidence in [0,1]; label == 1 iff score >= 0.5.
  double score = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

struct Capabilities {
  bool supports_freezing = false;
  bool supports_class_weights = false;
  bool is_multilingual = false;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double dev_macro_f1 = 0.0;
};

/// Immutable after fit; scoring is const and thread-safe.
class TrainedModel {
 public:
  virtual ~TrainedModel() = default;

  virtual std::string backend_name() const = 0;
  /// Positive-class scores for the given (kept) documents, in order.
  virtual std::vector<double> score(std::span<const ProcessedDocument> docs) const = 0;
  virtual std::uint64_t encoder_checksum() const = 0;
  virtual std::uint64_t classifier_checksum() const = 0;
  /// Writes config.json, checkpoint and train_log.csv into dir.
  virtual void save(const std::filesystem::path& dir) const = 0;

  const TrainConfig& config() const noexcept { return config_; }
  const std::vector<EpochRecord>& log() const noexcept { return log_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }

 protected:
  TrainConfig config_;
  std::vector<EpochRecord> log_;
  std::size_t best_epoch_ = 0;
};

using ModelPtr = std::shared_ptr<const TrainedModel>;

/// Trainable binary classifier. fit_* never mutate the backend; independent
/// fits may run concurrently.
class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;

  virtual std::string name() const = 0;
  virtual Capabilities capabilities() const = 0;

  /// Source-language fine-tuning. Dropped documents are ignored. Throws
  /// ArgumentError on an empty train set and TrainingDivergenceError on a
  /// non-finite loss.
  virtual ModelPtr fit_stage1(std::span<const ProcessedDocument> train, std::span<const ProcessedDocument> dev,
                              const TrainConfig& config) const = 0;
  /// Continues from `init` on target-language data.
  virtual ModelPtr fit_stage2(const TrainedModel& init, std::span<const ProcessedDocument> train,
                              std::span<const ProcessedDocument> dev, const TrainConfig& config) const = 0;
  virtual ModelPtr load(const std::filesystem::path& dir) const = 0;
};

using BackendPtr = std::shared_ptr<const ClassifierBackend>;

/// One prediction per kept document, order-preserving. Ids of dropped
/// documents are appended to `skipped` when given.
std::vector<Prediction> predict(const TrainedModel& model, std::span<const ProcessedDocument> docs,
                                std::vector<std::string>* skipped = nullptr);

/// Macro F1 (percent) of thresholded scores against the documents' labels.
double macro_f1(std::span<const double> scores, std::span<const ProcessedDocument> docs);

std::string predictions_csv(const std::vector<Prediction>& preds);
std::vector<Prediction> parse_predictions_csv(std::string_view text);
std::string training_log_csv(const std::vector<EpochRecord>& log);
std::string train_config_json(const TrainConfig& config, const std::string& backend);
TrainConfig parse_train_config_json(std::string_view text);

}  // namespace adr
