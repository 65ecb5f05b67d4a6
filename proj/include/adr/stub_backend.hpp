#pragma once

#include <string>
#include <vector>

#include "adr/backend.hpp"

namespace adr {

/// Deterministic CPU backend for tests and smoke runs.
///
/// Documents become L2-normalized hashed bag-of-words vectors. The "encoder"
/// is a dense tanh layer over those buckets, seeded by model_seed; the
/// "classifier" is a logistic unit over the encoder output. Training uses
/// mini-batch Adam on binary cross-entropy. With FreezePolicy::all_but_classifier
/// the encoder weights are never written.
class StubBackend final : public ClassifierBackend {
 public:
  struct Options {
    std::size_t buckets = 1024;
    std::size_t hidden = 64;
  };

  StubBackend() = default;
  explicit StubBackend(Options options);

  std::string name() const override { return "stub"; }
  Capabilities capabilities() const override { return {true, true, true}; }

  ModelPtr fit_stage1(std::span<const ProcessedDocument> train, std::span<const ProcessedDocument> dev,
                      const TrainConfig& config) const override;
  ModelPtr fit_stage2(const TrainedModel& init, std::span<const ProcessedDocument> train,
                      std::span<const ProcessedDocument> dev, const TrainConfig& config) const override;
  ModelPtr load(const std::filesystem::path& dir) const override;

 private:
  Options options_;
};

/// Parameters of a stub model, exposed for freezing checks.
struct StubParameters {
  std::size_t buckets = 0;
  std::size_t hidden = 0;
  std::vector<double> encoder_weights;  // hidden x buckets, row-major
  std::vector<double> encoder_bias;     // hidden
  std::vector<double> classifier_weights;  // hidden
  double classifier_bias = 0.0;

  std::string encoder_bytes() const;
  std::string classifier_bytes() const;
};

/// Returns the parameters of a model produced by StubBackend, or throws
/// ArgumentError for other model types.
const StubParameters& stub_parameters(const TrainedModel& model);

}  // namespace adr
