#pragma once

#include <string>
#include <vector>

#include "adr/backend.hpp"
#include "adr/embeddings.hpp"

namespace adr {

enum class SvmKernel { rbf, linear };

std::string to_string(SvmKernel k);
SvmKernel parse_svm_kernel(std::string_view s);

struct SvmOptions {
  SvmKernel kernel = SvmKernel::rbf;
  double c = 1.0;
  /// <= 0 selects gamma = 1 / (n_features * Var(X)).
  double gamma = 0.0;
  /// Per-class weights n / (2 * n_class); off gives plain C for every sample.
  bool balanced = true;
  double tolerance = 1e-3;
};

/// Balanced class weight n_total / (2 * n_class).
double balanced_class_weight(std::size_t n_total, std::size_t n_class);

/// Averaged word embeddings fed to a soft-margin SVM solved by SMO.
///
/// There is no encoder to freeze and no epoch loop: fit_stage2 retrains from
/// scratch on the target data. Scores are sigmoid(decision value), so the
/// predicted label is 1 exactly when the decision value is non-negative.
class SvmBackend final : public ClassifierBackend {
 public:
  explicit SvmBackend(EmbeddingPtr embeddings, SvmOptions options = {});

  std::string name() const override { return "svm"; }
  Capabilities capabilities() const override { return {false, true, embeddings_->aligned()}; }

  ModelPtr fit_stage1(std::span<const ProcessedDocument> train, std::span<const ProcessedDocument> dev,
                      const TrainConfig& config) const override;
  ModelPtr fit_stage2(const TrainedModel& init, std::span<const ProcessedDocument> train,
                      std::span<const ProcessedDocument> dev, const TrainConfig& config) const override;
  ModelPtr load(const std::filesystem::path& dir) const override;

  const SvmOptions& options() const noexcept { return options_; }

 private:
  EmbeddingPtr embeddings_;
  SvmOptions options_;
};

/// Trains the baseline directly. Documents with no known word are embedded
/// as zero vectors and counted in `oov_documents` (a warning is logged).
ModelPtr fit_svm_baseline(std::span<const ProcessedDocument> train, EmbeddingPtr embeddings,
                          const SvmOptions& options = {}, const TrainConfig& config = {},
                          std::span<const ProcessedDocument> dev = {}, std::size_t* oov_documents = nullptr);

/// Dual solution of a binary soft-margin SVM on dense vectors.
struct SvmSolution {
  std::vector<std::vector<double>> support_vectors;
  std::vector<double> coef;  // alpha_i * y_i
  double rho = 0.0;
  double gamma = 0.0;
  SvmKernel kernel = SvmKernel::rbf;
  std::size_t iterations = 0;

  double decision(std::span<const double> x) const;
};

/// labels are 0/1; class 1 maps to y = +1. Per-sample bound is C * weight(label).
SvmSolution solve_svm(const std::vector<std::vector<double>>& x, std::span<const int> labels,
                      const SvmOptions& options);

}  // namespace adr
