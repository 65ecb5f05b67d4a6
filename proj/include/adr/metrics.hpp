#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace adr {

/// Positive class is label 1.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Per-class and macro metrics in percent (0..100).
struct MetricsReport {
  double p0 = 0, r0 = 0, f1_0 = 0;
  double p1 = 0, r1 = 0, f1_1 = 0;
  double p_macro = 0, r_macro = 0, f1_macro = 0;
  double auc = 0;

  /// Set when a precision or recall had a zero denominator and was reported
  /// as 0.
  enum Flag : unsigned {
    p0_undefined = 1u << 0,
    r0_undefined = 1u << 1,
    p1_undefined = 1u << 2,
    r1_undefined = 1u << 3,
  };
  unsigned flags = 0;

  static constexpr std::size_t kFields = 10;
  /// Field order: P_0 R_0 F1_0 P_1 R_1 F1_1 P_m R_m F1_m AUC.
  static const std::vector<std::string>& field_names();
  std::vector<double> values() const;
  static MetricsReport from_values(std::span<const double> v);
};

/// Throws AlignmentError on length mismatch and ValueError on labels outside
/// {0,1}.
ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> gold);

MetricsReport report(const ConfusionMatrix& cm);

/// Balanced accuracy (TPR + TNR) / 2 in percent: the ROC-AUC of a classifier
/// that only emits hard labels. Throws UndefinedMetricError when a class has
/// no gold members.
double auc_hard(const ConfusionMatrix& cm);

/// Threshold-free ROC-AUC over positive-class scores (Mann-Whitney with tie
/// correction), in percent. Separate from the hard AUC in reports.
double roc_auc_scores(std::span<const double> scores, std::span<const int> gold);

/// Table-style rendering: machine-readable CSV uses fractions with six
/// decimals, markdown uses percent with two.
std::string report_csv(const MetricsReport& r);
std::string report_markdown(const MetricsReport& r, const std::string& title = {});

}  // namespace adr
