#include "adr/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "adr/error.hpp"
#include "adr/util.hpp"

namespace adr {

namespace {

// Percent ratio; 0 with a flag on zero denominator.
double ratio(std::uint64_t num, std::uint64_t den, unsigned flag, unsigned& flags) {
  if (den == 0) {
    flags |= flag;
    return 0.0;
  }
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

double f1(double p, double r) { return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

const std::vector<std::string>& MetricsReport::field_names() {
  static const std::vector<std::string> names = {"P_0", "R_0", "F1_0", "P_1", "R_1",
                                                 "F1_1", "P_m", "R_m", "F1_m", "AUC"};
  return names;
}

std::vector<double> MetricsReport::values() const { return {p0, r0, f1_0, p1, r1, f1_1, p_macro, r_macro, f1_macro, auc}; }

MetricsReport MetricsReport::from_values(std::span<const double> v) {
  if (v.size() != kFields) throw ArgumentError("MetricsReport::from_values expects 10 values");
  MetricsReport r;
  r.p0 = v[0];
  r.r0 = v[1];
  r.f1_0 = v[2];
  r.p1 = v[3];
  r.r1 = v[4];
  r.f1_1 = v[5];
  r.p_macro = v[6];
  r.r_macro = v[7];
  r.f1_macro = v[8];
  r.auc = v[9];
  return r;
}

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> gold) {
  if (preds.size() != gold.size())
    throw AlignmentError("confusion: " + std::to_string(preds.size()) + " predictions vs " +
                         std::to_string(gold.size()) + " gold labels");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], g = gold[i];
    if ((p != 0 && p != 1) || (g != 0 && g != 1)) throw ValueError("confusion: labels must be 0 or 1");
    if (p == 1 && g == 1) ++cm.tp;
    else if (p == 1) ++cm.fp;
    else if (g == 1) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

MetricsReport report(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.p1 = ratio(cm.tp, cm.tp + cm.fp, MetricsReport::p1_undefined, r.flags);
  r.r1 = ratio(cm.tp, cm.tp + cm.fn, MetricsReport::r1_undefined, r.flags);
  r.p0 = ratio(cm.tn, cm.tn + cm.fn, MetricsReport::p0_undefined, r.flags);
  r.r0 = ratio(cm.tn, cm.tn + cm.fp, MetricsReport::r0_undefined, r.flags);
  r.f1_0 = f1(r.p0, r.r0);
  r.f1_1 = f1(r.p1, r.r1);
  r.p_macro = (r.p0 + r.p1) / 2.0;
  r.r_macro = (r.r0 + r.r1) / 2.0;
  r.f1_macro = (r.f1_0 + r.f1_1) / 2.0;
  r.auc = (r.r0 + r.r1) / 2.0;
  return r;
}

double auc_hard(const ConfusionMatrix& cm) {
  if (cm.tp + cm.fn == 0) throw UndefinedMetricError("auc_hard: no gold positives");
  if (cm.tn + cm.fp == 0) throw UndefinedMetricError("auc_hard: no gold negatives");
  return report(cm).auc;
}

double roc_auc_scores(std::span<const double> scores, std::span<const int> gold) {
  if (scores.size() != gold.size()) throw AlignmentError("roc_auc_scores: length mismatch");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Average ranks over ties.
  std::vector<double> rank(scores.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = avg;
    i = j + 1;
  }
  double n_pos = 0, n_neg = 0, rank_sum = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == 1) {
      ++n_pos;
      rank_sum += rank[i];
    } else {
      ++n_neg;
    }
  }
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetricError("roc_auc_scores: need both classes in gold labels");
  return 100.0 * (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg);
}

std::string report_csv(const MetricsReport& r) {
  std::string out = csv_row(MetricsReport::field_names());
  std::vector<std::string> cells;
  for (double v : r.values()) cells.push_back(format_fixed(v / 100.0, 6));
  out += csv_row(cells);
  return out;
}

std::string report_markdown(const MetricsReport& r, const std::string& title) {
  std::string out;
  if (!title.empty()) out += "### " + title + "\n\n";
  out += "|";
  for (const auto& n : MetricsReport::field_names()) out += " " + n + " |";
  out += "\n|";
  for (std::size_t i = 0; i < MetricsReport::kFields; ++i) out += "---:|";
  out += "\n|";
  for (double v : r.values()) out += " " + format_fixed(v, 2) + " |";
  out += "\n";
  if (r.flags) {
    out += "\nUndefined (reported as 0):";
    if (r.flags & MetricsReport::p0_undefined) out += " P_0";
    if (r.flags & MetricsReport::r0_undefined) out += " R_0";
    if (r.flags & MetricsReport::p1_undefined) out += " P_1";
    if (r.flags & MetricsReport::r1_undefined) out += " R_1";
    out += "\n";
  }
  return out;
}

}  // namespace adr
