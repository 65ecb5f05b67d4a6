#include "adr/svm_backend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "adr/error.hpp"
#include "adr/util.hpp"

namespace adr {

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double kernel_value(SvmKernel k, double gamma, std::span<const double> a, std::span<const double> b) {
  if (k == SvmKernel::linear) return dot(a, b);
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return std::exp(-gamma * d);
}

double scale_gamma(const std::vector<std::vector<double>>& x) {
  double sum = 0, sq = 0, n = 0;
  for (const auto& row : x)
    for (double v : row) {
      sum += v;
      sq += v * v;
      ++n;
    }
  if (n == 0) return 1.0;
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  const double features = static_cast<double>(x.front().size());
  return var > 0 ? 1.0 / (features * var) : 1.0;
}

class KernelCache {
 public:
  KernelCache(const std::vector<std::vector<double>>& x, SvmKernel kernel, double gamma)
      : x_(x), kernel_(kernel), gamma_(gamma), rows_(x.size()), diag_(x.size()) {
    for (std::size_t i = 0; i < x.size(); ++i) diag_[i] = kernel_value(kernel, gamma, x[i], x[i]);
  }

  const std::vector<double>& row(std::size_t i) {
    auto& r = rows_[i];
    if (r.empty()) {
      r.resize(x_.size());
      for (std::size_t j = 0; j < x_.size(); ++j) r[j] = kernel_value(kernel_, gamma_, x_[i], x_[j]);
    }
    return r;
  }
  double diag(std::size_t i) const { return diag_[i]; }

 private:
  const std::vector<std::vector<double>>& x_;
  SvmKernel kernel_;
  double gamma_;
  std::vector<std::vector<double>> rows_;
  std::vector<double> diag_;
};

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

class SvmModel final : public TrainedModel {
 public:
  SvmModel(SvmSolution solution, EmbeddingPtr embeddings, TrainConfig config, std::vector<EpochRecord> log)
      : solution_(std::move(solution)), embeddings_(std::move(embeddings)) {
    config_ = std::move(config);
    log_ = std::move(log);
    best_epoch_ = 1;
  }

  std::string backend_name() const override { return "svm"; }

  std::vector<double> score(std::span<const ProcessedDocument> docs) const override {
    std::vector<double> out;
    out.reserve(docs.size());
    for (const auto& d : docs) {
      const double f = solution_.decision(document_embedding(d.tokens, *embeddings_));
      // Nudge exact zeros so the threshold keeps f >= 0 -> positive.
      out.push_back(f >= 0 ? std::max(sigmoid(f), kDecisionThreshold) : std::min(sigmoid(f), std::nextafter(kDecisionThreshold, 0.0)));
    }
    return out;
  }

  std::uint64_t encoder_checksum() const override { return embeddings_->fingerprint(); }

  std::uint64_t classifier_checksum() const override { return fnv1a64(serialize().dump()); }

  void save(const std::filesystem::path& dir) const override {
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "config.json", train_config_json(config_, "svm"));
    write_file_atomic(dir / "checkpoint.json", serialize().dump() + "\n");
    write_file_atomic(dir / "train_log.csv", training_log_csv(log_));
  }

  nlohmann::ordered_json serialize() const {
    nlohmann::ordered_json j;
    j["backend"] = "svm";
    j["kernel"] = to_string(solution_.kernel);
    j["gamma"] = solution_.gamma;
    j["rho"] = solution_.rho;
    j["embedding_fingerprint"] = hex64(embeddings_->fingerprint());
    j["coef"] = solution_.coef;
    j["support_vectors"] = solution_.support_vectors;
    return j;
  }

 private:
  SvmSolution solution_;
  EmbeddingPtr embeddings_;
};

}  // namespace

std::string to_string(SvmKernel k) { return k == SvmKernel::linear ? "linear" : "rbf"; }

SvmKernel parse_svm_kernel(std::string_view s) {
  if (s == "rbf") return SvmKernel::rbf;
  if (s == "linear") return SvmKernel::linear;
  throw ConfigError("unknown svm kernel '" + std::string(s) + "'");
}

double balanced_class_weight(std::size_t n_total, std::size_t n_class) {
  if (n_class == 0) throw ArgumentError("balanced_class_weight: empty class");
  return static_cast<double>(n_total) / (2.0 * static_cast<double>(n_class));
}

double SvmSolution::decision(std::span<const double> x) const {
  double f = -rho;
  for (std::size_t i = 0; i < coef.size(); ++i) f += coef[i] * kernel_value(kernel, gamma, support_vectors[i], x);
  return f;
}

SvmSolution solve_svm(const std::vector<std::vector<double>>& x, std::span<const int> labels,
                      const SvmOptions& options) {
  if (x.empty()) throw ArgumentError("svm: empty training set");
  if (x.size() != labels.size()) throw AlignmentError("svm: features and labels differ in length");
  if (!(options.c > 0)) throw ConfigError("svm: C must be > 0");
  const std::size_t n = x.size();

  SvmSolution sol;
  sol.kernel = options.kernel;
  sol.gamma = options.gamma > 0 ? options.gamma : scale_gamma(x);

  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l == 1;
  if (n_pos == 0 || n_pos == n) {
    // One class only: constant decision.
    sol.rho = n_pos == 0 ? 1.0 : -1.0;
    return sol;
  }

  std::vector<double> y(n), cap(n);
  const double w_pos = options.balanced ? balanced_class_weight(n, n_pos) : 1.0;
  const double w_neg = options.balanced ? balanced_class_weight(n, n - n_pos) : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = labels[i] == 1 ? 1.0 : -1.0;
    cap[i] = options.c * (labels[i] == 1 ? w_pos : w_neg);
  }

  KernelCache kc(x, options.kernel, sol.gamma);
  std::vector<double> alpha(n, 0.0), grad(n, -1.0);
  auto is_upper = [&](std::size_t t) { return alpha[t] >= cap[t]; };
  auto is_lower = [&](std::size_t t) { return alpha[t] <= 0; };

  const std::size_t max_iter = std::max<std::size_t>(10'000'000, 100 * n);
  std::size_t iter = 0;
  for (; iter < max_iter; ++iter) {
    // Working-set selection using second-order information.
    double gmax = -kInf, gmax2 = -kInf;
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      const bool up = y[t] > 0 ? !is_upper(t) : !is_lower(t);
      if (up && -y[t] * grad[t] >= gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    }
    if (i == n) break;
    const auto& qi = kc.row(i);
    std::size_t j = n;
    double best_obj = kInf;
    for (std::size_t t = 0; t < n; ++t) {
      const bool low = y[t] > 0 ? !is_lower(t) : !is_upper(t);
      if (!low) continue;
      const double yg = y[t] * grad[t];
      gmax2 = std::max(gmax2, yg);
      const double b = gmax + yg;
      if (b > 0) {
        double a = kc.diag(i) + kc.diag(t) - 2.0 * qi[t];
        if (a <= 0) a = kTau;
        const double obj = -(b * b) / a;
        if (obj <= best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    if (gmax + gmax2 < options.tolerance || j == n) break;

    const auto& qj = kc.row(j);
    const double Ci = cap[i], Cj = cap[j];
    const double old_ai = alpha[i], old_aj = alpha[j];
    const double Qij = y[i] * y[j] * qi[j];
    if (y[i] != y[j]) {
      double quad = kc.diag(i) + kc.diag(j) + 2.0 * Qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > Ci - Cj) {
        if (alpha[i] > Ci) {
          alpha[i] = Ci;
          alpha[j] = Ci - diff;
        }
      } else if (alpha[j] > Cj) {
        alpha[j] = Cj;
        alpha[i] = Cj + diff;
      }
    } else {
      double quad = kc.diag(i) + kc.diag(j) - 2.0 * Qij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > Ci) {
        if (alpha[i] > Ci) {
          alpha[i] = Ci;
          alpha[j] = sum - Ci;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > Cj) {
        if (alpha[j] > Cj) {
          alpha[j] = Cj;
          alpha[i] = sum - Cj;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * (y[i] * qi[t] * dai + y[j] * qj[t] * daj);
  }
  sol.iterations = iter;
  if (iter == max_iter) spdlog::warn("svm: reached iteration limit {}", max_iter);

  double ub = kInf, lb = -kInf, sum_free = 0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (is_upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (is_lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  sol.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0) {
      sol.support_vectors.push_back(x[t]);
      sol.coef.push_back(alpha[t] * y[t]);
    }
  }
  return sol;
}

ModelPtr fit_svm_baseline(std::span<const ProcessedDocument> train_all, EmbeddingPtr embeddings,
                          const SvmOptions& options, const TrainConfig& config,
                          std::span<const ProcessedDocument> dev_all, std::size_t* oov_documents) {
  if (!embeddings) throw ArgumentError("svm: no embedding source");
  const auto train = kept(train_all);
  if (train.empty()) throw ArgumentError("fit: empty training set");
  std::vector<std::vector<double>> x;
  std::vector<int> labels;
  std::size_t oov = 0;
  for (const auto& d : train) {
    std::size_t known = 0;
    x.push_back(document_embedding(d.tokens, *embeddings, &known));
    labels.push_back(d.label);
    if (known == 0) {
      ++oov;
      spdlog::warn("svm: document '{}' has no known words; using the zero vector", d.id);
    }
  }
  if (oov_documents) *oov_documents = oov;
  auto solution = solve_svm(x, labels, options);
  double hinge = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    hinge += std::max(0.0, 1.0 - (labels[i] == 1 ? 1.0 : -1.0) * solution.decision(x[i]));
  hinge /= static_cast<double>(x.size());
  const SvmModel probe(solution, embeddings, config, {});
  const auto dev = kept(dev_all);
  const auto& eval = dev.empty() ? train : dev;
  std::vector<EpochRecord> log{{1, hinge, macro_f1(probe.score(eval), eval)}};
  return std::make_shared<SvmModel>(std::move(solution), std::move(embeddings), config, std::move(log));
}

SvmBackend::SvmBackend(EmbeddingPtr embeddings, SvmOptions options)
    : embeddings_(std::move(embeddings)), options_(options) {
  if (!embeddings_) throw ConfigError("svm backend needs an embedding source");
  if (!(options_.c > 0)) throw ConfigError("svm: C must be > 0");
}

ModelPtr SvmBackend::fit_stage1(std::span<const ProcessedDocument> train, std::span<const ProcessedDocument> dev,
                                const TrainConfig& config) const {
  return fit_svm_baseline(train, embeddings_, options_, config, dev);
}

ModelPtr SvmBackend::fit_stage2(const TrainedModel&, std::span<const ProcessedDocument> train,
                                std::span<const ProcessedDocument> dev, const TrainConfig& config) const {
  return fit_svm_baseline(train, embeddings_, options_, config, dev);
}

ModelPtr SvmBackend::load(const std::filesystem::path& dir) const {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(dir / "checkpoint.json"));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(dir.string() + "/checkpoint.json: " + e.what());
  }
  if (j.value("backend", "") != "svm") throw LoadError(dir.string() + " is not an svm checkpoint");
  if (j.value("embedding_fingerprint", "") != hex64(embeddings_->fingerprint()))
    throw LoadError(dir.string() + ": checkpoint was trained with different embeddings");
  SvmSolution sol;
  sol.kernel = parse_svm_kernel(j.at("kernel").get<std::string>());
  sol.gamma = j.at("gamma").get<double>();
  sol.rho = j.at("rho").get<double>();
  sol.coef = j.at("coef").get<std::vector<double>>();
  sol.support_vectors = j.at("support_vectors").get<std::vector<std::vector<double>>>();
  auto config = parse_train_config_json(read_file(dir / "config.json"));
  std::vector<EpochRecord> log;
  const auto rows = parse_csv(read_file(dir / "train_log.csv"));
  for (std::size_t r = 1; r < rows.size(); ++r)
    if (rows[r].size() >= 3) log.push_back({std::stoul(rows[r][0]), std::stod(rows[r][1]), std::stod(rows[r][2])});
  return std::make_shared<SvmModel>(std::move(sol), embeddings_, std::move(config), std::move(log));
}

}  // namespace adr
