#include "adr/stub_backend.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>

#include <json.hpp>

#include "adr/error.hpp"
#include "adr/rng.hpp"
#include "adr/util.hpp"

namespace adr {

namespace {

using SparseVec = std::vector<std::pair<std::size_t, double>>;

std::string normalize_token(std::string_view tok) {
  std::size_t b = 0, e = tok.size();
  auto punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  while (b < e && punct(tok[b])) ++b;
  while (e > b && punct(tok[e - 1])) --e;
  return to_lower(tok.substr(b, e - b));
}

SparseVec featurize(const ProcessedDocument& doc, std::size_t buckets) {
  std::map<std::size_t, double> counts;
  for (const auto& t : doc.tokens) {
    const auto norm = normalize_token(t);
    if (norm.empty()) continue;
    counts[fnv1a64(norm) % buckets] += 1.0;
  }
  double sq = 0;
  for (const auto& [_, c] : counts) sq += c * c;
  SparseVec out(counts.begin(), counts.end());
  if (sq > 0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& [_, v] : out) v *= inv;
  }
  return out;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void append_doubles(std::string& out, const std::vector<double>& v) {
  const auto offset = out.size();
  out.resize(offset + v.size() * sizeof(double));
  std::memcpy(out.data() + offset, v.data(), v.size() * sizeof(double));
}

class StubModel final : public TrainedModel {
 public:
  StubModel(StubParameters params, TrainConfig config, std::vector<EpochRecord> log, std::size_t best_epoch)
      : params_(std::move(params)) {
    config_ = std::move(config);
    log_ = std::move(log);
    best_epoch_ = best_epoch;
  }

  std::string backend_name() const override { return "stub"; }

  std::vector<double> score(std::span<const ProcessedDocument> docs) const override {
    std::vector<double> out;
    out.reserve(docs.size());
    std::vector<double> h(params_.hidden);
    for (const auto& d : docs) out.push_back(forward(featurize(d, params_.buckets), h));
    return out;
  }

  std::uint64_t encoder_checksum() const override { return fnv1a64(params_.encoder_bytes()); }
  std::uint64_t classifier_checksum() const override { return fnv1a64(params_.classifier_bytes()); }

  void save(const std::filesystem::path& dir) const override {
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "config.json", train_config_json(config_, "stub"));
    nlohmann::ordered_json meta;
    meta["backend"] = "stub";
    meta["buckets"] = params_.buckets;
    meta["hidden"] = params_.hidden;
    meta["best_epoch"] = best_epoch_;
    meta["encoder_checksum"] = hex64(encoder_checksum());
    meta["classifier_checksum"] = hex64(classifier_checksum());
    write_file_atomic(dir / "model.json", meta.dump(2) + "\n");
    std::string blob = "ADRSTUB1";
    blob += params_.encoder_bytes();
    blob += params_.classifier_bytes();
    write_file_atomic(dir / "checkpoint.bin", blob);
    write_file_atomic(dir / "train_log.csv", training_log_csv(log_));
  }

  double forward(const SparseVec& x, std::vector<double>& h) const {
    const auto H = params_.hidden, B = params_.buckets;
    double z = params_.classifier_bias;
    for (std::size_t k = 0; k < H; ++k) {
      double a = params_.encoder_bias[k];
      const double* row = params_.encoder_weights.data() + k * B;
      for (const auto& [j, v] : x) a += row[j] * v;
      h[k] = std::tanh(a);
      z += params_.classifier_weights[k] * h[k];
    }
    return sigmoid(z);
  }

  const StubParameters& params() const { return params_; }

 private:
  StubParameters params_;
};

struct Adam {
  std::vector<double> m, v;
  std::vector<std::uint64_t> steps;  // per-parameter step counts (lazy updates)
  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0), steps(n, 0) {}

  void update(double& param, std::size_t slot, double grad, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const auto t = static_cast<double>(++steps[slot]);
    m[slot] = b1 * m[slot] + (1 - b1) * grad;
    v[slot] = b2 * v[slot] + (1 - b2) * grad * grad;
    const double mhat = m[slot] / (1 - std::pow(b1, t));
    const double vhat = v[slot] / (1 - std::pow(b2, t));
    param -= lr * mhat / (std::sqrt(vhat) + eps);
  }
};

std::vector<std::size_t> epoch_order(std::span<const ProcessedDocument> train, TrainSampler sampler, Rng& rng) {
  std::vector<std::size_t> order(train.size());
  if (sampler == TrainSampler::random) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(std::span(order));
    return order;
  }
  // Inverse class frequency, with replacement, epoch size = corpus size.
  std::size_t n_pos = 0;
  for (const auto& d : train) n_pos += d.label == 1;
  const std::size_t n_neg = train.size() - n_pos;
  std::vector<double> cumulative(train.size());
  double acc = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    acc += 1.0 / static_cast<double>(train[i].label == 1 ? n_pos : n_neg);
    cumulative[i] = acc;
  }
  for (auto& slot : order) {
    const double u = rng.uniform() * acc;
    slot = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    if (slot >= train.size()) slot = train.size() - 1;
  }
  return order;
}

ModelPtr train(StubParameters params, std::span<const ProcessedDocument> train_all,
               std::span<const ProcessedDocument> dev_all, const TrainConfig& config, std::uint64_t stream) {
  config.validate();
  const auto train_docs = kept(train_all);
  const auto dev_docs = kept(dev_all);
  if (train_docs.empty()) throw ArgumentError("fit: empty training set");
  const bool train_encoder = config.freeze_policy == FreezePolicy::none;
  const auto H = params.hidden, B = params.buckets;

  std::vector<SparseVec> x_train;
  for (const auto& d : train_docs) x_train.push_back(featurize(d, B));
  // Selection falls back to the training set when no dev documents are given.
  const auto& select_docs = dev_docs.empty() ? train_docs : dev_docs;

  Adam enc_opt(train_encoder ? H * B + H : 0);
  Adam cls_opt(H + 1);
  Rng rng(derive_seed(config.model_seed, stream));

  std::vector<EpochRecord> log;
  StubParameters best = params;
  double best_f1 = -1.0;
  std::size_t best_epoch = 0, since_best = 0;

  std::vector<double> h(H), grad_w(H), grad_c(H);
  std::map<std::size_t, std::vector<double>> grad_W;  // bucket -> per-hidden gradient

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto order = epoch_order(train_docs, config.train_sampler, rng);
    double loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double inv_n = 1.0 / static_cast<double>(end - start);
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      std::fill(grad_c.begin(), grad_c.end(), 0.0);
      grad_W.clear();
      double grad_b = 0;
      for (std::size_t s = start; s < end; ++s) {
        const auto i = order[s];
        const auto& x = x_train[i];
        double z = params.classifier_bias;
        for (std::size_t k = 0; k < H; ++k) {
          double a = params.encoder_bias[k];
          const double* row = params.encoder_weights.data() + k * B;
          for (const auto& [j, v] : x) a += row[j] * v;
          h[k] = std::tanh(a);
          z += params.classifier_weights[k] * h[k];
        }
        const double p = sigmoid(z);
        const double y = train_docs[i].label;
        constexpr double tiny = 1e-12;
        loss_sum += -(y * std::log(std::max(p, tiny)) + (1 - y) * std::log(std::max(1 - p, tiny)));
        const double dz = (p - y) * inv_n;
        grad_b += dz;
        for (std::size_t k = 0; k < H; ++k) {
          grad_w[k] += dz * h[k];
          if (train_encoder) {
            const double da = dz * params.classifier_weights[k] * (1 - h[k] * h[k]);
            grad_c[k] += da;
            for (const auto& [j, v] : x) {
              auto& g = grad_W[j];
              if (g.empty()) g.assign(H, 0.0);
              g[k] += da * v;
            }
          }
        }
      }
      if (!std::isfinite(loss_sum))
        throw TrainingDivergenceError("non-finite loss at epoch " + std::to_string(epoch));
      const double lr = config.learning_rate;
      for (std::size_t k = 0; k < H; ++k) cls_opt.update(params.classifier_weights[k], k, grad_w[k], lr);
      cls_opt.update(params.classifier_bias, H, grad_b, lr);
      if (train_encoder) {
        for (std::size_t k = 0; k < H; ++k) enc_opt.update(params.encoder_bias[k], H * B + k, grad_c[k], lr);
        for (const auto& [j, g] : grad_W)
          for (std::size_t k = 0; k < H; ++k) enc_opt.update(params.encoder_weights[k * B + j], k * B + j, g[k], lr);
      }
    }
    const double loss = loss_sum / static_cast<double>(order.size());
    if (!std::isfinite(loss)) throw TrainingDivergenceError("non-finite loss at epoch " + std::to_string(epoch));

    StubModel probe(params, config, {}, epoch);
    const double f1 = macro_f1(probe.score(select_docs), select_docs);
    log.push_back({epoch, loss, f1});
    if (f1 > best_f1) {
      best_f1 = f1;
      best = params;
      best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return std::make_shared<StubModel>(std::move(best), config, std::move(log), best_epoch);
}

}  // namespace

std::string StubParameters::encoder_bytes() const {
  std::string out;
  append_doubles(out, encoder_weights);
  append_doubles(out, encoder_bias);
  return out;
}

std::string StubParameters::classifier_bytes() const {
  std::string out;
  append_doubles(out, classifier_weights);
  append_doubles(out, {classifier_bias});
  return out;
}

const StubParameters& stub_parameters(const TrainedModel& model) {
  auto* stub = dynamic_cast<const StubModel*>(&model);
  if (!stub) throw ArgumentError("not a stub model: " + model.backend_name());
  return stub->params();
}

StubBackend::StubBackend(Options options) : options_(options) {
  if (options_.buckets == 0 || options_.hidden == 0) throw ConfigError("stub backend needs buckets > 0 and hidden > 0");
}

ModelPtr StubBackend::fit_stage1(std::span<const ProcessedDocument> train_docs, std::span<const ProcessedDocument> dev,
                                 const TrainConfig& config) const {
  StubParameters p;
  p.buckets = options_.buckets;
  p.hidden = options_.hidden;
  Rng rng(derive_seed(config.model_seed, 0x1417));
  p.encoder_weights.resize(p.hidden * p.buckets);
  for (auto& w : p.encoder_weights) w = rng.normal();
  p.encoder_bias.assign(p.hidden, 0.0);
  p.classifier_weights.resize(p.hidden);
  const double scale = 0.1 / std::sqrt(static_cast<double>(p.hidden));
  for (auto& w : p.classifier_weights) w = scale * rng.normal();
  return train(std::move(p), train_docs, dev, config, 1);
}

ModelPtr StubBackend::fit_stage2(const TrainedModel& init, std::span<const ProcessedDocument> train_docs,
                                 std::span<const ProcessedDocument> dev, const TrainConfig& config) const {
  return train(stub_parameters(init), train_docs, dev, config, 2);
}

ModelPtr StubBackend::load(const std::filesystem::path& dir) const {
  const auto meta = nlohmann::json::parse(read_file(dir / "model.json"));
  if (meta.value("backend", "") != "stub") throw LoadError(dir.string() + " is not a stub checkpoint");
  StubParameters p;
  p.buckets = meta.at("buckets").get<std::size_t>();
  p.hidden = meta.at("hidden").get<std::size_t>();
  const auto blob = read_file(dir / "checkpoint.bin");
  const std::size_t n = p.hidden * p.buckets + p.hidden + p.hidden + 1;
  if (blob.size() != 8 + n * sizeof(double) || blob.compare(0, 8, "ADRSTUB1") != 0)
    throw LoadError(dir.string() + "/checkpoint.bin: unexpected size or magic");
  std::vector<double> all(n);
  std::memcpy(all.data(), blob.data() + 8, n * sizeof(double));
  auto it = all.begin();
  p.encoder_weights.assign(it, it + static_cast<std::ptrdiff_t>(p.hidden * p.buckets));
  it += static_cast<std::ptrdiff_t>(p.hidden * p.buckets);
  p.encoder_bias.assign(it, it + static_cast<std::ptrdiff_t>(p.hidden));
  it += static_cast<std::ptrdiff_t>(p.hidden);
  p.classifier_weights.assign(it, it + static_cast<std::ptrdiff_t>(p.hidden));
  it += static_cast<std::ptrdiff_t>(p.hidden);
  p.classifier_bias = *it;

  auto config = parse_train_config_json(read_file(dir / "config.json"));
  std::vector<EpochRecord> log;
  const auto rows = parse_csv(read_file(dir / "train_log.csv"));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() < 3) continue;
    log.push_back({std::stoul(rows[r][0]), std::stod(rows[r][1]), std::stod(rows[r][2])});
  }
  return std::make_shared<StubModel>(std::move(p), std::move(config), std::move(log),
                                     meta.at("best_epoch").get<std::size_t>());
}

}  // namespace adr
