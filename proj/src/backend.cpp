#include "adr/backend.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "adr/error.hpp"
#include "adr/metrics.hpp"
#include "adr/util.hpp"

namespace adr {

std::string to_string(FreezePolicy p) { return p == FreezePolicy::none ? "none" : "all_but_classifier"; }
std::string to_string(TrainSampler s) { return s == TrainSampler::class_weighted ? "class_weighted" : "random"; }

FreezePolicy parse_freeze_policy(std::string_view s) {
  if (s == "all_but_classifier" || s == "1") return FreezePolicy::all_but_classifier;
  if (s == "none" || s == "0") return FreezePolicy::none;
  throw ConfigError("unknown freeze policy '" + std::string(s) + "'");
}

TrainSampler parse_train_sampler(std::string_view s) {
  if (s == "random") return TrainSampler::random;
  if (s == "class_weighted" || s == "weighted") return TrainSampler::class_weighted;
  throw ConfigError("unknown train sampler '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
}

TrainConfig TrainConfig::xlmr_source() {
  TrainConfig c;
  c.learning_rate = 0.00001056;
  c.batch_size = 7;
  c.freeze_policy = FreezePolicy::all_but_classifier;
  c.train_sampler = TrainSampler::random;
  c.model_id = "xlm-roberta-base";
  return c;
}

TrainConfig TrainConfig::brb_source() {
  TrainConfig c;
  c.learning_rate = 0.00001584;
  c.batch_size = 8;
  c.freeze_policy = FreezePolicy::all_but_classifier;
  c.train_sampler = TrainSampler::random;
  c.model_id = "cambridgeltl/BioRedditBERT-uncased";
  return c;
}

TrainConfig TrainConfig::xlmr_target_full() {
  TrainConfig c = xlmr_source();
  c.freeze_policy = FreezePolicy::none;
  c.train_sampler = TrainSampler::class_weighted;
  return c;
}

std::vector<Prediction> predict(const TrainedModel& model, std::span<const ProcessedDocument> docs,
                                std::vector<std::string>* skipped) {
  std::vector<ProcessedDocument> keep;
  keep.reserve(docs.size());
  for (const auto& d : docs) {
    if (d.dropped) {
      if (skipped) skipped->push_back(d.id);
    } else {
      keep.push_back(d);
    }
  }
  if (keep.empty()) return {};
  const auto scores = model.score(keep);
  if (scores.size() != keep.size())
    throw InvariantError("backend returned " + std::to_string(scores.size()) + " scores for " +
                         std::to_string(keep.size()) + " documents");
  std::vector<Prediction> out;
  out.reserve(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const double s = std::clamp(scores[i], 0.0, 1.0);
    out.push_back({keep[i].id, s >= kDecisionThreshold ? 1 : 0, s});
  }
  return out;
}

double macro_f1(std::span<const double> scores, std::span<const ProcessedDocument> docs) {
  std::vector<int> pred, gold;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    pred.push_back(scores[i] >= kDecisionThreshold ? 1 : 0);
    gold.push_back(docs[i].label);
  }
  return report(confusion(pred, gold)).f1_macro;
}

std::string predictions_csv(const std::vector<Prediction>& preds) {
  std::string out = csv_row({"doc_id", "label", "score"});
  for (const auto& p : preds) out += csv_row({p.doc_id, std::to_string(p.label), format_fixed(p.score, 6)});
  return out;
}

std::vector<Prediction> parse_predictions_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw SchemaError("predictions csv: missing header");
  int id_col = -1, label_col = -1, score_col = -1;
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    const auto h = trim(rows[0][i]);
    if (h == "doc_id" || h == "id") id_col = static_cast<int>(i);
    else if (h == "label" || h == "final") label_col = static_cast<int>(i);
    else if (h == "score") score_col = static_cast<int>(i);
  }
  if (id_col < 0 || label_col < 0) throw SchemaError("predictions csv: need doc_id and label (or final) columns");
  std::vector<Prediction> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && trim(row[0]).empty()) continue;
    const auto need = static_cast<std::size_t>(std::max({id_col, label_col, score_col}));
    if (row.size() <= need) throw SchemaError("predictions csv: short row " + std::to_string(r + 1));
    Prediction p;
    p.doc_id = row[static_cast<std::size_t>(id_col)];
    const auto l = trim(row[static_cast<std::size_t>(label_col)]);
    if (l != "0" && l != "1") throw ValueError("predictions csv: label '" + l + "' outside {0,1} at row " +
                                               std::to_string(r + 1));
    p.label = l == "1";
    p.score = p.label;
    if (score_col >= 0) {
      try {
        p.score = std::stod(row[static_cast<std::size_t>(score_col)]);
      } catch (const std::exception&) {
        throw ValueError("predictions csv: bad score at row " + std::to_string(r + 1));
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::string training_log_csv(const std::vector<EpochRecord>& log) {
  std::string out = csv_row({"epoch", "loss", "dev_macro_f1"});
  for (const auto& e : log)
    out += csv_row({std::to_string(e.epoch), format_fixed(e.loss, 8), format_fixed(e.dev_macro_f1, 4)});
  return out;
}

std::string train_config_json(const TrainConfig& c, const std::string& backend) {
  nlohmann::ordered_json j;
  j["backend"] = backend;
  j["model_id"] = c.model_id;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["freeze_policy"] = to_string(c.freeze_policy);
  j["train_sampler"] = to_string(c.train_sampler);
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["model_seed"] = c.model_seed;
  return j.dump(2) + "\n";
}

TrainConfig parse_train_config_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    TrainConfig c;
    c.model_id = j.value("model_id", "");
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.freeze_policy = parse_freeze_policy(j.at("freeze_policy").get<std::string>());
    c.train_sampler = parse_train_sampler(j.at("train_sampler").get<std::string>());
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.patience = j.value("patience", std::size_t{3});
    c.model_seed = j.at("model_seed").get<std::uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("train config: ") + e.what());
  }
}

}  // namespace adr
