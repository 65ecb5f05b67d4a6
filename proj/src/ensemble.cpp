#include "adr/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "adr/error.hpp"
#include "adr/util.hpp"

namespace adr {

std::string to_string(TieBreak t) { return t == TieBreak::positive ? "positive" : "negative"; }

TieBreak parse_tie_break(std::string_view s) {
  if (s == "positive") return TieBreak::positive;
  if (s == "negative") return TieBreak::negative;
  throw ConfigError("unknown tie_break '" + std::string(s) + "'");
}

const std::vector<std::uint64_t>& default_model_seeds() {
  static const std::vector<std::uint64_t> seeds = {78, 99, 227, 409, 422, 482, 485, 841, 857, 910};
  return seeds;
}

void EnsembleSpec::validate() const {
  auto check = [](const std::vector<std::uint64_t>& seeds, const char* what) {
    if (seeds.empty()) throw ConfigError(std::string(what) + " must not be empty");
    if (std::set(seeds.begin(), seeds.end()).size() != seeds.size())
      throw ConfigError(std::string(what) + " contains duplicates");
  };
  check(model_seeds, "model_seeds");
  check(sampling_seeds, "sampling_seeds");
  if (workers == 0) throw ConfigError("workers must be >= 1");
}

std::vector<VoteRecord> majority_vote(const std::vector<std::pair<std::string, std::vector<int>>>& votes_per_doc,
                                      TieBreak tie_break) {
  std::vector<VoteRecord> out;
  out.reserve(votes_per_doc.size());
  const std::size_t width = votes_per_doc.empty() ? 0 : votes_per_doc.front().second.size();
  for (const auto& [id, votes] : votes_per_doc) {
    if (votes.empty()) throw ArgumentError("majority_vote: empty vote list for '" + id + "'");
    if (votes.size() != width)
      throw ArgumentError("majority_vote: '" + id + "' has " + std::to_string(votes.size()) + " votes, expected " +
                          std::to_string(width));
    std::size_t ones = 0;
    for (int v : votes) {
      if (v != 0 && v != 1) throw ValueError("majority_vote: vote outside {0,1} for '" + id + "'");
      ones += static_cast<std::size_t>(v);
    }
    const std::size_t zeros = votes.size() - ones;
    VoteRecord r{id, votes, 0, ones == zeros};
    if (r.was_tie) r.final = tie_break == TieBreak::positive ? 1 : 0;
    else r.final = ones > zeros ? 1 : 0;
    out.push_back(std::move(r));
  }
  return out;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("mean: no values");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double std_dev(std::span<const double> values) {
  if (values.size() < 2) throw ArgumentError("std_dev: need at least 2 values, got " + std::to_string(values.size()));
  const double m = mean(values);
  double ss = 0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

AggregateResult aggregate(const std::vector<MetricsReport>& reports, std::vector<std::uint64_t> seeds) {
  if (reports.size() < 2) throw ArgumentError("aggregate: need at least 2 seed reports, got " + std::to_string(reports.size()));
  if (!seeds.empty() && seeds.size() != reports.size()) throw ArgumentError("aggregate: seeds and reports differ in length");
  AggregateResult r;
  r.seeds = std::move(seeds);
  r.per_seed_reports = reports;
  std::vector<double> means(MetricsReport::kFields), stds(MetricsReport::kFields);
  for (std::size_t f = 0; f < MetricsReport::kFields; ++f) {
    std::vector<double> col;
    for (const auto& rep : reports) col.push_back(rep.values()[f]);
    means[f] = mean(col);
    stds[f] = std_dev(col);
  }
  r.mean_report = MetricsReport::from_values(means);
  r.std_report = MetricsReport::from_values(stds);
  for (const auto& rep : reports) r.mean_report.flags |= rep.flags;
  return r;
}

std::vector<VoteRecord> vote_predictions(const std::vector<std::vector<Prediction>>& per_model, TieBreak tie_break) {
  if (per_model.empty()) throw ArgumentError("vote_predictions: no models");
  const auto& first = per_model.front();
  std::vector<std::pair<std::string, std::vector<int>>> table;
  table.reserve(first.size());
  for (const auto& p : first) table.push_back({p.doc_id, {}});
  for (std::size_t m = 0; m < per_model.size(); ++m) {
    const auto& preds = per_model[m];
    if (preds.size() != first.size())
      throw AlignmentError("vote_predictions: model " + std::to_string(m) + " predicted " +
                           std::to_string(preds.size()) + " documents, expected " + std::to_string(first.size()));
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds[i].doc_id != table[i].first)
        throw AlignmentError("vote_predictions: document order differs at row " + std::to_string(i + 1));
      table[i].second.push_back(preds[i].label);
    }
  }
  return majority_vote(table, tie_break);
}

MetricsReport score_votes(const std::vector<VoteRecord>& votes, std::span<const ProcessedDocument> docs) {
  std::unordered_map<std::string, int> gold;
  for (const auto& d : docs) gold[d.id] = d.label;
  std::vector<int> pred, truth;
  for (const auto& v : votes) {
    const auto it = gold.find(v.doc_id);
    if (it == gold.end()) throw AlignmentError("score_votes: unknown document '" + v.doc_id + "'");
    pred.push_back(v.final);
    truth.push_back(it->second);
  }
  return report(confusion(pred, truth));
}

std::string votes_csv(const std::vector<VoteRecord>& votes) {
  const std::size_t width = votes.empty() ? 0 : votes.front().votes.size();
  std::vector<std::string> header{"doc_id"};
  for (std::size_t i = 1; i <= width; ++i) header.push_back("v" + std::to_string(i));
  header.push_back("final");
  header.push_back("was_tie");
  std::string out = csv_row(header);
  for (const auto& v : votes) {
    std::vector<std::string> row{v.doc_id};
    for (int x : v.votes) row.push_back(std::to_string(x));
    row.push_back(std::to_string(v.final));
    row.push_back(v.was_tie ? "true" : "false");
    out += csv_row(row);
  }
  return out;
}

std::vector<VoteRecord> parse_votes_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty() || rows[0].size() < 3 || rows[0][0] != "doc_id") throw SchemaError("votes csv: bad header");
  const std::size_t width = rows[0].size() - 3;
  std::vector<VoteRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != width + 3) throw SchemaError("votes csv: row " + std::to_string(r + 1) + " has wrong width");
    VoteRecord v;
    v.doc_id = row[0];
    auto bit = [&](const std::string& s) {
      if (s == "0") return 0;
      if (s == "1") return 1;
      throw ValueError("votes csv: value '" + s + "' outside {0,1} at row " + std::to_string(r + 1));
    };
    for (std::size_t i = 0; i < width; ++i) v.votes.push_back(bit(row[1 + i]));
    v.final = bit(row[1 + width]);
    const auto& tie = row[2 + width];
    v.was_tie = tie == "true" || tie == "1";
    out.push_back(std::move(v));
  }
  return out;
}

namespace {

std::string fraction_cell(double mean_pct, const std::optional<double>& std_pct) {
  auto cell = format_fixed(mean_pct / 100.0, 6);
  if (std_pct) cell += " ± " + format_fixed(*std_pct / 100.0, 6);
  return cell;
}

}  // namespace

std::string aggregate_csv(const std::vector<ReportRow>& rows) {
  std::vector<std::string> header{"scenario"};
  for (const auto& n : MetricsReport::field_names()) header.push_back(n);
  std::string out = csv_row(header);
  for (const auto& row : rows) {
    std::vector<std::string> cells{row.label};
    const auto m = row.mean.values();
    for (std::size_t f = 0; f < m.size(); ++f)
      cells.push_back(fraction_cell(m[f], row.std ? std::optional(row.std->values()[f]) : std::nullopt));
    out += csv_row(cells);
  }
  return out;
}

std::string aggregate_markdown(const std::vector<ReportRow>& rows, const std::string& title) {
  std::string out;
  if (!title.empty()) out += "### " + title + "\n\n";
  out += "| scenario |";
  for (const auto& n : MetricsReport::field_names()) out += " " + n + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < MetricsReport::kFields; ++i) out += "---:|";
  out += "\n";
  for (const auto& row : rows) {
    out += "| " + row.label + " |";
    const auto m = row.mean.values();
    for (std::size_t f = 0; f < m.size(); ++f) {
      out += " " + format_fixed(m[f], 2);
      if (row.std) out += " ± " + format_fixed(row.std->values()[f], 2);
      out += " |";
    }
    out += "\n";
  }
  return out;
}

std::string per_seed_csv(const std::string& label, const AggregateResult& agg) {
  std::vector<std::string> header{"scenario", "sampling_seed"};
  for (const auto& n : MetricsReport::field_names()) header.push_back(n);
  std::string out = csv_row(header);
  for (std::size_t i = 0; i < agg.per_seed_reports.size(); ++i) {
    std::vector<std::string> cells{label, i < agg.seeds.size() ? std::to_string(agg.seeds[i]) : std::to_string(i)};
    for (double v : agg.per_seed_reports[i].values()) cells.push_back(format_fixed(v / 100.0, 10));
    out += csv_row(cells);
  }
  return out;
}

namespace {

struct Job {
  std::size_t seed_index;
  std::size_t model_index;
};

struct JobResult {
  bool ok = false;
  bool skipped = false;
  std::string error;
  std::vector<Prediction> predictions;
};

bool job_done(const std::filesystem::path& dir, const std::string& hash) {
  const auto marker = dir / "done.json";
  if (!std::filesystem::exists(marker) || !std::filesystem::exists(dir / "predictions.csv")) return false;
  try {
    return nlohmann::json::parse(read_file(marker)).value("config_hash", "") == hash;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

GridResult run_grid(const EnsembleSpec& spec, const GridInputs& in) {
  spec.validate();
  if (!in.backend) throw ArgumentError("run_grid: no backend");
  if (!in.build_sets) throw ArgumentError("run_grid: no set builder");
  if (!in.stage1_models.empty() && in.stage1_models.size() != spec.model_seeds.size())
    throw ArgumentError("run_grid: " + std::to_string(in.stage1_models.size()) + " stage-1 models for " +
                        std::to_string(spec.model_seeds.size()) + " model seeds");
  const bool persist = !in.scenario_dir.empty();
  const auto n_seeds = spec.sampling_seeds.size();
  const auto n_models = spec.model_seeds.size();

  struct SeedData {
    std::vector<ProcessedDocument> train, dev;
    std::string error;
  };
  std::vector<SeedData> data(n_seeds);
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const auto seed = spec.sampling_seeds[s];
    try {
      const auto sets = in.build_sets(seed);
      data[s].train = preprocess_corpus(sets.train, in.normalizer);
      data[s].dev = preprocess_corpus(sets.dev, in.normalizer);
      if (persist) {
        const auto dir = in.scenario_dir / std::to_string(seed);
        std::filesystem::create_directories(dir);
        write_file_atomic(dir / "sets_manifest.jsonl", manifest_jsonl(sets.manifest));
      }
    } catch (const Error& e) {
      if (spec.strict) throw;
      data[s].error = e.what();
      spdlog::error("sampling seed {}: {}", seed, e.what());
    }
  }

  std::vector<Job> jobs;
  for (std::size_t s = 0; s < n_seeds; ++s)
    if (data[s].error.empty())
      for (std::size_t m = 0; m < n_models; ++m) jobs.push_back({s, m});
  std::vector<JobResult> results(jobs.size());

  auto run_job = [&](std::size_t j) {
    const auto [s, m] = jobs[j];
    auto& res = results[j];
    const auto seed = spec.sampling_seeds[s];
    const auto model_seed = spec.model_seeds[m];
    const auto dir = persist ? in.scenario_dir / std::to_string(seed) / ("model_" + std::to_string(model_seed))
                             : std::filesystem::path();
    try {
      if (persist && job_done(dir, in.config_hash)) {
        res.predictions = parse_predictions_csv(read_file(dir / "predictions.csv"));
        res.ok = res.skipped = true;
        return;
      }
      TrainConfig cfg = in.stage2_config;
      cfg.model_seed = model_seed;
      const auto model = in.stage1_models.empty()
                             ? in.backend->fit_stage1(data[s].train, data[s].dev, cfg)
                             : in.backend->fit_stage2(*in.stage1_models[m], data[s].train, data[s].dev, cfg);
      res.predictions = predict(*model, in.test);
      if (persist) {
        std::filesystem::create_directories(dir);
        if (in.save_checkpoints) model->save(dir / "checkpoint");
        write_file_atomic(dir / "config.json", train_config_json(model->config(), in.backend->name()));
        write_file_atomic(dir / "train_log.csv", training_log_csv(model->log()));
        write_file_atomic(dir / "predictions.csv", predictions_csv(res.predictions));
        nlohmann::ordered_json done;
        done["config_hash"] = in.config_hash;
        done["sampling_seed"] = seed;
        done["model_seed"] = model_seed;
        done["best_epoch"] = model->best_epoch();
        done["encoder_checksum"] = hex64(model->encoder_checksum());
        done["classifier_checksum"] = hex64(model->classifier_checksum());
        write_file_atomic(dir / "done.json", done.dump(2) + "\n");
      }
      res.ok = true;
    } catch (const std::exception& e) {
      res.error = "model seed " + std::to_string(model_seed) + ": " + e.what();
      spdlog::error("sampling seed {}, {}", seed, res.error);
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) run_job(j);
  };
  const std::size_t n_workers = std::min(spec.workers, std::max<std::size_t>(jobs.size(), 1));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  GridResult out;
  std::vector<MetricsReport> good;
  std::vector<std::uint64_t> good_seeds;
  std::size_t j = 0;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    SeedOutcome so;
    so.sampling_seed = spec.sampling_seeds[s];
    so.error = data[s].error;
    std::vector<std::vector<Prediction>> per_model;
    if (so.error.empty()) {
      for (std::size_t m = 0; m < n_models; ++m, ++j) {
        auto& r = results[j];
        if (!r.ok && so.error.empty()) so.error = r.error;
        (r.skipped ? so.jobs_skipped : so.jobs_run) += r.ok ? 1 : 0;
        per_model.push_back(std::move(r.predictions));
      }
    }
    if (so.error.empty()) {
      try {
        so.votes = vote_predictions(per_model, spec.tie_break);
        so.report = score_votes(so.votes, in.test);
        so.ok = true;
        if (persist) {
          const auto dir = in.scenario_dir / std::to_string(so.sampling_seed);
          write_file_atomic(dir / "votes.csv", votes_csv(so.votes));
          write_file_atomic(dir / "report.csv", report_csv(so.report));
        }
        good.push_back(so.report);
        good_seeds.push_back(so.sampling_seed);
      } catch (const Error& e) {
        so.error = e.what();
      }
    }
    if (!so.ok && spec.strict)
      throw JobFailure("sampling seed " + std::to_string(so.sampling_seed) + " failed: " + so.error);
    out.seeds.push_back(std::move(so));
  }
  if (good.size() >= 2) {
    out.aggregate = aggregate(good, good_seeds);
  } else if (n_seeds >= 2) {
    std::string why = "only " + std::to_string(good.size()) + " of " + std::to_string(n_seeds) +
                      " sampling seeds succeeded; aggregation needs at least 2";
    for (const auto& so : out.seeds)
      if (!so.ok) {
        why += " (first failure: seed " + std::to_string(so.sampling_seed) + ": " + so.error + ")";
        break;
      }
    throw JobFailure(why);
  }
  return out;
}

}  // namespace adr
