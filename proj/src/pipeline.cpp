#include "adr/pipeline.hpp"

#include <atomic>
#include <fstream>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "adr/error.hpp"
#include "adr/postprocess.hpp"
#include "adr/util.hpp"

namespace adr {

namespace {

namespace fs = std::filesystem;

class Manifest {
 public:
  Manifest(fs::path run_dir, std::string command) : run_dir_(std::move(run_dir)), command_(std::move(command)) {}

  void record(const fs::path& file, const std::string& config_hash, const nlohmann::ordered_json& seeds) {
    nlohmann::ordered_json j;
    j["file"] = fs::relative(file, run_dir_).generic_string();
    j["command"] = command_;
    j["config_hash"] = config_hash;
    j["seeds"] = seeds;
    lines_ += j.dump() + "\n";
  }

  void flush() {
    if (lines_.empty()) return;
    fs::create_directories(run_dir_);
    std::ofstream out(run_dir_ / "manifest.jsonl", std::ios::app | std::ios::binary);
    out << lines_;
    lines_.clear();
  }

 private:
  fs::path run_dir_;
  std::string command_;
  std::string lines_;
};

std::vector<LabeledPrediction> finals(const std::vector<VoteRecord>& votes) {
  std::vector<LabeledPrediction> out;
  out.reserve(votes.size());
  for (const auto& v : votes) out.push_back({v.doc_id, v.final});
  return out;
}

FewShotSets full_sets(const Corpus& train_dev, double dev_fraction, std::uint64_t seed) {
  auto split = stratified_split(train_dev, {dev_fraction, seed});
  FewShotSets sets{Corpus(train_dev.name() + "-train", split.train_dev.documents()),
                   Corpus(train_dev.name() + "-dev", split.test.documents()), FewShotSpec{}, {}};
  for (const auto& d : sets.train) sets.manifest.push_back({d.id, SetRole::train, Origin::target});
  for (const auto& d : sets.dev) sets.manifest.push_back({d.id, SetRole::dev, Origin::target});
  return sets;
}

nlohmann::ordered_json summary_json(const ScenarioSummary& s) {
  nlohmann::ordered_json j;
  j["scenario"] = s.name;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : s.rows) {
    nlohmann::ordered_json row;
    row["label"] = r.label;
    row["mean"] = r.mean.values();
    row["flags"] = r.mean.flags;
    row["std"] = r.std ? nlohmann::ordered_json(r.std->values()) : nlohmann::ordered_json(nullptr);
    j["rows"].push_back(row);
  }
  return j;
}

std::vector<ReportRow> rows_from_summary(const nlohmann::json& j) {
  std::vector<ReportRow> rows;
  for (const auto& r : j.at("rows")) {
    ReportRow row;
    row.label = r.at("label").get<std::string>();
    row.mean = MetricsReport::from_values(r.at("mean").get<std::vector<double>>());
    row.mean.flags = r.value("flags", 0u);
    if (!r.at("std").is_null()) row.std = MetricsReport::from_values(r.at("std").get<std::vector<double>>());
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_scenario_outputs(const fs::path& dir, const ScenarioSummary& s, const std::string& hash, Manifest& manifest,
                            const nlohmann::ordered_json& seeds) {
  write_file_atomic(dir / "aggregate.csv", aggregate_csv(s.rows));
  write_file_atomic(dir / "aggregate.md", aggregate_markdown(s.rows, s.name));
  write_file_atomic(dir / "summary.json", summary_json(s).dump(2) + "\n");
  for (const char* f : {"aggregate.csv", "aggregate.md", "summary.json"}) manifest.record(dir / f, hash, seeds);
}

}  // namespace

std::string safe_name(std::string_view id) {
  std::string out;
  for (char c : id) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_';
  return out.empty() ? "model" : out;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  PreparedData d;
  d.target = load_corpus(cfg.target_corpus);
  d.split = stratified_split(d.target, cfg.split);
  if (!cfg.source_corpora.empty()) {
    std::vector<Corpus> parts;
    for (const auto& p : cfg.source_corpora) parts.push_back(load_corpus(p));
    d.source = combine(parts, "source");
    auto s = stratified_split(d.source, {cfg.source_dev_fraction, cfg.split.seed});
    d.source_train = std::move(s.train_dev);
    d.source_dev = std::move(s.test);
  }
  d.test = preprocess_corpus(d.split.test, cfg.normalizer);
  for (const auto& doc : d.test) d.test_kept += !doc.dropped;
  return d;
}

std::vector<ModelPtr> stage1_models(const ExperimentConfig& cfg, const PreparedData& data, const Registry& registry,
                                    const std::string& model_id, const std::vector<std::uint64_t>& model_seeds,
                                    std::size_t* trained) {
  if (data.source.empty()) throw ConfigError("stage 1 needs paths.source_corpora");
  const auto backend = registry.resolve(model_id, cfg.run_dir / "external");
  TrainConfig tc = cfg.stage1;
  tc.model_id = model_id;
  const auto hash = cfg.stage1_hash() + "-" + safe_name(model_id);
  const auto base = cfg.run_dir / "stage1" / safe_name(model_id);
  std::vector<ProcessedDocument> train, dev;
  std::vector<ModelPtr> out(model_seeds.size());
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < model_seeds.size(); ++i) {
    const auto dir = base / ("model_" + std::to_string(model_seeds[i]));
    try {
      if (fs::exists(dir / "done.json") &&
          nlohmann::json::parse(read_file(dir / "done.json")).value("config_hash", "") == hash) {
        out[i] = backend->load(dir / "checkpoint");
        continue;
      }
    } catch (const std::exception& e) {
      spdlog::warn("stage 1 cache at {} unusable ({}); retraining", dir.string(), e.what());
    }
    todo.push_back(i);
  }
  if (!todo.empty()) {
    train = preprocess_corpus(data.source_train, cfg.normalizer);
    dev = preprocess_corpus(data.source_dev, cfg.normalizer);
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(todo.size());
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < todo.size();) {
      const auto i = todo[k];
      try {
        TrainConfig c = tc;
        c.model_seed = model_seeds[i];
        spdlog::info("stage 1: {} seed {}", model_id, c.model_seed);
        auto model = backend->fit_stage1(train, dev, c);
        const auto dir = base / ("model_" + std::to_string(c.model_seed));
        model->save(dir / "checkpoint");
        nlohmann::ordered_json done;
        done["config_hash"] = hash;
        done["model_seed"] = c.model_seed;
        done["best_epoch"] = model->best_epoch();
        done["encoder_checksum"] = hex64(model->encoder_checksum());
        done["classifier_checksum"] = hex64(model->classifier_checksum());
        write_file_atomic(dir / "done.json", done.dump(2) + "\n");
        out[i] = std::move(model);
      } catch (const std::exception& e) {
        errors[k] = "stage 1 seed " + std::to_string(model_seeds[i]) + ": " + e.what();
      }
    }
  };
  const auto n_workers = std::min(cfg.ensemble.workers, std::max<std::size_t>(todo.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (!e.empty()) throw JobFailure(e);
  if (trained) *trained += todo.size();
  return out;
}

RunSummary run_experiment(const ExperimentConfig& cfg, const std::vector<std::string>& only,
                          const std::string& command) {
  RunSummary summary;
  std::vector<const ScenarioConfig*> selected;
  if (only.empty()) {
    for (const auto& s : cfg.scenarios) selected.push_back(&s);
  } else {
    for (const auto& name : only) selected.push_back(&cfg.scenario(name));
  }

  fs::create_directories(cfg.run_dir);
  Manifest manifest(cfg.run_dir, command);
  if (!cfg.config_path.empty()) {
    write_file_atomic(cfg.run_dir / "config.toml", read_file(cfg.config_path));
    manifest.record(cfg.run_dir / "config.toml", hex64(fnv1a64(cfg.table.canonical())), nullptr);
  }

  const auto data = prepare_data(cfg);
  {
    std::string split_csv = csv_row({"id", "role"});
    for (const auto& d : data.split.train_dev) split_csv += csv_row({d.id, "train_dev"});
    for (const auto& d : data.split.test) split_csv += csv_row({d.id, "test"});
    write_file_atomic(cfg.run_dir / "split.csv", split_csv);
    nlohmann::ordered_json info;
    info["target_docs"] = data.target.size();
    info["train_dev_docs"] = data.split.train_dev.size();
    info["test_docs_before_filter"] = data.split.test.size();
    info["test_docs_after_filter"] = data.test_kept;
    info["test_positives_before_filter"] = data.split.test.count_label(1);
    std::size_t kept_pos = 0;
    for (const auto& d : data.test) kept_pos += !d.dropped && d.label == 1;
    info["test_positives_after_filter"] = kept_pos;
    info["source_docs"] = data.source.size();
    write_file_atomic(cfg.run_dir / "data.json", info.dump(2) + "\n");
    nlohmann::ordered_json seeds;
    seeds["split_seed"] = cfg.split.seed;
    manifest.record(cfg.run_dir / "split.csv", hex64(fnv1a64(cfg.table.canonical({"scenario."}))), seeds);
    manifest.record(cfg.run_dir / "data.json", hex64(fnv1a64(cfg.table.canonical({"scenario."}))), seeds);
  }
  spdlog::info("target split: {} train/dev, {} test ({} kept after length filter)", data.split.train_dev.size(),
               data.split.test.size(), data.test_kept);

  const auto registry = Registry::load(cfg.registry);
  std::optional<Lexicon> med, wh;
  if (cfg.postprocess) {
    med = load_lexicon(cfg.med_lexicon, "med");
    wh = load_lexicon(cfg.wh_lexicon, "wh");
  }
  std::map<Rule, const Lexicon*> lexicons;
  if (med) lexicons = {{Rule::med_presence, &*med}, {Rule::womens_health, &*wh}};

  const auto train_dev_pool = data.split.train_dev;
  for (const auto* sc : selected) {
    const auto dir = cfg.run_dir / sc->name;
    fs::create_directories(dir);
    const auto hash = cfg.scenario_hash(*sc);
    ScenarioSummary ss;
    ss.name = sc->name;
    nlohmann::ordered_json seeds;
    seeds["model_seeds"] = sc->model_seeds;
    seeds["sampling_seeds"] = sc->kind == ScenarioKind::zero_shot ? std::vector<std::uint64_t>{} : sc->sampling_seeds;
    spdlog::info("scenario {} ({})", sc->name, sc->display_name);

    std::vector<ModelPtr> s1;
    if (!sc->from_scratch) s1 = stage1_models(cfg, data, registry, sc->model_id, sc->model_seeds, &summary.stage1_trained);

    if (sc->kind == ScenarioKind::zero_shot) {
      std::vector<std::vector<Prediction>> per_model;
      for (std::size_t i = 0; i < s1.size(); ++i) {
        per_model.push_back(predict(*s1[i], data.test));
        const auto mdir = dir / ("model_" + std::to_string(sc->model_seeds[i]));
        fs::create_directories(mdir);
        write_file_atomic(mdir / "predictions.csv", predictions_csv(per_model.back()));
        manifest.record(mdir / "predictions.csv", hash, seeds);
      }
      const auto votes = vote_predictions(per_model, cfg.ensemble.tie_break);
      const auto rep = score_votes(votes, data.test);
      write_file_atomic(dir / "votes.csv", votes_csv(votes));
      write_file_atomic(dir / "report.csv", report_csv(rep));
      manifest.record(dir / "votes.csv", hash, seeds);
      ss.rows.push_back({sc->display_name, rep, std::nullopt});
      if (!lexicons.empty()) {
        const auto by_rule = evaluate_rules(finals(votes), data.split.test, lexicons);
        for (const auto& [rule, r] : by_rule) ss.rows.push_back({sc->display_name + " + " + to_string(rule) + " rule", r, std::nullopt});
      }
      write_scenario_outputs(dir, ss, hash, manifest, seeds);
      summary.scenarios.push_back(std::move(ss));
      manifest.flush();
      continue;
    }

    EnsembleSpec spec = cfg.ensemble;
    spec.model_seeds = sc->model_seeds;
    spec.sampling_seeds = sc->sampling_seeds;
    spec.fewshot = sc->fewshot;
    GridInputs in;
    in.normalizer = cfg.normalizer;
    in.test = data.test;
    in.backend = registry.resolve(sc->model_id, cfg.run_dir / "external");
    in.stage1_models = s1;
    in.stage2_config = sc->kind == ScenarioKind::full ? cfg.full : cfg.stage2;
    in.stage2_config.model_id = sc->model_id;
    in.scenario_dir = dir;
    in.config_hash = hash;
    in.save_checkpoints = cfg.save_checkpoints;
    if (sc->kind == ScenarioKind::full) {
      const double frac = cfg.full_dev_fraction;
      in.build_sets = [&train_dev_pool, frac](std::uint64_t seed) { return full_sets(train_dev_pool, frac, seed); };
    } else {
      const auto* source = &data.source;
      const auto fs_spec = sc->fewshot;
      in.build_sets = [&train_dev_pool, source, fs_spec](std::uint64_t seed) {
        FewShotSpec s = fs_spec;
        s.sampling_seed = seed;
        return build_fewshot_sets(train_dev_pool, s.mode == FewShotMode::add_source ? *source : Corpus(), s);
      };
    }
    const auto grid = run_grid(spec, in);

    std::map<Rule, std::vector<MetricsReport>> rule_reports;
    std::vector<std::uint64_t> ok_seeds;
    for (const auto& so : grid.seeds) {
      ss.jobs_run += so.jobs_run;
      ss.jobs_skipped += so.jobs_skipped;
      const auto sdir = dir / std::to_string(so.sampling_seed);
      nlohmann::ordered_json sseeds;
      sseeds["model_seeds"] = sc->model_seeds;
      sseeds["sampling_seed"] = so.sampling_seed;
      if (!so.ok) {
        ++ss.failed_seeds;
        write_file_atomic(sdir / "error.txt", so.error + "\n");
        continue;
      }
      ok_seeds.push_back(so.sampling_seed);
      manifest.record(sdir / "sets_manifest.jsonl", hash, sseeds);
      manifest.record(sdir / "votes.csv", hash, sseeds);
      manifest.record(sdir / "report.csv", hash, sseeds);
      for (auto m : sc->model_seeds) {
        sseeds["model_seed"] = m;
        manifest.record(sdir / ("model_" + std::to_string(m)) / "predictions.csv", hash, sseeds);
      }
      if (!lexicons.empty()) {
        const auto preds = finals(so.votes);
        for (const auto& [rule, lex] : lexicons) {
          const auto outcomes = apply_rule_all(rule, preds, data.split.test, *lex);
          write_file_atomic(sdir / ("postprocess_" + to_string(rule) + "_flips.csv"), flip_audit_csv(outcomes));
        }
        for (const auto& [rule, r] : evaluate_rules(preds, data.split.test, lexicons)) rule_reports[rule].push_back(r);
      }
    }
    if (grid.aggregate) {
      const auto& agg = *grid.aggregate;
      ss.rows.push_back({sc->display_name, agg.mean_report, agg.std_report});
      std::string per_seed = per_seed_csv(sc->display_name, agg);
      for (const auto& [rule, reps] : rule_reports) {
        const auto label = sc->display_name + " + " + to_string(rule) + " rule";
        const auto ra = aggregate(reps, ok_seeds);
        ss.rows.push_back({label, ra.mean_report, ra.std_report});
        const auto extra = per_seed_csv(label, ra);
        per_seed += extra.substr(extra.find('\n') + 1);
      }
      write_file_atomic(dir / "per_seed.csv", per_seed);
      manifest.record(dir / "per_seed.csv", hash, seeds);
    } else if (!grid.seeds.empty() && grid.seeds.front().ok) {
      ss.rows.push_back({sc->display_name, grid.seeds.front().report, std::nullopt});
    }
    write_scenario_outputs(dir, ss, hash, manifest, seeds);
    spdlog::info("scenario {}: {} jobs run, {} reused, {} failed seeds", sc->name, ss.jobs_run, ss.jobs_skipped,
                 ss.failed_seeds);
    summary.scenarios.push_back(std::move(ss));
    manifest.flush();
  }

  std::vector<std::string> order;
  for (const auto& s : cfg.scenarios) order.push_back(s.name);
  write_combined_report(cfg.run_dir, order);
  manifest.record(cfg.run_dir / "report.csv", hex64(fnv1a64(cfg.table.canonical())), nullptr);
  manifest.record(cfg.run_dir / "report.md", hex64(fnv1a64(cfg.table.canonical())), nullptr);
  manifest.flush();
  return summary;
}

std::string write_combined_report(const fs::path& run_dir, const std::vector<std::string>& scenario_order) {
  std::vector<ReportRow> rows;
  for (const auto& name : scenario_order) {
    const auto path = run_dir / name / "summary.json";
    if (!fs::exists(path)) continue;
    try {
      const auto more = rows_from_summary(nlohmann::json::parse(read_file(path)));
      rows.insert(rows.end(), more.begin(), more.end());
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(path.string() + ": " + e.what());
    }
  }
  std::string md = aggregate_markdown(rows, "Results (percent, mean ± sample std over sampling seeds)");
  if (fs::exists(run_dir / "data.json")) {
    const auto info = nlohmann::json::parse(read_file(run_dir / "data.json"));
    md += "\nTest set: " + std::to_string(info.value("test_docs_before_filter", 0)) + " documents before the length filter, " +
          std::to_string(info.value("test_docs_after_filter", 0)) + " scored (" +
          std::to_string(info.value("test_positives_after_filter", 0)) + " positive).\n";
  }
  write_file_atomic(run_dir / "report.csv", aggregate_csv(rows));
  write_file_atomic(run_dir / "report.md", md);
  return md;
}

}  // namespace adr
