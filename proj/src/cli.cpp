#include "adr/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <set>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "adr/config.hpp"
#include "adr/corpus.hpp"
#include "adr/ensemble.hpp"
#include "adr/metrics.hpp"
#include "adr/pipeline.hpp"
#include "adr/postprocess.hpp"
#include "adr/sampler.hpp"
#include "adr/synthetic.hpp"
#include "adr/util.hpp"

namespace adr {

namespace fs = std::filesystem;

int exit_code_for(Error::Category category) {
  switch (category) {
    case Error::Category::config: return kExitConfig;
    case Error::Category::data: return kExitData;
    case Error::Category::job: return kExitJob;
    default: return 1;
  }
}

namespace {

constexpr const char* kDemoConfig = R"(# Demo experiment on synthetic data.
# The stub backend stands in for the transformer; "svm" is the embedding baseline.

[paths]
target_corpus = "data/target.jsonl"
source_corpora = ["data/cadec.jsonl", "data/psytar.jsonl"]
med_lexicon = "lexicons/med.txt"
wh_lexicon = "lexicons/womens_health.txt"
registry = "registry.json"
run_dir = "runs"

[preprocess]
min_tokens = 4
max_tokens = 300
mask_classes = ["url", "user", "date", "email", "number"]

[split]
test_fraction = 0.2
seed = 42
source_dev_fraction = 0.2
full_dev_fraction = 0.2

[stage1]
model_id = "stub"
learning_rate = 0.01
batch_size = 7
freeze_policy = "all_but_classifier"
train_sampler = "random"
max_epochs = 10
patience = 3

[stage2]
learning_rate = 0.01
batch_size = 7
freeze_policy = "all_but_classifier"
train_sampler = "random"

[full]
learning_rate = 0.005
batch_size = 7
freeze_policy = "none"
train_sampler = "class_weighted"
max_epochs = 5

[ensemble]
model_seeds = [78, 99, 227, 409, 422, 482, 485, 841, 857, 910]
sampling_seeds = [1, 2, 3, 4, 5]
tie_break = "positive"
workers = 1
strict = false

[report]
postprocess = true

[scenario.svm_full]
kind = "full"
model_id = "svm"
from_scratch = true
model_seeds = [78]
label = "SVM full"

[scenario.svm_per_class_10]
kind = "few_shot"
mode = "per_class"
shots = 10
model_id = "svm"
from_scratch = true
model_seeds = [78]
label = "SVM per_class 10"

[scenario.svm_per_class_40]
kind = "few_shot"
mode = "per_class"
shots = 40
model_id = "svm"
from_scratch = true
model_seeds = [78]
label = "SVM per_class 40"

[scenario.svm_add_neg_10_200]
kind = "few_shot"
mode = "add_neg"
shots = 10
n_neg = 200
model_id = "svm"
from_scratch = true
model_seeds = [78]
label = "SVM add_neg 10 + 200 neg"

[scenario.svm_add_neg_40_400]
kind = "few_shot"
mode = "add_neg"
shots = 40
n_neg = 400
model_id = "svm"
from_scratch = true
model_seeds = [78]
label = "SVM add_neg 40 + 400 neg"

[scenario.zero_shot]
kind = "zero_shot"
label = "stub zero-shot"

[scenario.full]
kind = "full"
label = "stub full"

[scenario.per_class_10]
kind = "few_shot"
mode = "per_class"
shots = 10

[scenario.per_class_40]
kind = "few_shot"
mode = "per_class"
shots = 40

[scenario.add_neg_40_100]
kind = "few_shot"
mode = "add_neg"
shots = 40
n_neg = 100

[scenario.add_source_10_100_200]
kind = "few_shot"
mode = "add_source"
shots = 10
n_neg = 100
n_source = 200

[scenario.add_source_40_300_300]
kind = "few_shot"
mode = "add_source"
shots = 40
n_neg = 300
n_source = 300
)";

constexpr const char* kDemoRegistry = R"({
  "models": {
    "stub": {"kind": "stub", "buckets": 1024, "hidden": 64},
    "svm": {"kind": "svm", "embeddings": "embeddings/aligned.vec", "aligned": true,
            "kernel": "rbf", "C": 1.0, "balanced": true}
  }
}
)";

void print(const std::string& s) { std::cout << s << std::flush; }

CorpusFormat parse_format(const std::string& s) {
  if (s == "jsonl") return CorpusFormat::jsonl;
  if (s == "csv") return CorpusFormat::csv;
  throw ArgumentError("unknown corpus format '" + s + "'");
}

Corpus load_any(const fs::path& path, const std::string& format) {
  return format.empty() ? load_corpus(path) : load_corpus(path, parse_format(format));
}

std::unordered_map<std::string, SplitRole> read_split_csv(const fs::path& path) {
  std::unordered_map<std::string, SplitRole> out;
  const auto rows = parse_csv(read_file(path));
  if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "id" || rows[0][1] != "role")
    throw SchemaError(path.string() + ": expected header 'id,role'");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() < 2) continue;
    const auto& role = rows[r][1];
    if (role == "train_dev") out[rows[r][0]] = SplitRole::train_dev;
    else if (role == "test") out[rows[r][0]] = SplitRole::test;
    else throw ValueError(path.string() + ": row " + std::to_string(r + 1) + ": unknown role '" + role + "'");
  }
  return out;
}

struct Options {
  // ingest
  fs::path input, output, demo_dir;
  std::string format, name;
  std::uint64_t seed = 7;
  // stats / split / sample
  fs::path corpus, split_manifest, out_dir, source;
  double fraction = 0.2;
  std::string mode = "per_class";
  std::size_t shots = 10, n_neg = 0, n_source = 0;
  // run
  fs::path config;
  std::vector<std::string> scenarios;
  std::size_t workers = 0;
  bool strict = false;
  // evaluate / postprocess
  fs::path preds, gold, lexicon, run_dir;
  std::string rule;
  // logging
  bool verbose = false, quiet = false;
};

ExperimentConfig load_config_with_overrides(const Options& o) {
  auto cfg = load_experiment_config(o.config);
  if (o.workers > 0) cfg.ensemble.workers = o.workers;
  if (o.strict) cfg.ensemble.strict = true;
  return cfg;
}

int cmd_ingest(const Options& o) {
  if (!o.demo_dir.empty()) {
    write_demo_workspace(o.demo_dir, o.seed);
    print("wrote demo workspace to " + o.demo_dir.string() + "\n");
    return kExitOk;
  }
  if (o.input.empty()) throw ArgumentError("ingest: give --input or --demo-dir");
  const auto corpus = o.format.empty() && o.name.empty()
                          ? load_corpus(o.input)
                          : load_corpus(o.input, o.format.empty() ? (o.input.extension() == ".csv" ? CorpusFormat::csv
                                                                                                    : CorpusFormat::jsonl)
                                                                  : parse_format(o.format),
                                        o.name.empty() ? std::nullopt : std::optional(o.name));
  if (!o.output.empty()) save_corpus(corpus, o.output);
  print(corpus.name() + ": " + std::to_string(corpus.size()) + " documents, " + std::to_string(corpus.count_label(1)) +
        " positive, " + std::to_string(corpus.count_label(0)) + " negative\n");
  return kExitOk;
}

int cmd_stats(const Options& o) {
  const auto corpus = load_any(o.corpus, o.format);
  std::optional<std::unordered_map<std::string, SplitRole>> roles;
  if (!o.split_manifest.empty()) roles = read_split_csv(o.split_manifest);
  const auto stats = compute_stats(corpus, roles);
  const auto md = stats_markdown(stats);
  if (!o.out_dir.empty()) {
    fs::create_directories(o.out_dir);
    write_file_atomic(o.out_dir / "stats.csv", stats_csv(stats));
    write_file_atomic(o.out_dir / "stats.md", md);
    write_file_atomic(o.out_dir / "token_histogram.csv", histogram_csv(stats));
    write_file_atomic(o.out_dir / "topic_label.csv", topic_label_csv(corpus));
  }
  print(md);
  return kExitOk;
}

int cmd_split(const Options& o) {
  const auto corpus = load_any(o.corpus, o.format);
  if (!(o.fraction > 0 && o.fraction < 1)) throw ArgumentError("split: --fraction must be in (0, 1)");
  const auto split = stratified_split(corpus, {o.fraction, o.seed});
  if (!o.out_dir.empty()) {
    fs::create_directories(o.out_dir);
    save_corpus(split.train_dev, o.out_dir / "train_dev.jsonl");
    save_corpus(split.test, o.out_dir / "test.jsonl");
    std::string csv = csv_row({"id", "role"});
    for (const auto& d : split.train_dev) csv += csv_row({d.id, "train_dev"});
    for (const auto& d : split.test) csv += csv_row({d.id, "test"});
    write_file_atomic(o.out_dir / "split.csv", csv);
  }
  print("train_dev: " + std::to_string(split.train_dev.size()) + " (" + std::to_string(split.train_dev.count_label(1)) +
        " pos, " + std::to_string(split.train_dev.count_label(0)) + " neg)\n" +
        "test: " + std::to_string(split.test.size()) + " (" + std::to_string(split.test.count_label(1)) + " pos, " +
        std::to_string(split.test.count_label(0)) + " neg)\n");
  return kExitOk;
}

int cmd_sample(const Options& o) {
  const auto pool = load_any(o.corpus, o.format);
  FewShotSpec spec;
  spec.mode = parse_fewshot_mode(o.mode);
  spec.shots = o.shots;
  spec.n_neg = o.n_neg;
  spec.n_source = o.n_source;
  spec.sampling_seed = o.seed;
  spec.validate();
  const Corpus source = o.source.empty() ? Corpus() : load_corpus(o.source);
  const auto sets = build_fewshot_sets(pool, source, spec);
  const auto manifest = manifest_jsonl(sets.manifest);
  if (!o.out_dir.empty()) {
    fs::create_directories(o.out_dir);
    write_file_atomic(o.out_dir / "manifest.jsonl", manifest);
    save_corpus(sets.train, o.out_dir / "train.jsonl");
    save_corpus(sets.dev, o.out_dir / "dev.jsonl");
    std::cerr << to_string(spec.mode) << " " << spec.describe() << ": train " << sets.train.size() << ", dev "
              << sets.dev.size() << "\n";
  } else {
    print(manifest);
  }
  return kExitOk;
}

int cmd_train_source(const Options& o) {
  const auto cfg = load_config_with_overrides(o);
  const auto data = prepare_data(cfg);
  const auto registry = Registry::load(cfg.registry);
  std::set<std::string> ids;
  for (const auto& s : cfg.scenarios)
    if (!s.from_scratch) ids.insert(s.model_id);
  std::size_t trained = 0;
  for (const auto& id : ids) {
    const auto models = stage1_models(cfg, data, registry, id, cfg.ensemble.model_seeds, &trained);
    for (std::size_t i = 0; i < models.size(); ++i)
      print(id + " seed " + std::to_string(cfg.ensemble.model_seeds[i]) + ": best epoch " +
            std::to_string(models[i]->best_epoch()) + ", encoder " + hex64(models[i]->encoder_checksum()) + "\n");
  }
  print("stage 1: " + std::to_string(trained) + " models trained, cache at " + (cfg.run_dir / "stage1").string() + "\n");
  return kExitOk;
}

int report_and_print(const ExperimentConfig& cfg, const RunSummary& summary) {
  std::size_t failed = 0;
  for (const auto& s : summary.scenarios) failed += s.failed_seeds;
  std::vector<std::string> order;
  for (const auto& s : cfg.scenarios) order.push_back(s.name);
  print(write_combined_report(cfg.run_dir, order));
  if (failed > 0) spdlog::warn("{} sampling seed(s) failed; see error.txt in the scenario directories", failed);
  return kExitOk;
}

int cmd_run(const Options& o) {
  const auto cfg = load_config_with_overrides(o);
  const auto summary = run_experiment(cfg, o.scenarios, "run");
  return report_and_print(cfg, summary);
}

int cmd_zero_shot(const Options& o) {
  auto cfg = load_config_with_overrides(o);
  std::vector<std::string> names;
  for (const auto& s : cfg.scenarios)
    if (s.kind == ScenarioKind::zero_shot) names.push_back(s.name);
  if (names.empty()) {
    ScenarioConfig sc;
    sc.name = "zero_shot";
    sc.kind = ScenarioKind::zero_shot;
    sc.model_id = cfg.stage1.model_id;
    sc.model_seeds = cfg.ensemble.model_seeds;
    sc.display_name = "zero-shot";
    cfg.scenarios.push_back(sc);
    names.push_back(sc.name);
  }
  const auto summary = run_experiment(cfg, names, "zero-shot");
  return report_and_print(cfg, summary);
}

int cmd_evaluate(const Options& o) {
  const auto preds = parse_predictions_csv(read_file(o.preds));
  const auto gold = load_any(o.gold, o.format);
  std::vector<int> p, g;
  std::vector<double> scores;
  for (const auto& x : preds) {
    const auto* d = gold.find(x.doc_id);
    if (!d) throw AlignmentError("evaluate: prediction for '" + x.doc_id + "' has no gold document");
    p.push_back(x.label);
    g.push_back(d->label);
    scores.push_back(x.score);
  }
  const auto rep = report(confusion(p, g));
  auto md = report_markdown(rep, "Evaluation of " + o.preds.filename().string());
  md += "\nScored " + std::to_string(preds.size()) + " of " + std::to_string(gold.size()) + " gold documents.\n";
  if (!o.out_dir.empty()) {
    fs::create_directories(o.out_dir);
    write_file_atomic(o.out_dir / "report.csv", report_csv(rep));
    write_file_atomic(o.out_dir / "report.md", md);
  }
  print(md);
  return kExitOk;
}

int cmd_postprocess(const Options& o) {
  const auto rule = parse_rule(o.rule);
  const auto lex = load_lexicon(o.lexicon);
  const auto corpus = load_any(o.corpus, o.format);
  std::vector<LabeledPrediction> preds;
  for (const auto& p : parse_predictions_csv(read_file(o.preds))) preds.push_back({p.doc_id, p.label});
  const auto outcomes = apply_rule_all(rule, preds, corpus, lex);
  const auto corrected = corrected_csv(outcomes);
  const auto audit = flip_audit_csv(outcomes);
  std::size_t flips = 0;
  for (const auto& x : outcomes) flips += x.flipped;
  if (!o.out_dir.empty()) {
    fs::create_directories(o.out_dir);
    write_file_atomic(o.out_dir / "corrected.csv", corrected);
    write_file_atomic(o.out_dir / "flips.csv", audit);
    std::vector<int> before, after, gold;
    for (const auto& x : outcomes) {
      before.push_back(x.original);
      after.push_back(x.corrected);
      gold.push_back(corpus.find(x.doc_id)->label);
    }
    std::string md = report_markdown(report(confusion(before, gold)), "before " + to_string(rule) + " rule") + "\n" +
                     report_markdown(report(confusion(after, gold)), "after " + to_string(rule) + " rule");
    write_file_atomic(o.out_dir / "report.md", md);
    print(md);
  } else {
    print(corrected);
  }
  std::cerr << to_string(rule) << " rule flipped " << flips << " of " << outcomes.size() << " predictions\n";
  return kExitOk;
}

int cmd_report(const Options& o) {
  fs::path run_dir = o.run_dir;
  std::vector<std::string> order;
  if (!o.config.empty()) {
    const auto cfg = load_experiment_config(o.config, false);
    if (run_dir.empty()) run_dir = cfg.run_dir;
    for (const auto& s : cfg.scenarios) order.push_back(s.name);
  } else {
    if (run_dir.empty()) {
      const char* env = std::getenv("ADR_RUN_DIR");
      if (!env || !*env) throw ArgumentError("report: give --config or --run-dir");
      run_dir = env;
    }
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(run_dir))
      if (e.is_directory() && fs::exists(e.path() / "summary.json")) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) order.push_back(d.filename().string());
  }
  print(write_combined_report(run_dir, order));
  return kExitOk;
}

}  // namespace

void write_demo_workspace(const fs::path& dir, std::uint64_t seed) {
  fs::create_directories(dir / "data");
  fs::create_directories(dir / "lexicons");
  fs::create_directories(dir / "embeddings");
  save_corpus(generate_synthetic(101, 4068, lifeline_topic_weights(), "de", seed, "lifeline-synthetic"),
              dir / "data" / "target.jsonl");
  save_corpus(generate_synthetic(1014, 232, source_topic_weights(), "en", seed + 1, "cadec-synthetic"),
              dir / "data" / "cadec.jsonl");
  save_corpus(generate_synthetic(669, 222, source_topic_weights(), "en", seed + 2, "psytar-synthetic"),
              dir / "data" / "psytar.jsonl");
  std::string med = "# synthetic medication list\n";
  for (const auto& n : synthetic_medication_names(500)) med += n + "\n";
  write_file_atomic(dir / "lexicons" / "med.txt", med);
  std::string wh = "# women's health terms\n";
  for (const auto& t : womens_health_terms()) wh += t + "\n";
  write_file_atomic(dir / "lexicons" / "womens_health.txt", wh);
  write_file_atomic(dir / "embeddings" / "aligned.vec", synthetic_embeddings_vec(50, seed));
  write_file_atomic(dir / "registry.json", kDemoRegistry);
  write_file_atomic(dir / "demo.toml", kDemoConfig);
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Cross-lingual few-shot ADR document classification toolkit"};
  app.require_subcommand(1);
  Options o;
  app.add_flag("-v,--verbose", o.verbose, "Debug logging");
  app.add_flag("-q,--quiet", o.quiet, "Only log warnings and errors");

  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and convert it to JSONL, or write a demo workspace");
  ingest->add_option("--input", o.input, "Corpus file (.jsonl or .csv)");
  ingest->add_option("--format", o.format, "jsonl or csv (default: by extension)");
  ingest->add_option("--name", o.name, "Corpus name (default: file stem)");
  ingest->add_option("--output", o.output, "Write the validated corpus as JSONL");
  ingest->add_option("--demo-dir", o.demo_dir, "Write synthetic corpora, lexicons, embeddings and demo.toml here");
  ingest->add_option("--seed", o.seed, "Seed for the demo data");

  auto* stats = app.add_subcommand("stats", "Corpus statistics (CSV, Markdown, histogram data)");
  stats->add_option("corpus", o.corpus, "Corpus file")->required();
  stats->add_option("--format", o.format, "jsonl or csv");
  stats->add_option("--split", o.split_manifest, "split.csv (id,role) to count per split");
  stats->add_option("--out", o.out_dir, "Output directory");

  auto* split = app.add_subcommand("split", "Label-stratified train/dev vs test split");
  split->add_option("corpus", o.corpus, "Corpus file")->required();
  split->add_option("--format", o.format, "jsonl or csv");
  split->add_option("--fraction", o.fraction, "Test fraction")->capture_default_str();
  split->add_option("--seed", o.seed, "Split seed");
  split->add_option("--out", o.out_dir, "Output directory");

  auto* sample = app.add_subcommand("sample", "Build few-shot train/dev sets and print the manifest");
  sample->add_option("pool", o.corpus, "Target train/dev pool")->required();
  sample->add_option("--format", o.format, "jsonl or csv");
  sample->add_option("--mode", o.mode, "per_class, add_neg or add_source")->capture_default_str();
  sample->add_option("--shots", o.shots, "Shots (total in per_class, positives otherwise)")->capture_default_str();
  sample->add_option("--n-neg", o.n_neg, "Added negatives");
  sample->add_option("--n-source", o.n_source, "Added source-language documents");
  sample->add_option("--source", o.source, "Source-language corpus (add_source)");
  sample->add_option("--seed", o.seed, "Sampling seed");
  sample->add_option("--out", o.out_dir, "Write manifest.jsonl, train.jsonl, dev.jsonl here");

  auto add_run_options = [&](CLI::App* c) {
    c->add_option("--config", o.config, "Experiment config")->required();
    c->add_option("--workers", o.workers, "Override ensemble.workers");
    c->add_flag("--strict", o.strict, "Fail when any sampling seed fails");
  };
  auto* train_source = app.add_subcommand("train-source", "Stage-1 fine-tuning on the source corpus");
  add_run_options(train_source);
  auto* run = app.add_subcommand("run", "Run the configured scenarios end to end");
  add_run_options(run);
  run->add_option("--scenario", o.scenarios, "Only these scenarios (repeatable)");
  auto* zero = app.add_subcommand("zero-shot", "Apply the stage-1 models to the target test set");
  add_run_options(zero);

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold labels");
  evaluate->add_option("preds", o.preds, "Predictions CSV (doc_id,label[,score]) or votes.csv")->required();
  evaluate->add_option("gold", o.gold, "Gold corpus")->required();
  evaluate->add_option("--format", o.format, "jsonl or csv");
  evaluate->add_option("--out", o.out_dir, "Write report.csv and report.md here");

  auto* post = app.add_subcommand("postprocess", "Apply a lexicon rule to predictions");
  post->add_option("--rule", o.rule, "med or wh")->required();
  post->add_option("--lexicon", o.lexicon, "Lexicon file")->required();
  post->add_option("--preds", o.preds, "Predictions CSV or votes.csv")->required();
  post->add_option("--corpus", o.corpus, "Documents the predictions refer to")->required();
  post->add_option("--format", o.format, "jsonl or csv");
  post->add_option("--out", o.out_dir, "Write corrected.csv, flips.csv and report.md here");

  auto* rep = app.add_subcommand("report", "Rebuild the combined report of a run directory");
  rep->add_option("--config", o.config, "Experiment config (for run_dir and scenario order)");
  rep->add_option("--run-dir", o.run_dir, "Run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  auto logger = spdlog::get("adr");
  if (!logger) logger = spdlog::stderr_color_mt("adr");
  spdlog::set_default_logger(logger);
  spdlog::set_level(o.verbose ? spdlog::level::debug : o.quiet ? spdlog::level::warn : spdlog::level::info);

  const auto* sub = app.get_subcommands().front();
  const auto name = sub->get_name();
  try {
    if (name == "ingest") return cmd_ingest(o);
    if (name == "stats") return cmd_stats(o);
    if (name == "split") return cmd_split(o);
    if (name == "sample") return cmd_sample(o);
    if (name == "train-source") return cmd_train_source(o);
    if (name == "run") return cmd_run(o);
    if (name == "zero-shot") return cmd_zero_shot(o);
    if (name == "evaluate") return cmd_evaluate(o);
    if (name == "postprocess") return cmd_postprocess(o);
    if (name == "report") return cmd_report(o);
  } catch (const Error& e) {
    std::cerr << "adr " << name << ": " << e.what() << "\n";
    return exit_code_for(e.category());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "adr " << name << ": " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "adr " << name << ": internal error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("adr");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace adr
