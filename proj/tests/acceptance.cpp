// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "adr/cli.hpp"
#include "adr/config.hpp"
#include "adr/ensemble.hpp"
#include "adr/metrics.hpp"
#include "adr/pipeline.hpp"
#include "adr/postprocess.hpp"
#include "adr/sampler.hpp"
#include "adr/stub_backend.hpp"
#include "adr/svm_backend.hpp"
#include "adr/synthetic.hpp"
#include "adr/util.hpp"
#include "helpers.hpp"
#include "sampler_rows.hpp"
#include "svm_fixtures.hpp"

using namespace adr;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

double round2(double x) { return std::round(x * 100.0) / 100.0; }

// 1
void metric_oracle(Outcome& o) {
  const auto r = report({8, 7, 13, 796});
  o.require(std::abs(round2(r.p1) - 53.33) <= 0.01, "P_1");
  o.require(std::abs(round2(r.r1) - 38.10) <= 0.01, "R_1");
  o.require(std::abs(round2(r.f1_1) - 44.44) <= 0.01, "F1_1");
  o.require(std::abs(round2(r.r0) - 99.13) <= 0.01, "R_0");
  o.detail << "P_1=" << round2(r.p1) << " R_1=" << round2(r.r1) << " F1_1=" << round2(r.f1_1) << " R_0=" << round2(r.r0);
}

// 2
void auc_identity(Outcome& o) {
  // (R_m, AUC) cells of every published result row.
  const std::vector<std::pair<double, double>> published = {
      {72.03, 72.03}, {60.62, 60.62}, {60.64, 60.64}, {64.1, 64.1},   {71.53, 71.53}, {51.88, 51.88},
      {74.83, 74.83}, {64.00, 64.00}, {70.84, 70.84}, {77.34, 77.34}, {63.44, 63.44}, {78.95, 78.95},
      {72.6, 72.6},   {58.72, 58.72}, {68.77, 68.77}, {54.26, 54.26}, {59.59, 59.59}};
  for (const auto& [rm, auc] : published) o.require(rm == auc, "published R_m != AUC");
  // Single-run rows reconstructed on the 21-positive / 803-negative test set.
  struct Row {
    ConfusionMatrix cm;
    double r_m;
  };
  const std::vector<Row> rows = {{{12, 105, 9, 698}, 72.03}, {{1, 8, 20, 795}, 51.88}, {{20, 366, 1, 437}, 74.83}};
  for (const auto& row : rows) {
    const auto r = report(row.cm);
    o.require(auc_hard(row.cm) == r.r_macro, "auc_hard != r_macro on a reconstructed row");
    o.require(std::abs(round2(r.auc) - row.r_m) < 1e-9, "reconstructed row does not round to the published cell");
  }
  Rng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    ConfusionMatrix cm{rng.below(300), rng.below(300), rng.below(300) , rng.below(5000)};
    if (cm.tp + cm.fn == 0) cm.fn = 1;
    if (cm.tn + cm.fp == 0) cm.tn = 1;
    const double oracle = 100.0 * (double(cm.tp) / double(cm.tp + cm.fn) + double(cm.tn) / double(cm.tn + cm.fp)) / 2.0;
    const auto r = report(cm);
    worst = std::max(worst, std::abs(auc_hard(cm) - oracle));
    o.require(r.auc == r.r_macro, "report auc != r_macro");
  }
  o.require(worst <= 1e-12, "oracle deviation above 1e-12");
  o.detail << published.size() << " published rows, 3 reconstructed, 10000 random matrices, max |diff| " << worst;
}

// 3
void split_counts(Outcome& o) {
  const auto corpus = generate_synthetic(101, 4068, lifeline_topic_weights(), "de", 7);
  std::size_t seeds = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed, ++seeds) {
    const auto s = stratified_split(corpus, {0.2, seed * 7919 + 1});
    o.require(s.test.count_label(1) == 21, "test positives != 21 for seed " + std::to_string(seed));
  }
  o.detail << "21 test positives for " << seeds << " seeds";
}

// 4
void sampler_compositions(Outcome& o) {
  const auto target = stratified_split(generate_synthetic(101, 4068, lifeline_topic_weights(), "de", 7), {0.2, 42});
  const auto source = combine({generate_synthetic(1014, 232, source_topic_weights(), "en", 8, "cadec"),
                               generate_synthetic(669, 222, source_topic_weights(), "en", 9, "psytar")},
                              "source");
  std::set<std::string> distinct;
  for (const auto& row : test::published_fewshot_rows()) {
    distinct.insert(std::to_string(int(row.mode)) + "/" + std::to_string(row.shots) + "/" + std::to_string(row.n_neg) +
                    "/" + std::to_string(row.n_source));
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const FewShotSpec spec{row.mode, row.shots, row.n_neg, row.n_source, seed * 104729};
      const auto sets = build_fewshot_sets(target.train_dev, row.mode == FewShotMode::add_source ? source : Corpus(), spec);
      for (auto role : {SetRole::train, SetRole::dev}) {
        const auto& set = role == SetRole::train ? sets.train : sets.dev;
        std::set<std::string> src_ids;
        for (const auto& m : sets.manifest)
          if (m.role == role && m.origin == Origin::source) src_ids.insert(m.id);
        std::size_t pos = 0, neg = 0, src = 0;
        for (const auto& d : set) (src_ids.count(d.id) ? src : d.label ? pos : neg)++;
        o.require(pos == row.train_pos && neg == row.train_neg && src == row.train_source,
                  std::string(row.label) + " composition");
      }
      std::set<std::string> train_ids;
      for (const auto& d : sets.train) train_ids.insert(d.id);
      for (const auto& d : sets.dev) o.require(!train_ids.count(d.id), "train/dev overlap");
    }
  }
  const FewShotSpec biggest{FewShotMode::add_source, 40, 300, 300, 1};
  o.require(build_fewshot_sets(target.train_dev, source, biggest).train.size() == 640, "40 + 300 + 300 != 640");
  o.detail << test::published_fewshot_rows().size() << " table rows (" << distinct.size()
           << " distinct specs) x 100 seeds";
}

ConfusionMatrix evaluate(const TrainedModel& m, const std::vector<ProcessedDocument>& docs) {
  std::vector<int> p, g;
  for (const auto& x : predict(m, docs)) p.push_back(x.label);
  for (const auto& d : docs) g.push_back(d.label);
  return confusion(p, g);
}

// 5
void baseline_sanity(Outcome& o) {
  const auto sep_emb = test::cluster_vectors(16, 40, 1.0, 0.3, 1);
  const auto sep = report(evaluate(*fit_svm_baseline(test::cluster_docs(60, 60, 40, 6, 0.0, 2, "tr"), sep_emb),
                                   test::cluster_docs(100, 100, 40, 6, 0.0, 3, "te")));
  o.require(sep.f1_1 >= 95.0, "separable F1_1 < 0.95");
  const auto emb = test::cluster_vectors(16, 40, 0.3, 1.0, 4);
  const auto train = test::cluster_docs(25, 1000, 40, 6, 0.3, 5, "tr");
  const auto test_docs = test::cluster_docs(100, 400, 40, 6, 0.3, 6, "te");
  SvmOptions plain;
  plain.balanced = false;
  const auto rb = report(evaluate(*fit_svm_baseline(train, emb, SvmOptions{}), test_docs));
  const auto rp = report(evaluate(*fit_svm_baseline(train, emb, plain), test_docs));
  o.require(rb.r1 > rp.r1, "balanced R_1 not above unweighted R_1");
  o.detail << "separable F1_1=" << sep.f1_1 / 100 << "; 1:40 R_1 balanced=" << rb.r1 / 100
           << " unweighted=" << rp.r1 / 100;
}

// 6
void determinism(Outcome& o) {
  const auto dir = test::temp_dir("acceptance_grid");
  write_demo_workspace(dir);
  const std::vector<std::string> scenarios = {"per_class_10", "per_class_40", "add_neg_40_100", "add_source_10_100_200",
                                              "add_source_40_300_300"};
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::vector<std::string>> outputs;
  for (const char* run : {"run_a", "run_b"}) {
    auto cfg = load_experiment_config(dir / "demo.toml");
    cfg.run_dir = dir / run;
    run_experiment(cfg, scenarios, "acceptance");
    std::vector<std::string> files;
    for (const auto& s : scenarios) files.push_back(read_file(cfg.run_dir / s / "aggregate.csv"));
    outputs.push_back(files);
    o.require(cfg.ensemble.model_seeds.size() == 10 && cfg.ensemble.sampling_seeds.size() == 5, "grid is not 10x5");
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(outputs[0] == outputs[1], "aggregate.csv differs between runs");
  o.require(seconds < 300.0, "two grid runs took longer than 5 minutes");
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu scenarios x 10 models x 5 seeds, byte-identical aggregate.csv, %.1f s for both runs",
                scenarios.size(), seconds);
  o.detail << buf;
}

// 7
void freezing(Outcome& o) {
  const NormalizerConfig norm;
  const auto src = kept(preprocess_corpus(generate_synthetic(300, 100, source_topic_weights(), "en", 3), norm));
  const auto tgt = kept(preprocess_corpus(generate_synthetic(20, 20, lifeline_topic_weights(), "de", 4), norm));
  const StubBackend backend;
  TrainConfig c1;
  c1.learning_rate = 0.01;
  c1.freeze_policy = FreezePolicy::none;
  c1.max_epochs = 3;
  c1.model_seed = 78;
  const auto stage1 = backend.fit_stage1(src, src, c1);
  TrainConfig c2 = c1;
  c2.freeze_policy = FreezePolicy::all_but_classifier;
  const auto stage2 = backend.fit_stage2(*stage1, tgt, tgt, c2);
  o.require(stage2->encoder_checksum() == stage1->encoder_checksum(), "encoder checksum changed");
  o.require(stage2->classifier_checksum() != stage1->classifier_checksum(), "classifier checksum unchanged");
  o.detail << "encoder " << hex64(stage1->encoder_checksum()) << " -> " << hex64(stage2->encoder_checksum())
           << ", classifier " << hex64(stage1->classifier_checksum()) << " -> " << hex64(stage2->classifier_checksum());
}

// 8
void voting(Outcome& o) {
  Rng rng(8);
  std::size_t ties = 0;
  for (unsigned mask = 0; mask < 1024; ++mask) {
    std::vector<int> v(10);
    int ones = 0;
    for (int i = 0; i < 10; ++i) ones += v[i] = (mask >> i) & 1u;
    const auto r = majority_vote({{"d", v}}).front();
    if (ones > 5) o.require(r.final == 1 && !r.was_tie, "strict majority positive");
    if (ones < 5) o.require(r.final == 0 && !r.was_tie, "strict majority negative");
    if (ones == 5) {
      ++ties;
      o.require(r.final == 1 && r.was_tie, "5-5 tie");
    }
    for (int k = 0; k < 3; ++k) {
      auto p = v;
      rng.shuffle(std::span<int>(p));
      const auto q = majority_vote({{"d", p}}).front();
      o.require(q.final == r.final && q.was_tie == r.was_tie, "permutation invariance");
    }
  }
  o.require(majority_vote({{"d", std::vector<int>(10, 1)}}).front().final == 1, "unanimity");
  o.require(majority_vote({{"d", std::vector<int>(10, 0)}}).front().final == 0, "unanimity");
  o.detail << "1024 vote vectors, " << ties << " ties";
}

// 9
void postprocessing(Outcome& o) {
  const std::vector<std::string> vocab = {"ibuprofen", "pille", "kopf", "schmerz", "zyklus", "bauch",
                                          "arzt",      "tag",   "gut",  "müde",    "spirale", "nacht"};
  Rng rng(9);
  std::size_t flips = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::string> terms;
    for (const auto& w : vocab)
      if (rng.below(3) == 0) terms.push_back(w);
    if (terms.empty()) terms.push_back(vocab[0]);
    const Lexicon lex("lex", terms);
    std::vector<Document> docs;
    std::vector<LabeledPrediction> preds;
    const auto n = 5 + rng.below(40);
    for (std::size_t k = 0; k < n; ++k) {
      std::string text;
      for (std::size_t w = 0; w < 1 + rng.below(10); ++w) text += vocab[rng.below(vocab.size())] + " ";
      docs.push_back({"d" + std::to_string(k), text, int(rng.below(2)), "", "de", ""});
      preds.push_back({"d" + std::to_string(k), int(rng.below(2))});
    }
    const Corpus corpus("fx", docs);
    std::vector<int> gold, before;
    for (const auto& d : docs) gold.push_back(d.label);
    for (const auto& p : preds) before.push_back(p.label);
    for (auto rule : {Rule::med_presence, Rule::womens_health}) {
      const auto once = apply_rule_all(rule, preds, corpus, lex);
      std::vector<LabeledPrediction> corrected;
      std::vector<int> after;
      for (std::size_t k = 0; k < once.size(); ++k) {
        o.require(!(preds[k].label == 0 && once[k].corrected == 1), "0 -> 1 flip");
        corrected.push_back({once[k].doc_id, once[k].corrected});
        after.push_back(once[k].corrected);
        flips += once[k].flipped;
      }
      const auto twice = apply_rule_all(rule, corrected, corpus, lex);
      for (std::size_t k = 0; k < twice.size(); ++k) o.require(twice[k].corrected == once[k].corrected, "idempotency");
      if (corpus.count_label(1) > 0)
        o.require(report(confusion(after, gold)).r1 <= report(confusion(before, gold)).r1, "R_1 increased");
    }
  }
  // Directional fixture: true positives name a drug, false positives do not.
  const Lexicon med("med", synthetic_medication_names(500));
  std::vector<Document> docs;
  std::vector<LabeledPrediction> preds;
  for (int k = 0; k < 8; ++k) {
    docs.push_back({"tp" + std::to_string(k), "seit ibuprofen starke übelkeit", 1, "", "de", ""});
    preds.push_back({"tp" + std::to_string(k), 1});
  }
  for (int k = 0; k < 7; ++k) {
    docs.push_back({"fp" + std::to_string(k), "kopfschmerzen seit drei tagen", 0, "", "de", ""});
    preds.push_back({"fp" + std::to_string(k), 1});
  }
  for (int k = 0; k < 30; ++k) {
    docs.push_back({"tn" + std::to_string(k), "termin beim arzt morgen", 0, "", "de", ""});
    preds.push_back({"tn" + std::to_string(k), 0});
  }
  const Corpus gold_corpus("fx", docs);
  std::vector<int> raw, gold;
  for (const auto& p : preds) raw.push_back(p.label);
  for (const auto& d : docs) gold.push_back(d.label);
  const double p_before = report(confusion(raw, gold)).p1;
  const double p_after = evaluate_rules(preds, gold_corpus, {{Rule::med_presence, &med}}).at(Rule::med_presence).p1;
  o.require(p_after >= p_before, "med rule lowered P_1 on the directional fixture");
  o.detail << "1000 fixtures x 2 rules, " << flips << " flips; directional P_1 " << round2(p_before) << " -> "
           << round2(p_after);
}

// 10
void aggregation(Outcome& o) {
  std::vector<MetricsReport> reports;
  for (int s = 0; s < 5; ++s) {
    std::vector<double> v(MetricsReport::kFields);
    for (std::size_t f = 0; f < v.size(); ++f) v[f] = 20.0 + 3.0 * f + (s == 0 ? 1.0 : s == 1 ? 2.0 : s == 2 ? 4.0 : s == 3 ? 8.0 : 10.0);
    reports.push_back(MetricsReport::from_values(v));
  }
  // offsets {1,2,4,8,10}: mean 5, squared deviations 16+9+1+9+25 = 60, sample variance 15
  const auto agg = aggregate(reports);
  const double oracle_std = std::sqrt(15.0);
  double worst = 0.0;
  for (std::size_t f = 0; f < MetricsReport::kFields; ++f) {
    worst = std::max(worst, std::abs(agg.mean_report.values()[f] - (25.0 + 3.0 * f)));
    worst = std::max(worst, std::abs(agg.std_report.values()[f] - oracle_std));
  }
  o.require(worst <= 1e-9, "mean/std deviate from the oracle");
  const auto same = aggregate(std::vector<MetricsReport>(5, reports[0]));
  for (double x : same.std_report.values()) o.require(x == 0.0, "std of identical reports != 0");
  o.detail << "max |diff| " << worst << ", identical reports std 0";
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
      {"metric oracle", metric_oracle},
      {"AUC identity", auc_identity},
      {"split counts", split_counts},
      {"sampler compositions", sampler_compositions},
      {"baseline sanity", baseline_sanity},
      {"end-to-end determinism", determinism},
      {"freezing invariant", freezing},
      {"voting properties", voting},
      {"post-processing monotonicity", postprocessing},
      {"aggregation", aggregation},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2zu %-30s %s  (%.0f ms) %s\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL", ms,
                o.detail.str().c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
