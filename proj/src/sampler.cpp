#include "adr/sampler.hpp"

#include <numeric>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "adr/error.hpp"
#include "adr/rng.hpp"
#include "adr/util.hpp"

namespace adr {

std::string to_string(FewShotMode mode) {
  switch (mode) {
    case FewShotMode::per_class: return "per_class";
    case FewShotMode::add_neg: return "add_neg";
    case FewShotMode::add_source: return "add_source";
  }
  throw InvariantError("unknown few-shot mode");
}

FewShotMode parse_fewshot_mode(std::string_view name) {
  if (name == "per_class") return FewShotMode::per_class;
  if (name == "add_neg") return FewShotMode::add_neg;
  if (name == "add_source") return FewShotMode::add_source;
  throw ArgumentError("unknown few-shot mode '" + std::string(name) + "'");
}

void FewShotSpec::validate() const {
  if (shots == 0) throw ArgumentError("shots must be positive");
  switch (mode) {
    case FewShotMode::per_class:
      if (shots % 2) throw ArgumentError("per_class requires an even shot count, got " + std::to_string(shots));
      if (n_neg || n_source) throw ArgumentError("per_class takes no added negatives or source documents");
      break;
    case FewShotMode::add_neg:
      if (n_neg == 0) throw ArgumentError("add_neg requires n_neg > 0");
      if (n_source) throw ArgumentError("add_neg takes no source documents");
      break;
    case FewShotMode::add_source:
      if (n_neg == 0 || n_source == 0) throw ArgumentError("add_source requires n_neg > 0 and n_source > 0");
      break;
  }
}

std::size_t FewShotSpec::positives_per_set() const { return mode == FewShotMode::per_class ? shots / 2 : shots; }

std::size_t FewShotSpec::target_negatives_per_set() const {
  return mode == FewShotMode::per_class ? shots / 2 : n_neg;
}

std::size_t FewShotSpec::set_size() const { return positives_per_set() + target_negatives_per_set() + n_source; }

std::string FewShotSpec::describe() const {
  std::string s = std::to_string(shots);
  if (n_neg) s += " + " + std::to_string(n_neg) + " neg";
  if (n_source) s += " + " + std::to_string(n_source) + " source";
  return s;
}

namespace {

std::vector<const Document*> shuffled(const Corpus& pool, std::uint64_t seed, std::uint64_t stream,
                                      int label_filter) {
  std::vector<const Document*> docs;
  for (const auto& d : pool)
    if (label_filter < 0 || d.label == label_filter) docs.push_back(&d);
  Rng rng(derive_seed(seed, stream));
  rng.shuffle(std::span(docs));
  return docs;
}

void require(std::size_t need_per_set, std::size_t available, const std::string& what) {
  if (2 * need_per_set > available)
    throw CapacityError("need " + std::to_string(2 * need_per_set) + " " + what + " (" +
                        std::to_string(need_per_set) + " train + " + std::to_string(need_per_set) +
                        " dev), pool has " + std::to_string(available));
}

}  // namespace

FewShotSets build_fewshot_sets(const Corpus& target_pool, const Corpus& source_pool, const FewShotSpec& spec) {
  spec.validate();
  const bool wants_source = spec.mode == FewShotMode::add_source;
  if (wants_source && source_pool.empty()) throw ArgumentError("add_source requires a non-empty source pool");
  if (!wants_source && !source_pool.empty())
    throw ArgumentError(to_string(spec.mode) + " must not be given a source pool");

  const auto pos = shuffled(target_pool, spec.sampling_seed, 1, 1);
  const auto neg = shuffled(target_pool, spec.sampling_seed, 2, 0);
  const std::size_t n_pos = spec.positives_per_set();
  const std::size_t n_neg = spec.target_negatives_per_set();
  require(n_pos, pos.size(), "target positives");
  require(n_neg, neg.size(), "target negatives");
  std::vector<const Document*> src;
  if (wants_source) {
    src = shuffled(source_pool, spec.sampling_seed, 3, -1);
    require(spec.n_source, src.size(), "source documents");
  }

  std::vector<Document> train, dev;
  std::vector<ManifestEntry> manifest;
  auto take = [&](const std::vector<const Document*>& from, std::size_t n, Origin origin) {
    for (std::size_t i = 0; i < n; ++i) {
      train.push_back(*from[i]);
      manifest.push_back({from[i]->id, SetRole::train, origin});
    }
    for (std::size_t i = n; i < 2 * n; ++i) {
      dev.push_back(*from[i]);
      manifest.push_back({from[i]->id, SetRole::dev, origin});
    }
  };
  take(pos, n_pos, Origin::target);
  take(neg, n_neg, Origin::target);
  if (wants_source) take(src, spec.n_source, Origin::source);

  std::unordered_set<std::string> train_ids;
  for (const auto& d : train) train_ids.insert(d.id);
  for (const auto& d : dev)
    if (train_ids.count(d.id)) throw InvariantError("few-shot sets overlap on id '" + d.id + "'");

  const std::string tag = to_string(spec.mode) + "-" + std::to_string(spec.sampling_seed);
  return {Corpus(tag + ".train", std::move(train)), Corpus(tag + ".dev", std::move(dev)), spec, std::move(manifest)};
}

std::vector<Corpus> enumerate_seed_pools(const Corpus& train_dev, const std::vector<std::uint64_t>& seeds) {
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ArgumentError("enumerate_seed_pools: duplicate sampling seeds");
  std::vector<Corpus> pools;
  pools.reserve(seeds.size());
  for (auto seed : seeds) {
    std::vector<Document> docs = train_dev.documents();
    Rng rng(derive_seed(seed, 0));
    rng.shuffle(std::span(docs));
    pools.emplace_back(train_dev.name() + ".seed" + std::to_string(seed), std::move(docs));
  }
  return pools;
}

std::string manifest_jsonl(const std::vector<ManifestEntry>& manifest) {
  std::string out;
  for (const auto& e : manifest) {
    nlohmann::ordered_json rec;
    rec["id"] = e.id;
    rec["role"] = e.role == SetRole::train ? "train" : "dev";
    rec["origin"] = e.origin == Origin::target ? "target" : "source";
    out += rec.dump();
    out += '\n';
  }
  return out;
}

}  // namespace adr
