#include "adr/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <set>

#include "adr/error.hpp"
#include "adr/registry.hpp"
#include "adr/util.hpp"

namespace adr {

namespace {

[[noreturn]] void syntax(std::size_t line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

bool bare_key_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

// Removes a trailing comment that is not inside a string.
std::string strip_comment(std::string_view line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_str) {
      if (c == '\\') ++i;
      else if (c == '"') in_str = false;
    } else if (c == '"') {
      in_str = true;
    } else if (c == '#') {
      return std::string(line.substr(0, i));
    }
  }
  return std::string(line);
}

int bracket_balance(std::string_view s) {
  int depth = 0;
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_str) {
      if (c == '\\') ++i;
      else if (c == '"') in_str = false;
    } else if (c == '"') {
      in_str = true;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      --depth;
    }
  }
  return depth;
}

class ValueParser {
 public:
  ValueParser(std::string_view s, std::size_t line) : s_(s), line_(line) {}

  ConfigValue parse_all() {
    auto v = parse();
    skip_ws();
    if (pos_ != s_.size()) syntax(line_, "unexpected trailing text '" + std::string(s_.substr(pos_)) + "'");
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  ConfigValue parse() {
    skip_ws();
    if (pos_ >= s_.size()) syntax(line_, "missing value");
    ConfigValue v;
    v.line = line_;
    const char c = s_[pos_];
    if (c == '"') {
      v.value = parse_string();
    } else if (c == '[') {
      ++pos_;
      ConfigValue::Array items;
      for (;;) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          break;
        }
        items.push_back(parse());
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ',') {
          ++pos_;
        } else if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          break;
        } else {
          syntax(line_, "expected ',' or ']' in array");
        }
      }
      v.value = std::move(items);
    } else if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      v.value = true;
    } else if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      v.value = false;
    } else {
      std::visit([&](auto x) { v.value = x; }, parse_number());
    }
    return v;
  }

  std::string parse_string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size()) {
      const char c = s_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (pos_ >= s_.size()) break;
      const char e = s_[pos_++];
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: syntax(line_, std::string("unsupported escape \\") + e);
      }
    }
    syntax(line_, "unterminated string");
  }

  std::variant<std::int64_t, double> parse_number() {
    const auto start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                s_[pos_] == '+' || s_[pos_] == '-' || s_[pos_] == '_'))
      ++pos_;
    std::string tok;
    for (char c : s_.substr(start, pos_ - start))
      if (c != '_') tok += c;
    if (tok.empty()) syntax(line_, "expected a value");
    const bool is_float = tok.find_first_of(".eE") != std::string::npos && tok.rfind("0x", 0) != 0;
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    if (*b == '+') ++b;
    if (is_float) {
      double d = 0;
      const auto r = std::from_chars(b, e, d);
      if (r.ec != std::errc{} || r.ptr != e) syntax(line_, "bad number '" + tok + "'");
      return d;
    } else {
      std::int64_t i = 0;
      const auto r = std::from_chars(b, e, i);
      if (r.ec != std::errc{} || r.ptr != e) syntax(line_, "bad value '" + tok + "'");
      return i;
    }
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string ConfigValue::type_name() const {
  switch (value.index()) {
    case 0: return "string";
    case 1: return "integer";
    case 2: return "float";
    case 3: return "boolean";
    default: return "array";
  }
}

std::string ConfigValue::canonical() const {
  if (const auto* s = std::get_if<std::string>(&value)) {
    std::string out = "\"";
    for (char c : *s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out + "\"";
  }
  if (const auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&value)) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, *d);
    return std::string(buf, r.ptr);
  }
  if (const auto* b = std::get_if<bool>(&value)) return *b ? "true" : "false";
  const auto& arr = std::get<Array>(value);
  std::string out = "[";
  for (std::size_t i = 0; i < arr.size(); ++i) out += (i ? ", " : "") + arr[i].canonical();
  return out + "]";
}

ConfigTable ConfigTable::parse(std::string_view text) {
  ConfigTable t;
  std::string section;
  std::vector<std::string> lines;
  {
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      auto l = text.substr(pos, end - pos);
      if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
      lines.emplace_back(l);
      pos = end + 1;
    }
  }
  std::set<std::string> sections;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    auto line = trim(strip_comment(lines[i]));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) syntax(line_no, "malformed section header");
      const auto name = trim(std::string_view(line).substr(1, line.size() - 2));
      if (name.empty() || name.front() == '.' || name.back() == '.' ||
          !std::all_of(name.begin(), name.end(), [](char c) { return bare_key_char(c) || c == '.'; }))
        syntax(line_no, "invalid section name '" + name + "'");
      if (!sections.insert(name).second) syntax(line_no, "duplicate section [" + name + "]");
      section = name;
      t.section_order_.push_back(name);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) syntax(line_no, "expected 'key = value'");
    const auto key = trim(std::string_view(line).substr(0, eq));
    if (key.empty() || !std::all_of(key.begin(), key.end(), bare_key_char))
      syntax(line_no, "invalid key '" + key + "'");
    std::string value_text = line.substr(eq + 1);
    while (bracket_balance(value_text) > 0) {
      if (++i >= lines.size()) syntax(line_no, "unterminated array");
      value_text += " " + trim(strip_comment(lines[i]));
    }
    auto value = ValueParser(value_text, line_no).parse_all();
    const auto full = section.empty() ? key : section + "." + key;
    if (!t.values_.emplace(full, std::move(value)).second) syntax(line_no, "duplicate key '" + full + "'");
  }
  return t;
}

const ConfigValue* ConfigTable::find(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::vector<std::string> ConfigTable::subsections(const std::string& prefix) const {
  std::vector<std::string> out;
  const auto p = prefix + ".";
  for (const auto& s : section_order_)
    if (s.rfind(p, 0) == 0 && s.size() > p.size() && s.find('.', p.size()) == std::string::npos)
      out.push_back(s.substr(p.size()));
  return out;
}

std::string ConfigTable::canonical(const std::vector<std::string>& exclude_prefixes) const {
  std::string out;
  for (const auto& [k, v] : values_) {
    if (std::any_of(exclude_prefixes.begin(), exclude_prefixes.end(),
                    [&](const std::string& p) { return k.rfind(p, 0) == 0; }))
      continue;
    out += k + " = " + v.canonical() + "\n";
  }
  return out;
}

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::zero_shot: return "zero_shot";
    case ScenarioKind::full: return "full";
    default: return "few_shot";
  }
}

const ScenarioConfig& ExperimentConfig::scenario(const std::string& name) const {
  for (const auto& s : scenarios)
    if (s.name == name) return s;
  throw ConfigError("unknown scenario '" + name + "'");
}

namespace {

std::string file_digest(const std::filesystem::path& p) {
  if (p.empty() || !std::filesystem::exists(p)) return "missing";
  return hex64(fnv1a64(read_file(p)));
}

// Collects field-level problems while reading typed values.
class Reader {
 public:
  Reader(const ConfigTable& t, std::filesystem::path base) : t_(t), base_(std::move(base)) {}

  std::vector<std::string> errors;
  std::set<std::string> used;

  const ConfigValue* get(const std::string& key) {
    used.insert(key);
    return t_.find(key);
  }

  void fail(const std::string& key, const std::string& msg) {
    const auto* v = t_.find(key);
    errors.push_back(key + (v ? " (line " + std::to_string(v->line) + ")" : "") + ": " + msg);
  }

  template <typename T>
  const T* typed(const std::string& key, const char* want) {
    const auto* v = get(key);
    if (!v) return nullptr;
    const auto* x = std::get_if<T>(&v->value);
    if (!x) fail(key, std::string("expected ") + want + ", got " + v->type_name());
    return x;
  }

  std::optional<std::string> str(const std::string& key) {
    const auto* s = typed<std::string>(key, "string");
    return s ? std::optional(*s) : std::nullopt;
  }

  std::optional<double> num(const std::string& key) {
    const auto* v = get(key);
    if (!v) return std::nullopt;
    if (const auto* d = std::get_if<double>(&v->value)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v->value)) return static_cast<double>(*i);
    fail(key, "expected number, got " + v->type_name());
    return std::nullopt;
  }

  std::optional<std::uint64_t> count(const std::string& key) {
    const auto* i = typed<std::int64_t>(key, "integer");
    if (!i) return std::nullopt;
    if (*i < 0) {
      fail(key, "must be >= 0");
      return std::nullopt;
    }
    return static_cast<std::uint64_t>(*i);
  }

  std::optional<bool> boolean(const std::string& key) {
    const auto* b = typed<bool>(key, "boolean");
    return b ? std::optional(*b) : std::nullopt;
  }

  std::optional<std::vector<std::string>> strings(const std::string& key) {
    const auto* a = typed<ConfigValue::Array>(key, "array");
    if (!a) return std::nullopt;
    std::vector<std::string> out;
    for (const auto& item : *a) {
      const auto* s = std::get_if<std::string>(&item.value);
      if (!s) {
        fail(key, "array items must be strings");
        return std::nullopt;
      }
      out.push_back(*s);
    }
    return out;
  }

  std::optional<std::vector<std::uint64_t>> seeds(const std::string& key) {
    const auto* a = typed<ConfigValue::Array>(key, "array");
    if (!a) return std::nullopt;
    std::vector<std::uint64_t> out;
    for (const auto& item : *a) {
      const auto* i = std::get_if<std::int64_t>(&item.value);
      if (!i || *i < 0) {
        fail(key, "array items must be non-negative integers");
        return std::nullopt;
      }
      out.push_back(static_cast<std::uint64_t>(*i));
    }
    if (std::set(out.begin(), out.end()).size() != out.size()) fail(key, "duplicate seeds");
    if (out.empty()) fail(key, "must not be empty");
    return out;
  }

  std::filesystem::path path(const std::string& key) {
    const auto s = str(key);
    if (!s) return {};
    const std::filesystem::path p(*s);
    return p.is_absolute() ? p : base_ / p;
  }

  template <typename F>
  void guard(const std::string& key, F&& f) {
    try {
      f();
    } catch (const Error& e) {
      fail(key, e.what());
    }
  }

  void train_config(const std::string& sec, TrainConfig& c) {
    if (auto v = str(sec + ".model_id")) c.model_id = *v;
    if (auto v = num(sec + ".learning_rate")) c.learning_rate = *v;
    if (auto v = count(sec + ".batch_size")) c.batch_size = *v;
    if (auto v = count(sec + ".max_epochs")) c.max_epochs = *v;
    if (auto v = count(sec + ".patience")) c.patience = *v;
    if (auto v = str(sec + ".freeze_policy")) guard(sec + ".freeze_policy", [&] { c.freeze_policy = parse_freeze_policy(*v); });
    if (auto v = str(sec + ".train_sampler")) guard(sec + ".train_sampler", [&] { c.train_sampler = parse_train_sampler(*v); });
    guard(sec, [&] { c.validate(); });
  }

 private:
  const ConfigTable& t_;
  std::filesystem::path base_;
};

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir,
                                         bool check_paths) {
  ExperimentConfig cfg;
  cfg.table = ConfigTable::parse(text);
  Reader r(cfg.table, base_dir);

  cfg.target_corpus = r.path("paths.target_corpus");
  if (cfg.target_corpus.empty()) r.errors.push_back("paths.target_corpus: required");
  if (auto v = r.strings("paths.source_corpora"))
    for (const auto& s : *v) cfg.source_corpora.push_back(std::filesystem::path(s).is_absolute() ? std::filesystem::path(s) : base_dir / s);
  cfg.med_lexicon = r.path("paths.med_lexicon");
  cfg.wh_lexicon = r.path("paths.wh_lexicon");
  cfg.registry = r.path("paths.registry");
  if (cfg.registry.empty()) r.errors.push_back("paths.registry: required");
  cfg.run_dir = r.path("paths.run_dir");
  if (cfg.run_dir.empty()) cfg.run_dir = base_dir / "runs";

  if (auto v = r.count("preprocess.min_tokens")) cfg.normalizer.min_tokens = *v;
  if (auto v = r.count("preprocess.max_tokens")) cfg.normalizer.max_tokens = *v;
  if (auto v = r.strings("preprocess.mask_classes")) {
    cfg.normalizer.mask_classes.clear();
    for (const auto& s : *v) r.guard("preprocess.mask_classes", [&] { cfg.normalizer.mask_classes.insert(parse_entity_class(s)); });
  }
  r.guard("preprocess", [&] { cfg.normalizer.validate(); });

  auto fraction = [&](const std::string& key, double& out) {
    if (auto v = r.num(key)) {
      if (!(*v > 0 && *v < 1)) r.fail(key, "must be in (0, 1)");
      else out = *v;
    }
  };
  fraction("split.test_fraction", cfg.split.test_fraction);
  if (auto v = r.count("split.seed")) cfg.split.seed = *v;
  fraction("split.source_dev_fraction", cfg.source_dev_fraction);
  fraction("split.full_dev_fraction", cfg.full_dev_fraction);

  cfg.stage1 = TrainConfig::xlmr_source();
  cfg.stage2 = TrainConfig::xlmr_source();
  cfg.full = TrainConfig::xlmr_target_full();
  r.train_config("stage1", cfg.stage1);
  if (!r.get("stage2.model_id")) cfg.stage2.model_id = cfg.stage1.model_id;
  r.train_config("stage2", cfg.stage2);
  if (!r.get("full.model_id")) cfg.full.model_id = cfg.stage1.model_id;
  r.train_config("full", cfg.full);

  if (auto v = r.seeds("ensemble.model_seeds")) cfg.ensemble.model_seeds = *v;
  if (auto v = r.seeds("ensemble.sampling_seeds")) cfg.ensemble.sampling_seeds = *v;
  if (auto v = r.str("ensemble.tie_break")) r.guard("ensemble.tie_break", [&] { cfg.ensemble.tie_break = parse_tie_break(*v); });
  if (auto v = r.count("ensemble.workers")) {
    if (*v == 0) r.fail("ensemble.workers", "must be >= 1");
    else cfg.ensemble.workers = *v;
  }
  if (auto v = r.boolean("ensemble.strict")) cfg.ensemble.strict = *v;
  if (auto v = r.boolean("ensemble.save_checkpoints")) cfg.save_checkpoints = *v;
  if (auto v = r.boolean("report.postprocess")) cfg.postprocess = *v;

  for (const auto& name : cfg.table.subsections("scenario")) {
    const auto sec = "scenario." + name;
    ScenarioConfig sc;
    sc.name = name;
    sc.model_seeds = cfg.ensemble.model_seeds;
    sc.sampling_seeds = cfg.ensemble.sampling_seeds;
    const auto kind = r.str(sec + ".kind");
    if (!kind) {
      r.errors.push_back(sec + ".kind: required (zero_shot, full or few_shot)");
      continue;
    }
    if (*kind == "zero_shot") sc.kind = ScenarioKind::zero_shot;
    else if (*kind == "full") sc.kind = ScenarioKind::full;
    else if (*kind == "few_shot") sc.kind = ScenarioKind::few_shot;
    else r.fail(sec + ".kind", "unknown kind '" + *kind + "'");
    sc.model_id = sc.kind == ScenarioKind::full ? cfg.full.model_id : cfg.stage2.model_id;
    if (sc.kind == ScenarioKind::zero_shot) sc.model_id = cfg.stage1.model_id;
    if (auto v = r.str(sec + ".model_id")) sc.model_id = *v;
    if (auto v = r.boolean(sec + ".from_scratch")) sc.from_scratch = *v;
    if (auto v = r.seeds(sec + ".model_seeds")) sc.model_seeds = *v;
    if (auto v = r.seeds(sec + ".sampling_seeds")) sc.sampling_seeds = *v;
    if (auto v = r.str(sec + ".label")) sc.display_name = *v;
    if (sc.kind == ScenarioKind::few_shot) {
      if (auto v = r.str(sec + ".mode")) r.guard(sec + ".mode", [&] { sc.fewshot.mode = parse_fewshot_mode(*v); });
      else r.errors.push_back(sec + ".mode: required for few_shot scenarios");
      if (auto v = r.count(sec + ".shots")) sc.fewshot.shots = *v;
      if (auto v = r.count(sec + ".n_neg")) sc.fewshot.n_neg = *v;
      if (auto v = r.count(sec + ".n_source")) sc.fewshot.n_source = *v;
      r.guard(sec, [&] { sc.fewshot.validate(); });
      if (sc.display_name.empty()) sc.display_name = to_string(sc.fewshot.mode) + " " + sc.fewshot.describe();
    } else {
      for (const char* k : {".mode", ".shots", ".n_neg", ".n_source"})
        if (r.get(sec + k)) r.fail(sec + k, "only valid for few_shot scenarios");
    }
    if (sc.kind == ScenarioKind::zero_shot && sc.from_scratch) r.fail(sec + ".from_scratch", "zero_shot has no target training");
    if (sc.display_name.empty()) sc.display_name = name;
    if (sc.kind != ScenarioKind::zero_shot && sc.sampling_seeds.size() < 2)
      r.fail(sec + ".sampling_seeds", "aggregation needs at least 2 sampling seeds");
    cfg.scenarios.push_back(std::move(sc));
  }
  if (cfg.scenarios.empty()) r.errors.push_back("scenario: at least one [scenario.NAME] section is required");

  bool needs_source = false;
  for (const auto& s : cfg.scenarios)
    needs_source |= !s.from_scratch || (s.kind == ScenarioKind::few_shot && s.fewshot.mode == FewShotMode::add_source);
  if (needs_source && cfg.source_corpora.empty())
    r.errors.push_back("paths.source_corpora: required by the configured scenarios");
  if (cfg.postprocess && (cfg.med_lexicon.empty() || cfg.wh_lexicon.empty()))
    r.errors.push_back("paths.med_lexicon / paths.wh_lexicon: required when report.postprocess = true");

  static const std::set<std::string> known_sections = {"paths", "preprocess", "split", "stage1", "stage2",
                                                       "full", "ensemble", "report"};
  for (const auto& [key, v] : cfg.table.values()) {
    const auto dot = key.find('.');
    const auto sec = dot == std::string::npos ? std::string() : key.substr(0, dot);
    if (!r.used.count(key)) {
      if (sec == "scenario" || known_sections.count(sec))
        r.errors.push_back(key + " (line " + std::to_string(v.line) + "): unknown key");
      else
        r.errors.push_back(key + " (line " + std::to_string(v.line) + "): unknown section");
    }
  }

  if (check_paths) {
    auto must_exist = [&](const std::string& key, const std::filesystem::path& p) {
      if (!p.empty() && !std::filesystem::exists(p)) r.errors.push_back(key + ": file not found: " + p.string());
    };
    must_exist("paths.target_corpus", cfg.target_corpus);
    for (const auto& p : cfg.source_corpora) must_exist("paths.source_corpora", p);
    if (cfg.postprocess) {
      must_exist("paths.med_lexicon", cfg.med_lexicon);
      must_exist("paths.wh_lexicon", cfg.wh_lexicon);
    }
    must_exist("paths.registry", cfg.registry);
    if (!cfg.registry.empty() && std::filesystem::exists(cfg.registry)) {
      try {
        const auto reg = Registry::load(cfg.registry);
        std::set<std::string> ids{cfg.stage1.model_id, cfg.stage2.model_id, cfg.full.model_id};
        for (const auto& s : cfg.scenarios) ids.insert(s.model_id);
        for (const auto& id : ids)
          if (!reg.contains(id)) r.errors.push_back("model_id '" + id + "': not in registry " + cfg.registry.string());
      } catch (const Error& e) {
        r.errors.push_back(std::string("paths.registry: ") + e.what());
      }
    }
  }

  if (!r.errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : r.errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, bool check_paths) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const LoadError& e) {
    throw ConfigError(e.what());
  }
  const auto base = std::filesystem::absolute(path).parent_path();
  auto cfg = parse_experiment_config(text, base, check_paths);
  cfg.config_path = path;
  if (const char* env = std::getenv("ADR_RUN_DIR"); env && *env) cfg.run_dir = env;
  return cfg;
}

std::string ExperimentConfig::stage1_hash() const {
  std::string s = "adr-stage1-v1\n";
  s += table.canonical({"scenario.", "ensemble.", "paths.target_corpus", "paths.run_dir",
                        "paths.med_lexicon", "paths.wh_lexicon", "report.", "stage2.", "full."});
  for (const auto& p : source_corpora) s += "source " + file_digest(p) + "\n";
  s += "registry " + file_digest(registry) + "\n";
  return hex64(fnv1a64(s));
}

std::string ExperimentConfig::scenario_hash(const ScenarioConfig& sc) const {
  std::string s = "adr-grid-v1\n";
  s += table.canonical({"scenario.", "ensemble.workers", "ensemble.strict", "paths.run_dir", "paths.med_lexicon",
                        "paths.wh_lexicon", "report."});
  std::string own;
  for (const auto& [k, v] : table.values())
    if (k.rfind("scenario." + sc.name + ".", 0) == 0) own += k + " = " + v.canonical() + "\n";
  s += own;
  s += "target " + file_digest(target_corpus) + "\n";
  for (const auto& p : source_corpora) s += "source " + file_digest(p) + "\n";
  s += "registry " + file_digest(registry) + "\n";
  return hex64(fnv1a64(s));
}

}  // namespace adr
