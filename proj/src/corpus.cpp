#include "adr/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "adr/error.hpp"
#include "adr/rng.hpp"
#include "adr/util.hpp"

namespace adr {

using json = nlohmann::json;

namespace {

enum class Failure { schema, value, uniqueness };

struct Problem {
  Failure kind;
  std::string message;
};

[[noreturn]] void raise(const std::vector<Problem>& problems, const std::string& origin) {
  std::ostringstream msg;
  msg << origin << ": " << problems.size() << " invalid record(s)";
  const std::size_t shown = std::min<std::size_t>(problems.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) msg << "\n  " << problems[i].message;
  if (shown < problems.size()) msg << "\n  ...";
  switch (problems.front().kind) {
    case Failure::schema: throw SchemaError(msg.str());
    case Failure::value: throw ValueError(msg.str());
    case Failure::uniqueness: throw UniquenessError(msg.str());
  }
  throw InvariantError(msg.str());
}

std::optional<Problem> validate_document(const Document& doc) {
  if (doc.id.empty()) return Problem{Failure::value, "empty id"};
  if (doc.label != 0 && doc.label != 1)
    return Problem{Failure::value, "label " + std::to_string(doc.label) + " outside {0,1}"};
  if (doc.lang.empty()) return Problem{Failure::value, "empty lang"};
  if (trim(doc.text).empty()) return Problem{Failure::value, "empty text"};
  return std::nullopt;
}

// Collects per-record problems, then checks uniqueness over the good ones.
class RecordSink {
 public:
  explicit RecordSink(std::string unit) : unit_(std::move(unit)) {}

  void fail(std::size_t line, Failure kind, const std::string& message) {
    problems_.push_back({kind, unit_ + " " + std::to_string(line) + ": " + message});
  }

  void add(std::size_t line, Document doc) {
    if (auto p = validate_document(doc)) {
      fail(line, p->kind, p->message);
      return;
    }
    auto [it, inserted] = first_line_.emplace(doc.id, line);
    if (!inserted) {
      fail(line, Failure::uniqueness,
           "duplicate id '" + doc.id + "' (first seen at " + unit_ + " " + std::to_string(it->second) + ")");
      return;
    }
    docs_.push_back(std::move(doc));
  }

  Corpus finish(const std::string& name, const std::string& origin) {
    if (!problems_.empty()) raise(problems_, origin);
    return Corpus(name, std::move(docs_));
  }

 private:
  std::string unit_;
  std::vector<Problem> problems_;
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> first_line_;
};

std::optional<int> parse_label(const json& v) {
  if (v.is_number_integer()) {
    const auto x = v.get<long long>();
    if (x < INT32_MIN || x > INT32_MAX) return std::nullopt;
    return static_cast<int>(x);
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == std::floor(d) && std::abs(d) < 1e9) return static_cast<int>(d);
    return std::nullopt;
  }
  if (v.is_string()) {
    const auto s = trim(v.get<std::string>());
    if (s == "0") return 0;
    if (s == "1") return 1;
    try {
      std::size_t pos = 0;
      int x = std::stoi(s, &pos);
      if (pos == s.size()) return x;
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

constexpr const char* kRequired[] = {"id", "text", "label", "topic", "lang"};

Corpus load_jsonl(const std::filesystem::path& path, const std::string& name) {
  const std::string content = read_file(path);
  RecordSink sink("line");
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      sink.fail(lineno, Failure::schema, std::string("malformed JSON: ") + e.what());
      continue;
    }
    if (!rec.is_object()) {
      sink.fail(lineno, Failure::schema, "record is not a JSON object");
      continue;
    }
    bool ok = true;
    for (const char* field : kRequired) {
      if (!rec.contains(field)) {
        sink.fail(lineno, Failure::schema, std::string("missing field '") + field + "'");
        ok = false;
        break;
      }
      if (std::string_view(field) != "label" && !rec[field].is_string()) {
        sink.fail(lineno, Failure::schema, std::string("field '") + field + "' must be a string");
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    auto label = parse_label(rec["label"]);
    if (!label) {
      sink.fail(lineno, Failure::value, "label " + rec["label"].dump() + " outside {0,1}");
      continue;
    }
    Document doc;
    doc.id = rec["id"].get<std::string>();
    doc.text = rec["text"].get<std::string>();
    doc.label = *label;
    doc.topic = rec["topic"].get<std::string>();
    doc.lang = rec["lang"].get<std::string>();
    doc.source = rec.contains("source") && rec["source"].is_string() ? rec["source"].get<std::string>() : name;
    sink.add(lineno, std::move(doc));
  }
  return sink.finish(name, path.string());
}

Corpus load_csv(const std::filesystem::path& path, const std::string& name) {
  const auto rows = parse_csv(read_file(path));
  RecordSink sink("record");
  if (rows.empty()) return sink.finish(name, path.string());
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < rows[0].size(); ++i) col[trim(rows[0][i])] = i;
  for (const char* field : kRequired) {
    if (!col.count(field)) {
      sink.fail(1, Failure::schema, std::string("missing field '") + field + "' in header");
      return sink.finish(name, path.string());
    }
  }
  const bool has_source = col.count("source") > 0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t recno = r + 1;
    if (row.size() == 1 && trim(row[0]).empty()) continue;
    auto get = [&](const char* field) -> std::optional<std::string> {
      auto idx = col.at(field);
      if (idx >= row.size()) return std::nullopt;
      return row[idx];
    };
    bool ok = true;
    for (const char* field : kRequired) {
      if (!get(field)) {
        sink.fail(recno, Failure::schema, std::string("missing field '") + field + "'");
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    auto label = parse_label(json(*get("label")));
    if (!label) {
      sink.fail(recno, Failure::value, "label '" + *get("label") + "' outside {0,1}");
      continue;
    }
    Document doc{*get("id"), *get("text"), *label, *get("topic"), *get("lang"), name};
    if (has_source && col.at("source") < row.size()) doc.source = row[col.at("source")];
    sink.add(recno, std::move(doc));
  }
  return sink.finish(name, path.string());
}

}  // namespace

Corpus::Corpus(std::string name, std::vector<Document> documents)
    : name_(std::move(name)), documents_(std::move(documents)) {
  std::unordered_set<std::string> seen;
  seen.reserve(documents_.size());
  for (const auto& doc : documents_) {
    if (auto p = validate_document(doc)) {
      const std::string msg = "document '" + doc.id + "': " + p->message;
      if (p->kind == Failure::schema) throw SchemaError(msg);
      throw ValueError(msg);
    }
    if (!seen.insert(doc.id).second) throw UniquenessError("duplicate id '" + doc.id + "' in corpus " + name_);
  }
}

std::size_t Corpus::count_label(int label) const {
  return static_cast<std::size_t>(
      std::count_if(documents_.begin(), documents_.end(), [&](const Document& d) { return d.label == label; }));
}

const Document* Corpus::find(const std::string& id) const {
  auto it = std::find_if(documents_.begin(), documents_.end(), [&](const Document& d) { return d.id == id; });
  return it == documents_.end() ? nullptr : &*it;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, std::optional<std::string> name) {
  if (!std::filesystem::exists(path)) throw LoadError("corpus file '" + path.string() + "' does not exist");
  const std::string corpus_name = name.value_or(path.stem().string());
  return format == CorpusFormat::csv ? load_csv(path, corpus_name) : load_jsonl(path, corpus_name);
}

Corpus load_corpus(const std::filesystem::path& path) {
  return load_corpus(path, path.extension() == ".csv" ? CorpusFormat::csv : CorpusFormat::jsonl);
}

std::string to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& d : corpus) {
    json rec = json::object();
    rec["id"] = d.id;
    rec["text"] = d.text;
    rec["label"] = d.label;
    rec["topic"] = d.topic;
    rec["lang"] = d.lang;
    rec["source"] = d.source;
    out += rec.dump(-1, ' ', false, json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_file_atomic(path, to_jsonl(corpus));
}

Corpus combine(const std::vector<Corpus>& corpora, std::string name) {
  if (corpora.empty()) throw ArgumentError("combine: empty input list");
  std::unordered_map<std::string, std::size_t> owners;
  for (const auto& c : corpora)
    for (const auto& d : c) ++owners[d.id];
  std::vector<Document> docs;
  for (const auto& c : corpora) {
    for (auto d : c) {
      if (owners[d.id] > 1) d.id = c.name() + "/" + d.id;
      docs.push_back(std::move(d));
    }
  }
  return Corpus(std::move(name), std::move(docs));
}

std::size_t stratified_test_count(std::size_t label_count, double test_fraction) {
  // The epsilon keeps exact products such as 0.2 * 5 from rounding up to 2.
  const double raw = test_fraction * static_cast<double>(label_count);
  return std::min(label_count, static_cast<std::size_t>(std::ceil(raw - 1e-9)));
}

Split stratified_split(const Corpus& corpus, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
    throw ArgumentError("test_fraction must lie in (0,1), got " + std::to_string(spec.test_fraction));
  std::unordered_set<std::string> test_ids;
  for (int label : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < corpus.size(); ++i)
      if (corpus.documents()[i].label == label) idx.push_back(i);
    if (idx.empty())
      throw StratificationError("corpus '" + corpus.name() + "' has no documents with label " +
                                std::to_string(label));
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(label)));
    rng.shuffle(std::span(idx));
    const std::size_t k = stratified_test_count(idx.size(), spec.test_fraction);
    for (std::size_t j = 0; j < k; ++j) test_ids.insert(corpus.documents()[idx[j]].id);
  }
  std::vector<Document> train, test;
  for (const auto& d : corpus) (test_ids.count(d.id) ? test : train).push_back(d);
  return {Corpus(corpus.name() + ".train_dev", std::move(train)), Corpus(corpus.name() + ".test", std::move(test))};
}

std::string to_string(SplitRole role) { return role == SplitRole::test ? "test" : "train_dev"; }

std::size_t count_tokens(std::string_view text) { return split_whitespace(text).size(); }

std::size_t count_sentences(std::string_view text) {
  std::size_t count = 0;
  bool has_content = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if ((c == '.' || c == '!' || c == '?') && i + 1 < text.size()) {
      const char n = text[i + 1];
      if (n == ' ' || n == '\t' || n == '\n' || n == '\r') {
        if (has_content) ++count;
        has_content = false;
        continue;
      }
    }
    if (!ws && c != '.' && c != '!' && c != '?') has_content = true;
  }
  if (has_content) ++count;
  return count;
}

CorpusStats compute_stats(const Corpus& corpus,
                          const std::optional<std::unordered_map<std::string, SplitRole>>& split_labels,
                          std::size_t histogram_bin_width) {
  if (histogram_bin_width == 0) histogram_bin_width = 1;
  CorpusStats s;
  s.n_total = corpus.size();
  s.n_pos = corpus.count_label(1);
  s.n_neg = corpus.count_label(0);
  s.neg_per_pos = s.n_pos ? static_cast<double>(s.n_neg) / static_cast<double>(s.n_pos) : 0.0;

  std::map<std::string, double> token_sum, sentence_sum;
  std::map<int, double> label_tokens;
  std::map<int, std::size_t> label_docs;
  for (int label : {0, 1}) s.token_length_histogram_per_label[label].bin_width = histogram_bin_width;

  for (const auto& d : corpus) {
    std::string column = "all";
    if (split_labels) {
      auto it = split_labels->find(d.id);
      column = it == split_labels->end() ? "unassigned" : to_string(it->second);
    }
    const auto tokens = count_tokens(d.text);
    ++s.per_topic_counts[d.topic][column];
    ++s.per_source_counts[d.source][d.label];
    ++s.split_sizes[column];
    token_sum[column] += static_cast<double>(tokens);
    sentence_sum[column] += static_cast<double>(count_sentences(d.text));
    label_tokens[d.label] += static_cast<double>(tokens);
    ++label_docs[d.label];
    auto& hist = s.token_length_histogram_per_label[d.label];
    ++hist.bins[(tokens / histogram_bin_width) * histogram_bin_width];
  }
  for (const auto& [column, n] : s.split_sizes) {
    s.avg_tokens[column] = token_sum[column] / static_cast<double>(n);
    s.avg_sentences[column] = sentence_sum[column] / static_cast<double>(n);
  }
  for (const auto& [label, n] : label_docs) s.mean_tokens_per_label[label] = label_tokens[label] / static_cast<double>(n);
  return s;
}

namespace {

std::vector<std::string> columns_of(const CorpusStats& s) {
  std::vector<std::string> cols;
  for (const char* preferred : {"train_dev", "test", "all", "unassigned"})
    if (s.split_sizes.count(preferred)) cols.emplace_back(preferred);
  return cols;
}

// Topics ordered by descending total count, then name.
std::vector<std::string> topics_by_size(const CorpusStats& s) {
  std::vector<std::pair<std::size_t, std::string>> v;
  for (const auto& [topic, counts] : s.per_topic_counts) {
    std::size_t total = 0;
    for (const auto& [_, n] : counts) total += n;
    v.emplace_back(total, topic);
  }
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::string> out;
  for (auto& [_, t] : v) out.push_back(t);
  return out;
}

std::size_t at_or_zero(const std::map<std::string, std::size_t>& m, const std::string& k) {
  auto it = m.find(k);
  return it == m.end() ? 0 : it->second;
}

}  // namespace

std::string stats_csv(const CorpusStats& s) {
  std::string out = csv_row({"section", "key", "column", "value"});
  auto put = [&](const std::string& section, const std::string& key, const std::string& column,
                 const std::string& value) { out += csv_row({section, key, column, value}); };
  put("totals", "n_total", "", std::to_string(s.n_total));
  put("totals", "n_pos", "", std::to_string(s.n_pos));
  put("totals", "n_neg", "", std::to_string(s.n_neg));
  put("totals", "neg_per_pos", "", format_fixed(s.neg_per_pos, 4));
  for (const auto& col : columns_of(s)) {
    put("split", "size", col, std::to_string(s.split_sizes.at(col)));
    put("split", "avg_tokens", col, format_fixed(s.avg_tokens.at(col), 4));
    put("split", "avg_sentences", col, format_fixed(s.avg_sentences.at(col), 4));
  }
  for (const auto& topic : topics_by_size(s))
    for (const auto& col : columns_of(s))
      put("topic", topic, col, std::to_string(at_or_zero(s.per_topic_counts.at(topic), col)));
  for (const auto& [source, by_label] : s.per_source_counts)
    for (const auto& [label, n] : by_label) put("source", source, "label_" + std::to_string(label), std::to_string(n));
  for (const auto& [label, mean] : s.mean_tokens_per_label)
    put("label", "mean_tokens", "label_" + std::to_string(label), format_fixed(mean, 4));
  return out;
}

std::string stats_markdown(const CorpusStats& s) {
  const auto cols = columns_of(s);
  std::ostringstream md;
  md << "| topic |";
  for (const auto& c : cols) md << ' ' << c << " |";
  md << "\n|---|";
  for (std::size_t i = 0; i < cols.size(); ++i) md << "---:|";
  md << '\n';
  for (const auto& topic : topics_by_size(s)) {
    md << "| " << topic << " |";
    for (const auto& c : cols) md << ' ' << at_or_zero(s.per_topic_counts.at(topic), c) << " |";
    md << '\n';
  }
  md << "| **avg #tokens** |";
  for (const auto& c : cols) md << ' ' << format_fixed(s.avg_tokens.at(c), 1) << " |";
  md << "\n| **avg #sentences** |";
  for (const auto& c : cols) md << ' ' << format_fixed(s.avg_sentences.at(c), 1) << " |";
  md << "\n\n";
  md << "overall " << s.n_total << " / neg " << s.n_neg << " / pos " << s.n_pos << " / ratio "
     << format_fixed(s.neg_per_pos, 1) << " : 1\n";
  return md.str();
}

std::string histogram_csv(const CorpusStats& s) {
  std::string out = csv_row({"label", "bin_start", "bin_end", "count"});
  for (const auto& [label, hist] : s.token_length_histogram_per_label)
    for (const auto& [start, count] : hist.bins)
      out += csv_row({std::to_string(label), std::to_string(start), std::to_string(start + hist.bin_width),
                      std::to_string(count)});
  return out;
}

std::string topic_label_csv(const Corpus& corpus) {
  std::map<std::string, std::map<int, std::size_t>> counts;
  for (const auto& d : corpus) ++counts[d.topic][d.label];
  std::string out = csv_row({"topic", "label", "count"});
  for (const auto& [topic, by_label] : counts)
    for (const auto& [label, n] : by_label) out += csv_row({topic, std::to_string(label), std::to_string(n)});
  return out;
}

}  // namespace adr
