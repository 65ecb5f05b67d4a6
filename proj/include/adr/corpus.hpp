#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace adr {

/// One forum post. label 1 means the post reports at least one adverse
/// drug reaction.
struct Document {
  std::string id;
  std::string text;
  int label = 0;
  std::string topic;
  std::string lang;
  std::string source;

  friend bool operator==(const Document&, const Document&) = default;
};

/// Ordered, id-unique collection of documents.
class Corpus {
 public:
  Corpus() = default;
  /// Validates every document and id uniqueness; throws on violation.
  Corpus(std::string name, std::vector<Document> documents);

  const std::string& name() const noexcept { return name_; }
  const std::vector<Document>& documents() const noexcept { return documents_; }
  std::size_t size() const noexcept { return documents_.size(); }
  bool empty() const noexcept { return documents_.empty(); }

  std::size_t count_label(int label) const;
  const Document* find(const std::string& id) const;

  auto begin() const noexcept { return documents_.begin(); }
  auto end() const noexcept { return documents_.end(); }

  friend bool operator==(const Corpus&, const Corpus&) = default;

 private:
  std::string name_;
  std::vector<Document> documents_;
};

enum class CorpusFormat { jsonl, csv };

/// Throws SchemaError / ValueError / UniquenessError; messages carry the
/// 1-based line (jsonl) or record (csv) number.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   std::optional<std::string> name = std::nullopt);
/// Picks the format from the extension (.csv, otherwise jsonl).
Corpus load_corpus(const std::filesystem::path& path);

std::string to_jsonl(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Union of corpora. Ids that collide across inputs are rewritten to
/// "<corpus name>/<id>" in every input that carries them.
Corpus combine(const std::vector<Corpus>& corpora, std::string name);

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct Split {
  Corpus train_dev;
  Corpus test;
};

/// Label-stratified split. Each label contributes ceil(fraction * count)
/// documents to the test side; both sides keep the input order.
Split stratified_split(const Corpus& corpus, const SplitSpec& spec);

/// Per-label test count used by stratified_split.
std::size_t stratified_test_count(std::size_t label_count, double test_fraction);

enum class SplitRole { train_dev, test };
std::string to_string(SplitRole role);

struct Histogram {
  std::size_t bin_width = 10;
  std::map<std::size_t, std::size_t> bins;  // bin start -> count
};

struct CorpusStats {
  std::size_t n_total = 0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  /// n_neg / n_pos, i.e. the "40 : 1" style ratio; 0 when there are no positives.
  double neg_per_pos = 0.0;
  /// topic -> split column -> count. Column names are "train_dev"/"test", or
  /// "all" when no split labels are supplied.
  std::map<std::string, std::map<std::string, std::size_t>> per_topic_counts;
  /// source -> label -> count.
  std::map<std::string, std::map<int, std::size_t>> per_source_counts;
  std::map<std::string, std::size_t> split_sizes;
  std::map<std::string, double> avg_tokens;
  std::map<std::string, double> avg_sentences;
  std::map<int, Histogram> token_length_histogram_per_label;
  std::map<int, double> mean_tokens_per_label;
};

std::size_t count_tokens(std::string_view text);
/// Sentences are the non-empty segments left after splitting on [.!?]
/// followed by whitespace.
std::size_t count_sentences(std::string_view text);

CorpusStats compute_stats(const Corpus& corpus,
                          const std::optional<std::unordered_map<std::string, SplitRole>>& split_labels =
                              std::nullopt,
                          std::size_t histogram_bin_width = 10);

std::string stats_csv(const CorpusStats& stats);
std::string stats_markdown(const CorpusStats& stats);
std::string histogram_csv(const CorpusStats& stats);
std::string topic_label_csv(const Corpus& corpus);

}  // namespace adr
