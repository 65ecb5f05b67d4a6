#include "adr/embeddings.hpp"

#include <cctype>
#include <charconv>
#include <cstring>

#include "adr/error.hpp"
#include "adr/util.hpp"

namespace adr {

namespace {

std::string strip_punct(std::string_view s) {
  std::size_t b = 0, e = s.size();
  auto punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  while (b < e && punct(s[b])) ++b;
  while (e > b && punct(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

WordVectors::WordVectors(std::size_t dim, bool aligned) : dim_(dim), aligned_(aligned), fingerprint_(fnv1a64("")) {
  if (dim == 0) throw ArgumentError("embeddings: dimension must be positive");
}

void WordVectors::add(const std::string& word, std::span<const float> vec) {
  if (vec.size() != dim_)
    throw ArgumentError("embeddings: vector for '" + word + "' has " + std::to_string(vec.size()) +
                        " values, expected " + std::to_string(dim_));
  if (index_.count(word)) return;
  index_.emplace(word, data_.size());
  data_.insert(data_.end(), vec.begin(), vec.end());
  fingerprint_ = fnv1a64(word, fingerprint_);
  fingerprint_ = fnv1a64(std::string_view(reinterpret_cast<const char*>(vec.data()), vec.size() * sizeof(float)),
                         fingerprint_);
}

const float* WordVectors::exact(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  return it == index_.end() ? nullptr : data_.data() + it->second;
}

const float* WordVectors::lookup(std::string_view word) const {
  if (const auto* v = exact(word)) return v;
  const auto lower = to_lower(word);
  if (const auto* v = exact(lower)) return v;
  const auto stripped = strip_punct(lower);
  if (stripped.empty()) return nullptr;
  return exact(stripped);
}

std::shared_ptr<WordVectors> parse_vec(std::string_view text, bool aligned) {
  std::size_t pos = 0, line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    return true;
  };
  std::string_view line;
  if (!next_line(line)) throw LoadError("embeddings: empty file");
  const auto header = split_whitespace(line);
  std::size_t dim = 0;
  if (header.size() != 2 || std::from_chars(header[1].data(), header[1].data() + header[1].size(), dim).ec != std::errc{} ||
      dim == 0)
    throw LoadError("embeddings: line 1: expected '<count> <dim>' header");
  auto out = std::make_shared<WordVectors>(dim, aligned);
  std::vector<float> vec(dim);
  while (next_line(line)) {
    if (trim(line).empty()) continue;
    const auto parts = split_whitespace(line);
    if (parts.size() != dim + 1)
      throw LoadError("embeddings: line " + std::to_string(line_no) + ": expected " + std::to_string(dim + 1) +
                      " fields, got " + std::to_string(parts.size()));
    for (std::size_t i = 0; i < dim; ++i) {
      const auto& p = parts[i + 1];
      const auto res = std::from_chars(p.data(), p.data() + p.size(), vec[i]);
      if (res.ec != std::errc{} || res.ptr != p.data() + p.size())
        throw LoadError("embeddings: line " + std::to_string(line_no) + ": bad number '" + p + "'");
    }
    out->add(parts[0], vec);
  }
  return out;
}

std::shared_ptr<WordVectors> load_vec_file(const std::filesystem::path& path, bool aligned) {
  return parse_vec(read_file(path), aligned);
}

std::vector<double> document_embedding(std::span<const std::string> tokens, const EmbeddingSource& emb,
                                       std::size_t* known) {
  std::vector<double> sum(emb.dim(), 0.0);
  std::size_t hits = 0;
  for (const auto& t : tokens) {
    const float* v = emb.lookup(t);
    if (!v) continue;
    ++hits;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
  }
  if (hits > 0)
    for (auto& x : sum) x /= static_cast<double>(hits);
  if (known) *known = hits;
  return sum;
}

}  // namespace adr
