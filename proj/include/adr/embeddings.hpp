#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace adr {

/// Read-only word-vector table.
class EmbeddingSource {
 public:
  virtual ~EmbeddingSource() = default;

  virtual std::size_t dim() const = 0;
  /// Vector of `dim()` floats, or nullptr for unknown words.
  virtual const float* lookup(std::string_view word) const = 0;
  /// True when words of different languages live in one shared space.
  virtual bool aligned() const = 0;
  /// Stable content hash used for model checksums.
  virtual std::uint64_t fingerprint() const = 0;
};

using EmbeddingPtr = std::shared_ptr<const EmbeddingSource>;

/// Hash-map backed vectors. Lookup tries the word as given, then lowercased,
/// then lowercased with leading/trailing punctuation stripped.
class WordVectors final : public EmbeddingSource {
 public:
  WordVectors(std::size_t dim, bool aligned);

  /// Throws ArgumentError when the vector length differs from dim().
  void add(const std::string& word, std::span<const float> vec);

  std::size_t dim() const override { return dim_; }
  const float* lookup(std::string_view word) const override;
  bool aligned() const override { return aligned_; }
  std::uint64_t fingerprint() const override { return fingerprint_; }
  std::size_t size() const noexcept { return index_.size(); }

 private:
  const float* exact(std::string_view word) const;

  std::size_t dim_;
  bool aligned_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t fingerprint_;
};

/// Parses fastText ".vec" text ("<count> <dim>" header, then "word v1 .. vd").
/// The first occurrence of a duplicated word wins. Throws LoadError on
/// malformed input.
std::shared_ptr<WordVectors> parse_vec(std::string_view text, bool aligned);
std::shared_ptr<WordVectors> load_vec_file(const std::filesystem::path& path, bool aligned);

/// Unweighted mean of the known word vectors. Documents without a single
/// known word map to the zero vector; `known` receives the number of hits.
std::vector<double> document_embedding(std::span<const std::string> tokens, const EmbeddingSource& emb,
                                       std::size_t* known = nullptr);

}  // namespace adr
