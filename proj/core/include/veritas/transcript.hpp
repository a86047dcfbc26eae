#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "veritas/descriptor_bag.hpp"

namespace veritas {

/// Pretrained word vectors keyed by lowercase token.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }

  // Returns false (and ignores the vector) when the token already exists.
  bool add(std::string token, std::span<const double> vector);
  std::optional<std::span<const double>> lookup(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> tokens_;
  std::vector<double> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Standard text format: token followed by `dim` floats per line, space
// separated. dim is inferred from the first line. Tokens are lowercased;
// a later duplicate of an existing token is ignored.
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::optional<std::size_t> limit = std::nullopt);

// Lowercases ASCII letters and splits on runs of characters that are not
// ASCII alphanumerics. Bytes >= 0x80 (UTF-8 sequences) are kept inside
// tokens so non-ASCII words stay whole.
std::vector<std::string> tokenize(std::string_view text);

struct EmbeddedTranscript {
  DescriptorBag bag;
  std::size_t oov_count = 0;
};

// One row per in-vocabulary token, in order; out-of-vocabulary tokens are
// skipped and counted. Throws DataError when no token is in the vocabulary.
EmbeddedTranscript embed_transcript(const EmbeddingTable& table, std::span<const std::string> tokens);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace veritas
