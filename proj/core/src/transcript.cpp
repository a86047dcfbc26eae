#include "veritas/transcript.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>

#include "veritas/error.hpp"

namespace veritas {

namespace {

bool is_token_char(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = ascii_lower(c);
  return out;
}

}  // namespace

bool EmbeddingTable::add(std::string token, std::span<const double> vector) {
  if (vector.size() != dim_) {
    throw DimensionError("embedding for \"" + token + "\" has " + std::to_string(vector.size()) +
                         " entries, table dim is " + std::to_string(dim_));
  }
  token = lowercase(token);
  if (index_.contains(token)) return false;
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
  vectors_.insert(vectors_.end(), vector.begin(), vector.end());
  return true;
}

std::optional<std::span<const double>> EmbeddingTable::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return std::span<const double>(vectors_.data() + it->second * dim_, dim_);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, std::optional<std::size_t> limit) {
  std::ifstream in(path);
  if (!in) throw DataError("embedding file not found: " + path.string());
  EmbeddingTable table;
  std::string line;
  std::vector<double> vec;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (limit && table.size() >= *limit) break;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(' ') == std::string::npos) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end && *p == ' ') ++p;
    const char* tok_end = p;
    while (tok_end < end && *tok_end != ' ') ++tok_end;
    std::string token(p, tok_end);
    vec.clear();
    p = tok_end;
    while (true) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      const char* num_end = p;
      while (num_end < end && *num_end != ' ') ++num_end;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p, num_end, v);
      if (ec != std::errc() || ptr != num_end || !std::isfinite(v)) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad number \"" +
                        std::string(p, num_end) + "\"");
      }
      vec.push_back(v);
      p = num_end;
    }
    if (table.dim() == 0) {
      if (vec.empty()) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": no vector after token");
      }
      table = EmbeddingTable(vec.size());
    }
    if (vec.size() != table.dim()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": vector has " +
                      std::to_string(vec.size()) + " entries, expected " + std::to_string(table.dim()));
    }
    table.add(std::move(token), vec);
  }
  if (table.size() == 0) throw DataError(path.string() + ": empty embedding file");
  return table;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (is_token_char(static_cast<unsigned char>(c))) {
      cur.push_back(ascii_lower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

EmbeddedTranscript embed_transcript(const EmbeddingTable& table, std::span<const std::string> tokens) {
  std::vector<double> values;
  std::size_t oov = 0;
  for (const auto& tok : tokens) {
    if (auto v = table.lookup(tok)) {
      values.insert(values.end(), v->begin(), v->end());
    } else {
      ++oov;
    }
  }
  if (values.empty()) {
    throw DataError("transcript has no in-vocabulary tokens (" + std::to_string(oov) +
                    " out-of-vocabulary)");
  }
  return {DescriptorBag(table.dim(), std::move(values)), oov};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("transcript not found: " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace veritas
