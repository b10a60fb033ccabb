#include "promptsteer/mock_provider.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <map>

#include "promptsteer/errors.hpp"
#include "promptsteer/genclient.hpp"
#include "promptsteer/hashing.hpp"
#include "promptsteer/image.hpp"

namespace promptsteer {

namespace {

void normalize_in_place(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n == 0.0) return;
  for (double& x : v) x /= n;
}

bool is_word_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

MockEmbeddingProvider::MockEmbeddingProvider(std::size_t dimension, std::string key)
    : dimension_(dimension), key_(std::move(key)) {
  if (dimension_ == 0) throw DomainError("mock embedding dimension must be positive");
}

std::string MockEmbeddingProvider::provider_id() const {
  return "mock-bow-" + std::to_string(dimension_);
}

std::vector<double> MockEmbeddingProvider::bag_of_tokens(std::string_view text) const {
  std::vector<double> v(dimension_, 0.0);
  std::map<std::string, int> counts;
  for (auto& t : tokenize(text)) ++counts[t];
  for (const auto& [token, count] : counts) {
    const std::uint64_t h = stable_hash64(key_ + '\x1f' + token);
    const std::size_t index = static_cast<std::size_t>(h % dimension_);
    const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    v[index] += sign * count;
  }
  normalize_in_place(v);
  return v;
}

std::vector<double> MockEmbeddingProvider::content_noise(std::string_view bytes) const {
  const std::string digest = sha256_hex(bytes);
  const std::string stream = keyed_expand(key_ + ":noise", digest, dimension_ * 4);
  std::vector<double> v(dimension_);
  for (std::size_t i = 0; i < dimension_; ++i) {
    std::uint32_t word = 0;
    std::memcpy(&word, stream.data() + 4 * i, 4);
    v[i] = static_cast<double>(word) / 4294967295.0 * 2.0 - 1.0;
  }
  normalize_in_place(v);
  return v;
}

EmbeddingVector MockEmbeddingProvider::text_vector(std::string_view text) const {
  if (text.empty()) throw ValidationError("embedding payload is empty");
  std::vector<double> v = bag_of_tokens(text);
  bool zero = true;
  for (double x : v) zero = zero && x == 0.0;
  // Punctuation-only text has no tokens; hash it whole.
  if (zero) v = content_noise(text);
  return EmbeddingVector(std::move(v), provider_id());
}

EmbeddingVector MockEmbeddingProvider::image_vector(std::string_view bytes) const {
  if (bytes.empty()) throw ValidationError("embedding payload is empty");
  std::vector<double> v = content_noise(bytes);
  if (!looks_like_png(bytes)) return EmbeddingVector(std::move(v), provider_id());

  const PngText text = read_png_text(bytes);
  std::string positive;
  std::string negative;
  if (auto it = text.find(kMockPromptKey); it != text.end()) {
    positive = it->second;
    if (auto neg = text.find(kMockNegativeKey); neg != text.end()) negative = neg->second;
  } else if (auto desc = text.find("Description"); desc != text.end()) {
    positive = desc->second;
  } else {
    return EmbeddingVector(std::move(v), provider_id());
  }

  const std::vector<double> pos = bag_of_tokens(positive);
  const std::vector<double> neg = bag_of_tokens(negative);
  for (std::size_t i = 0; i < dimension_; ++i) {
    v[i] = pos[i] - kNegativeWeight * neg[i] + kNoiseWeight * v[i];
  }
  normalize_in_place(v);
  return EmbeddingVector(std::move(v), provider_id());
}

EmbeddingVector MockEmbeddingProvider::embed(const EmbedRequest& request) {
  return request.kind == EmbedKind::text ? text_vector(request.payload)
                                         : image_vector(request.payload);
}

}  // namespace promptsteer
