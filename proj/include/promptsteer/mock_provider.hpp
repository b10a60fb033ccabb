#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "promptsteer/embedding.hpp"

namespace promptsteer {

// Lowercased runs of alphanumerics; bytes >= 0x80 count as word characters so
// UTF-8 text tokenizes without splitting code points.
std::vector<std::string> tokenize(std::string_view text);

// Deterministic stand-in for a CLIP-style provider.
//
// Text: signed feature hashing of tokens with term-frequency weights, L2
// normalized. Shared tokens make vectors close; disjoint token sets are
// orthogonal except for hash collisions.
//
// Images: mock-backend PNGs carry their prompts in text chunks, so an image
// embeds as text(positive) - 0.5 text(negative) + 0.35 noise(image bytes).
// Other PNGs fall back to a "Description" chunk. Anything else embeds as pure
// content noise.
class MockEmbeddingProvider : public EmbeddingProvider {
 public:
  static constexpr double kNegativeWeight = 0.5;
  static constexpr double kNoiseWeight = 0.35;

  explicit MockEmbeddingProvider(std::size_t dimension = 512, std::string key = "mock");

  std::string provider_id() const override;
  EmbeddingVector embed(const EmbedRequest& request) override;

  EmbeddingVector text_vector(std::string_view text) const;
  EmbeddingVector image_vector(std::string_view bytes) const;
  std::size_t dimension() const { return dimension_; }

 private:
  std::vector<double> bag_of_tokens(std::string_view text) const;
  std::vector<double> content_noise(std::string_view bytes) const;

  std::size_t dimension_;
  std::string key_;
};

}  // namespace promptsteer
