#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace promptsteer {

// Fixed-dimension real vector produced by an embedding provider.
// Construction enforces dimension > 0 and finite entries.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values, std::string provider_id = {});

  std::size_t dimension() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::string& provider_id() const { return provider_id_; }

  double norm() const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
  std::string provider_id_;
};

EmbeddingVector operator-(const EmbeddingVector& a, const EmbeddingVector& b);
EmbeddingVector operator+(const EmbeddingVector& a, const EmbeddingVector& b);
EmbeddingVector operator*(double s, const EmbeddingVector& v);

double dot(const EmbeddingVector& a, const EmbeddingVector& b);
double euclidean_distance(const EmbeddingVector& a, const EmbeddingVector& b);

// <a,b> / (|a| |b|). Throws DomainError on zero norm or dimension mismatch.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// |a - b| / (|a| |b|), the seed-selection objective. Note the denominator is the
// product of norms, not their sum; for unit vectors this is sqrt(2 - 2 cos).
double normalized_distance(const EmbeddingVector& a, const EmbeddingVector& b);

EmbeddingVector centroid(std::span<const EmbeddingVector> vs);

// Root-mean-square Euclidean distance to the centroid.
double dispersion(std::span<const EmbeddingVector> vs);

// Embedding-provider client contract.
enum class EmbedKind { image, text };

struct EmbedRequest {
  EmbedKind kind = EmbedKind::text;
  std::string payload;  // raw image bytes or UTF-8 text
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string provider_id() const = 0;
  // Must be deterministic for identical payloads.
  virtual EmbeddingVector embed(const EmbedRequest& request) = 0;

  EmbeddingVector embed_text(std::string_view text) {
    return embed({EmbedKind::text, std::string(text)});
  }
  EmbeddingVector embed_image(std::string_view bytes) {
    return embed({EmbedKind::image, std::string(bytes)});
  }
};

}  // namespace promptsteer
