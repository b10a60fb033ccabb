#include "promptsteer/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "promptsteer/errors.hpp"

namespace promptsteer {

namespace {

void require_same_dimension(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    throw DomainError("embedding dimension mismatch: " + std::to_string(a.dimension()) +
                      " vs " + std::to_string(b.dimension()));
  }
  if (a.empty()) throw DomainError("empty embedding");
}

double nonzero_norm(const EmbeddingVector& v) {
  const double n = v.norm();
  if (n == 0.0) throw DomainError("zero-norm embedding");
  return n;
}

}  // namespace

EmbeddingVector::EmbeddingVector(std::vector<double> values, std::string provider_id)
    : values_(std::move(values)), provider_id_(std::move(provider_id)) {
  if (values_.empty()) throw DomainError("embedding must have dimension > 0");
  for (double x : values_) {
    if (!std::isfinite(x)) throw DomainError("embedding has non-finite entry");
  }
}

double EmbeddingVector::norm() const {
  return std::sqrt(std::inner_product(values_.begin(), values_.end(), values_.begin(), 0.0));
}

EmbeddingVector operator-(const EmbeddingVector& a, const EmbeddingVector& b) {
  require_same_dimension(a, b);
  std::vector<double> out(a.dimension());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return EmbeddingVector(std::move(out), a.provider_id());
}

EmbeddingVector operator+(const EmbeddingVector& a, const EmbeddingVector& b) {
  require_same_dimension(a, b);
  std::vector<double> out(a.dimension());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return EmbeddingVector(std::move(out), a.provider_id());
}

EmbeddingVector operator*(double s, const EmbeddingVector& v) {
  std::vector<double> out(v.values().begin(), v.values().end());
  for (double& x : out) x *= s;
  return EmbeddingVector(std::move(out), v.provider_id());
}

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  require_same_dimension(a, b);
  const auto av = a.values();
  const auto bv = b.values();
  return std::inner_product(av.begin(), av.end(), bv.begin(), 0.0);
}

double euclidean_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
  require_same_dimension(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.dimension(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  require_same_dimension(a, b);
  const double r = dot(a, b) / (nonzero_norm(a) * nonzero_norm(b));
  return std::clamp(r, -1.0, 1.0);
}

double normalized_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
  require_same_dimension(a, b);
  return euclidean_distance(a, b) / (nonzero_norm(a) * nonzero_norm(b));
}

EmbeddingVector centroid(std::span<const EmbeddingVector> vs) {
  if (vs.empty()) throw DomainError("centroid of empty set");
  std::vector<double> sum(vs.front().dimension(), 0.0);
  for (const auto& v : vs) {
    require_same_dimension(vs.front(), v);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
  }
  const double n = static_cast<double>(vs.size());
  for (double& x : sum) x /= n;
  return EmbeddingVector(std::move(sum), vs.front().provider_id());
}

double dispersion(std::span<const EmbeddingVector> vs) {
  const EmbeddingVector center = centroid(vs);
  double total = 0.0;
  for (const auto& v : vs) {
    const double d = euclidean_distance(v, center);
    total += d * d;
  }
  return std::sqrt(total / static_cast<double>(vs.size()));
}

}  // namespace promptsteer
