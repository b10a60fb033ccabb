#include "promptsteer/curation.hpp"

#include <algorithm>

#include "promptsteer/errors.hpp"

namespace promptsteer {

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median of empty list");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

std::int64_t select_seed_real(const EmbeddingVector& target,
                              std::span<const CandidateGeneration> candidates) {
  if (candidates.empty()) throw DomainError("seed selection needs at least one candidate");
  const CandidateGeneration* best = nullptr;
  double best_distance = 0.0;
  for (const auto& c : candidates) {
    const double d = normalized_distance(c.embedding, target);
    if (best == nullptr || d < best_distance || (d == best_distance && c.seed < best->seed)) {
      best = &c;
      best_distance = d;
    }
  }
  return best->seed;
}

AiTargetSelection select_target_ai(std::span<const CandidateGeneration> target_pool,
                                   std::span<const CandidateGeneration> seed_pool) {
  if (target_pool.empty() || seed_pool.empty()) {
    throw DomainError("AI target selection needs nonempty candidate sets");
  }
  AiTargetSelection sel;
  std::vector<double> distances(seed_pool.size());
  for (std::size_t i = 0; i < target_pool.size(); ++i) {
    for (std::size_t j = 0; j < seed_pool.size(); ++j) {
      distances[j] = normalized_distance(target_pool[i].embedding, seed_pool[j].embedding);
    }
    const double m = median(distances);
    if (i == 0 || m < sel.target_median_distance) {
      sel.target_index = i;
      sel.target_median_distance = m;
    }
  }
  const EmbeddingVector& chosen = target_pool[sel.target_index].embedding;
  for (std::size_t j = 0; j < seed_pool.size(); ++j) {
    const double d = normalized_distance(seed_pool[j].embedding, chosen);
    if (j == 0 || d < sel.seed_distance) {
      sel.seed_index = j;
      sel.seed_distance = d;
    }
  }
  sel.seed = seed_pool[sel.seed_index].seed;
  return sel;
}

}  // namespace promptsteer
