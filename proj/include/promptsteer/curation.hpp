#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "promptsteer/embedding.hpp"

namespace promptsteer {

struct CandidateGeneration {
  std::int64_t seed = 0;
  std::string image_ref;
  EmbeddingVector embedding;
};

// Median; even-length inputs average the two middle values.
double median(std::vector<double> values);

// Seed of the candidate closest to the target under normalized_distance.
// Ties go to the lowest seed value.
std::int64_t select_seed_real(const EmbeddingVector& target,
                              std::span<const CandidateGeneration> candidates);

struct AiTargetSelection {
  std::size_t target_index = 0;  // into the first set
  std::size_t seed_index = 0;    // into the second set
  std::int64_t seed = 0;
  double target_median_distance = 0.0;
  double seed_distance = 0.0;
};

// Two-stage selection: the first-set image with the smallest median distance to
// the second set becomes the target; then the second-set member closest to that
// target supplies the seed. Ties go to the lowest index in both stages.
AiTargetSelection select_target_ai(std::span<const CandidateGeneration> target_pool,
                                   std::span<const CandidateGeneration> seed_pool);

}  // namespace promptsteer
