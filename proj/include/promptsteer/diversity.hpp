#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "promptsteer/dataset.hpp"
#include "promptsteer/embedding.hpp"
#include "promptsteer/markov.hpp"
#include "promptsteer/stats.hpp"

namespace promptsteer {

struct PromptObservation {
  std::string user_id;
  std::string target_id;
  std::int64_t ordinal = 1;
  EmbeddingVector embedding;
  int score = 0;
};

// Embeds each positive prompt as text; identical prompts are embedded once.
std::vector<PromptObservation> embed_prompts(std::span<const DatasetRecord> records,
                                             EmbeddingProvider& embedder);

struct FirstLastEntry {
  std::string user_id;
  std::string target_id;
  std::size_t n_prompts = 0;
  double first_distance = 0.0;
  double last_distance = 0.0;
  int first_score = 0;
  int last_score = 0;
};

struct FirstLastReport {
  std::vector<FirstLastEntry> entries;
  double mean_first_score = 0.0;
  double mean_last_score = 0.0;
};

// Euclidean distance of each (user, target) first and last prompt embedding to
// the target's mean over all submissions.
FirstLastReport diversity_first_last(std::span<const PromptObservation> obs);

struct UserDispersion {
  std::string user_id;
  std::string target_id;
  std::size_t n_prompts = 0;
  double dispersion = 0.0;
};

// Dispersion of each (user, target) prompt cloud, ordered by (target, user).
std::vector<UserDispersion> user_dispersions(std::span<const PromptObservation> obs);

// One pseudo-user per real (user, target) on targets with >= 2 users. Each draws
// the same number of prompts uniformly with replacement from the target's pool;
// the reported dispersion is the mean over `permutations` independent draws.
std::vector<UserDispersion> permuted_user_baseline(std::span<const PromptObservation> obs,
                                                   std::uint64_t seed,
                                                   std::size_t permutations = 1);

struct StyleDispersion {
  std::string user_id;
  std::size_t n_targets = 0;
  double dispersion = 0.0;
  double mean_style_norm = 0.0;
};

struct StyleReport {
  std::vector<StyleDispersion> real;
  std::vector<StyleDispersion> baseline;
};

// Style vector per (user, target): user's mean prompt embedding minus the
// target's mean. Users on >= 2 targets get the dispersion of their style vectors.
// Simulated players take, for each of the same targets, a style vector drawn
// uniformly from all users on that target.
StyleReport user_style_vectors(std::span<const PromptObservation> obs, std::uint64_t seed,
                               std::size_t permutations = 1);

struct SuccessRates {
  double improve = 0.0;
  double unchanged = 0.0;
  double worsen = 0.0;
  std::size_t pairs = 0;
};

// Pooled over consecutive pairs: delta >= 1 improves, |delta| < 1 unchanged,
// delta <= -1 worsens. nullopt when there are no pairs.
std::optional<SuccessRates> adjacent_success_rate(std::span<const std::vector<double>> sequences);
std::optional<SuccessRates> adjacent_success_rate(std::span<const Trajectory> trajectories);

struct DiversityReport {
  FirstLastReport first_last;
  std::vector<UserDispersion> real_dispersions;      // n_prompts >= 2, targets with >= 2 users
  std::vector<UserDispersion> baseline_dispersions;  // matching pseudo-users
  std::optional<WelchResult> dispersion_test;
  StyleReport style;
  std::optional<WelchResult> style_test;
  std::optional<SuccessRates> success;
};

DiversityReport diversity_report(std::span<const PromptObservation> obs, std::uint64_t seed,
                                 std::size_t permutations = 1);

}  // namespace promptsteer
