#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "promptsteer/catalog.hpp"
#include "promptsteer/dataset.hpp"
#include "promptsteer/markov.hpp"

namespace promptsteer {

struct SteerabilityOptions {
  double epsilon = 1.0;
  std::size_t n_runs = 10000;
  std::size_t t_max = 10000;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0 = hardware concurrency
};

// Trajectories keyed by (session, user, target), ordered by ordinal.
std::vector<Trajectory> trajectories_from_records(std::span<const DatasetRecord> records);

// r -> round((r - 1) * 100 / 9); throws DomainError outside 1-10.
int rating_to_score(int rating);

struct RatedTrajectory {
  std::string user_id;
  std::string target_id;
  std::vector<std::optional<int>> ratings;
};

struct RatingTrajectories {
  std::vector<Trajectory> trajectories;  // scores are mapped ratings
  std::size_t skipped_records = 0;
  std::size_t dropped_trajectories = 0;  // nothing left after skipping
};

RatingTrajectories rating_trajectories(std::span<const RatedTrajectory> rated);
RatingTrajectories rating_trajectories_from_records(std::span<const DatasetRecord> records);

struct TargetSteerability {
  std::string target_id;
  std::string model_id;
  std::set<Category> categories;
  std::size_t n_trajectories = 0;
  SteerabilityModel model;
  StoppingTimeEstimate monte_carlo;
  std::optional<double> analytic;
};

// Seed stream for one target: independent of processing order and thread count.
std::uint64_t target_seed(std::uint64_t seed, const std::string& target_id);

// One chain and one stopping-time estimate per target, in target-id order.
std::vector<TargetSteerability> steerability_per_target(std::span<const Trajectory> trajectories,
                                                        const SteerabilityOptions& options);

// Score-based per-target results with categories and model ids taken from the records.
std::vector<TargetSteerability> steerability_from_records(std::span<const DatasetRecord> records,
                                                          const SteerabilityOptions& options);

struct RatingSteerability {
  std::vector<TargetSteerability> targets;
  std::size_t skipped_records = 0;
};

// Same pipeline with human ratings in place of scores.
RatingSteerability steerability_by_rating(std::span<const DatasetRecord> records,
                                          const SteerabilityOptions& options);

struct GroupSteerability {
  std::size_t n_targets = 0;
  double mean = 0.0;
  std::optional<double> sem;  // null for a single target
};

// Unweighted mean over per-target estimates; nullopt for an empty group.
std::optional<GroupSteerability> steerability_group(std::span<const double> estimates);

struct GroupFilter {
  std::optional<Category> category;
  std::optional<std::set<std::string>> target_ids;
  std::optional<std::string> model_id;

  bool matches(const TargetSteerability& t) const;
};

std::optional<GroupSteerability> steerability_group(std::span<const TargetSteerability> targets,
                                                    const GroupFilter& filter = {});

}  // namespace promptsteer
