#include "promptsteer/steerability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include "promptsteer/errors.hpp"
#include "promptsteer/hashing.hpp"
#include "promptsteer/stats.hpp"

namespace promptsteer {

namespace {

using TrajectoryKey = std::tuple<std::string, std::string, std::string>;

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

std::vector<const DatasetRecord*> sorted_by_trajectory(std::span<const DatasetRecord> records) {
  std::vector<const DatasetRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const DatasetRecord* a, const DatasetRecord* b) {
    return std::tie(a->target_id, a->user_id, a->session_id, a->ordinal) <
           std::tie(b->target_id, b->user_id, b->session_id, b->ordinal);
  });
  return sorted;
}

}  // namespace

std::vector<Trajectory> trajectories_from_records(std::span<const DatasetRecord> records) {
  std::vector<Trajectory> out;
  TrajectoryKey current;
  for (const DatasetRecord* r : sorted_by_trajectory(records)) {
    TrajectoryKey key{r->target_id, r->user_id, r->session_id};
    if (out.empty() || key != current) {
      out.push_back({r->user_id, r->target_id, {}});
      current = std::move(key);
    }
    out.back().scores.push_back(r->score);
  }
  return out;
}

int rating_to_score(int rating) {
  if (rating < 1 || rating > 10) throw DomainError("rating must be in 1-10");
  return static_cast<int>(std::lround((rating - 1) * 100.0 / 9.0));
}

RatingTrajectories rating_trajectories(std::span<const RatedTrajectory> rated) {
  RatingTrajectories out;
  for (const auto& rt : rated) {
    Trajectory t{rt.user_id, rt.target_id, {}};
    for (const auto& r : rt.ratings) {
      if (r) {
        t.scores.push_back(rating_to_score(*r));
      } else {
        ++out.skipped_records;
      }
    }
    if (t.scores.empty()) {
      ++out.dropped_trajectories;
    } else {
      out.trajectories.push_back(std::move(t));
    }
  }
  return out;
}

RatingTrajectories rating_trajectories_from_records(std::span<const DatasetRecord> records) {
  std::vector<RatedTrajectory> rated;
  TrajectoryKey current;
  for (const DatasetRecord* r : sorted_by_trajectory(records)) {
    TrajectoryKey key{r->target_id, r->user_id, r->session_id};
    if (rated.empty() || key != current) {
      rated.push_back({r->user_id, r->target_id, {}});
      current = std::move(key);
    }
    rated.back().ratings.push_back(r->human_rating);
  }
  return rating_trajectories(rated);
}

std::uint64_t target_seed(std::uint64_t seed, const std::string& target_id) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed ^ stable_hash64(target_id);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<TargetSteerability> steerability_per_target(std::span<const Trajectory> trajectories,
                                                        const SteerabilityOptions& options) {
  std::map<std::string, std::vector<Trajectory>> by_target;
  for (const auto& t : trajectories) {
    if (t.scores.empty()) throw ValidationError("empty trajectory for target " + t.target_id);
    by_target[t.target_id].push_back(t);
  }

  std::vector<TargetSteerability> out;
  std::vector<const std::vector<Trajectory>*> groups;
  for (const auto& [id, ts] : by_target) {
    TargetSteerability r;
    r.target_id = id;
    r.n_trajectories = ts.size();
    out.push_back(std::move(r));
    groups.push_back(&ts);
  }

  parallel_for(out.size(), options.threads, [&](std::size_t i) {
    auto& r = out[i];
    r.model = estimate_markov(*groups[i], options.epsilon);
    r.monte_carlo =
        stopping_time(r.model, options.n_runs, options.t_max, target_seed(options.seed, r.target_id));
    try {
      r.analytic = expected_stopping_time(r.model);
    } catch (const DomainError&) {
      r.analytic.reset();
    }
  });
  return out;
}

namespace {

void attach_metadata(std::vector<TargetSteerability>& results, std::span<const DatasetRecord> records) {
  std::map<std::string, const DatasetRecord*> first;
  for (const auto& r : records) first.emplace(r.target_id, &r);
  for (auto& t : results) {
    auto it = first.find(t.target_id);
    if (it == first.end()) continue;
    t.model_id = it->second->model_id;
    t.categories = it->second->categories;
  }
}

}  // namespace

std::vector<TargetSteerability> steerability_from_records(std::span<const DatasetRecord> records,
                                                          const SteerabilityOptions& options) {
  auto out = steerability_per_target(trajectories_from_records(records), options);
  attach_metadata(out, records);
  return out;
}

RatingSteerability steerability_by_rating(std::span<const DatasetRecord> records,
                                          const SteerabilityOptions& options) {
  auto rated = rating_trajectories_from_records(records);
  RatingSteerability out;
  out.skipped_records = rated.skipped_records;
  out.targets = steerability_per_target(rated.trajectories, options);
  attach_metadata(out.targets, records);
  return out;
}

std::optional<GroupSteerability> steerability_group(std::span<const double> estimates) {
  if (estimates.empty()) return std::nullopt;
  GroupSteerability g;
  g.n_targets = estimates.size();
  g.mean = mean(estimates);
  g.sem = standard_error_of_mean(estimates);
  return g;
}

bool GroupFilter::matches(const TargetSteerability& t) const {
  if (category && !t.categories.contains(*category)) return false;
  if (target_ids && !target_ids->contains(t.target_id)) return false;
  if (model_id && t.model_id != *model_id) return false;
  return true;
}

std::optional<GroupSteerability> steerability_group(std::span<const TargetSteerability> targets,
                                                    const GroupFilter& filter) {
  std::vector<double> xs;
  for (const auto& t : targets) {
    if (filter.matches(t)) xs.push_back(t.monte_carlo.estimate);
  }
  return steerability_group(xs);
}

}  // namespace promptsteer
