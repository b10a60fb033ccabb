#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace promptsteer {

inline constexpr std::size_t kScoreBins = 5;
inline constexpr std::size_t kTopBin = 4;
// Row index of the dummy node that models the first submission.
inline constexpr std::size_t kStartState = 5;

struct ScoreBin {
  int lo;
  int hi;
};
inline constexpr std::array<ScoreBin, kScoreBins> kScoreBinRanges{
    {{0, 20}, {21, 40}, {41, 60}, {61, 80}, {81, 100}}};

// 0-20 -> 0, 21-40 -> 1, 41-60 -> 2, 61-80 -> 3, 81-100 -> 4.
std::size_t bin_score(int score);

struct Trajectory {
  std::string user_id;
  std::string target_id;
  std::vector<int> scores;  // submission order
};

// Rows: bins 0..4 then the start node; columns: bins 0..4.
using TransitionMatrix = std::array<std::array<double, kScoreBins>, kScoreBins + 1>;

// Score-bin Markov chain. Rows without any mass (only possible with epsilon = 0)
// fall back to uniform so every row is a distribution.
class SteerabilityModel {
 public:
  static SteerabilityModel from_counts(const TransitionMatrix& counts, double epsilon);
  // Rows must be nonnegative and sum to 1 within 1e-9; they are renormalized.
  static SteerabilityModel from_probabilities(const TransitionMatrix& probabilities);

  const TransitionMatrix& counts() const { return counts_; }
  const TransitionMatrix& probabilities() const { return probs_; }
  double probability(std::size_t from, std::size_t to) const { return probs_[from][to]; }
  double epsilon() const { return epsilon_; }
  double row_observations(std::size_t from) const;

 private:
  TransitionMatrix counts_{};
  TransitionMatrix probs_{};
  double epsilon_ = 0.0;
};

// Counts start at epsilon for every (from, to) pair including start -> bin.
// Each trajectory adds start -> bin(s1) and bin(s_{j-1}) -> bin(s_j).
SteerabilityModel estimate_markov(std::span<const Trajectory> trajectories, double epsilon = 1.0);

struct StoppingTimeEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  double censored_fraction = 0.0;
  std::size_t runs = 0;
  std::size_t t_max = 0;
};

// Monte Carlo mean number of submissions from the start node until the first
// entry into the top bin (a first submission in the top bin counts as 1).
// Runs reaching t_max are recorded as t_max.
StoppingTimeEstimate stopping_time(const SteerabilityModel& model, std::size_t n_runs,
                                   std::size_t t_max, std::uint64_t seed);

// Exact expected stopping time from the fundamental matrix N = (I - Q)^-1 over
// the transient states (start, bins 0-3). Throws DomainError when the top bin is
// unreachable.
double expected_stopping_time(const SteerabilityModel& model);

}  // namespace promptsteer
