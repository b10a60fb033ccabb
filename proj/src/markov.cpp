#include "promptsteer/markov.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "promptsteer/errors.hpp"

namespace promptsteer {

std::size_t bin_score(int score) {
  if (score < 0 || score > 100) {
    throw DomainError("score " + std::to_string(score) + " outside [0, 100]");
  }
  for (std::size_t b = 0; b < kScoreBins; ++b) {
    if (score <= kScoreBinRanges[b].hi) return b;
  }
  return kTopBin;
}

SteerabilityModel SteerabilityModel::from_counts(const TransitionMatrix& counts, double epsilon) {
  SteerabilityModel m;
  m.counts_ = counts;
  m.epsilon_ = epsilon;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    double total = 0.0;
    for (double c : counts[i]) {
      if (!(c >= 0.0)) throw DomainError("transition counts must be nonnegative");
      total += c;
    }
    for (std::size_t j = 0; j < kScoreBins; ++j) {
      m.probs_[i][j] = total > 0.0 ? counts[i][j] / total : 1.0 / kScoreBins;
    }
  }
  return m;
}

SteerabilityModel SteerabilityModel::from_probabilities(const TransitionMatrix& probabilities) {
  for (const auto& row : probabilities) {
    double total = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw DomainError("transition probabilities must be nonnegative");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DomainError("transition row does not sum to 1");
  }
  return from_counts(probabilities, 0.0);
}

double SteerabilityModel::row_observations(std::size_t from) const {
  double total = 0.0;
  for (double c : counts_[from]) total += c - epsilon_;
  return total;
}

SteerabilityModel estimate_markov(std::span<const Trajectory> trajectories, double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw DomainError("epsilon must be >= 0");
  TransitionMatrix counts;
  for (auto& row : counts) row.fill(epsilon);
  for (const auto& t : trajectories) {
    std::size_t prev = kStartState;
    for (int s : t.scores) {
      const std::size_t b = bin_score(s);
      counts[prev][b] += 1.0;
      prev = b;
    }
  }
  return SteerabilityModel::from_counts(counts, epsilon);
}

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

StoppingTimeEstimate stopping_time(const SteerabilityModel& model, std::size_t n_runs,
                                   std::size_t t_max, std::uint64_t seed) {
  if (n_runs == 0) throw DomainError("stopping_time needs n_runs >= 1");
  if (t_max == 0) throw DomainError("stopping_time needs t_max >= 1");

  // Cumulative rows; the last entry is pinned to 1 so rounding cannot fall through.
  std::array<std::array<double, kScoreBins>, kScoreBins + 1> cumulative{};
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < kScoreBins; ++j) {
      acc += model.probability(i, j);
      cumulative[i][j] = acc;
    }
    cumulative[i][kScoreBins - 1] = 1.0;
  }

  std::mt19937_64 rng(seed);
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t censored = 0;
  for (std::size_t run = 0; run < n_runs; ++run) {
    std::size_t state = kStartState;
    std::size_t t = 0;
    bool absorbed = false;
    while (t < t_max) {
      ++t;
      const double u = uniform01(rng);
      const auto& row = cumulative[state];
      std::size_t next = 0;
      while (next + 1 < kScoreBins && u >= row[next]) ++next;
      state = next;
      if (state == kTopBin) {
        absorbed = true;
        break;
      }
    }
    if (!absorbed) ++censored;
    const double x = static_cast<double>(t);
    sum += x;
    sum_sq += x * x;
  }

  const double n = static_cast<double>(n_runs);
  StoppingTimeEstimate est;
  est.estimate = sum / n;
  est.runs = n_runs;
  est.t_max = t_max;
  est.censored_fraction = static_cast<double>(censored) / n;
  if (n_runs > 1) {
    const double var = std::max(0.0, (sum_sq - n * est.estimate * est.estimate) / (n - 1.0));
    est.standard_error = std::sqrt(var / n);
  }
  return est;
}

double expected_stopping_time(const SteerabilityModel& model) {
  // Transient order: 0 = start node, 1..4 = bins 0..3.
  constexpr int kTransient = 5;
  auto row_of = [](int k) { return k == 0 ? kStartState : static_cast<std::size_t>(k - 1); };
  Eigen::Matrix<double, kTransient, kTransient> a;
  for (int i = 0; i < kTransient; ++i) {
    for (int j = 0; j < kTransient; ++j) {
      const double q = j == 0 ? 0.0 : model.probability(row_of(i), static_cast<std::size_t>(j - 1));
      a(i, j) = (i == j ? 1.0 : 0.0) - q;
    }
  }
  const Eigen::Matrix<double, kTransient, 1> ones = Eigen::Matrix<double, kTransient, 1>::Ones();
  Eigen::FullPivLU<Eigen::Matrix<double, kTransient, kTransient>> lu(a);
  if (!lu.isInvertible()) throw DomainError("top bin unreachable: I - Q is singular");
  const Eigen::Matrix<double, kTransient, 1> t = lu.solve(ones);
  if (!std::isfinite(t(0)) || t(0) < 1.0) throw DomainError("top bin unreachable from start");
  return t(0);
}

}  // namespace promptsteer
