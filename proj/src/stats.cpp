#include "promptsteer/stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>

#include "promptsteer/errors.hpp"

namespace promptsteer {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("mean of empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw DomainError("variance needs at least two values");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double sample_stddev(std::span<const double> xs) { return std::sqrt(sample_variance(xs)); }

std::optional<double> standard_error_of_mean(std::span<const double> xs) {
  if (xs.size() < 2) return std::nullopt;
  return sample_stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DomainError("welch t-test needs >= 2 values per sample");
  for (auto xs : {a, b}) {
    for (double x : xs) {
      if (!std::isfinite(x)) throw DomainError("welch t-test input is not finite");
    }
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = sample_variance(a) / na;
  const double vb = sample_variance(b) / nb;
  const double se2 = va + vb;
  if (!(se2 > 0.0)) throw DomainError("welch t-test: both samples have zero variance");

  WelchResult r;
  r.t = (mean(a) - mean(b)) / std::sqrt(se2);
  r.dof = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const boost::math::students_t dist(r.dof);
  r.p_two_sided = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

}  // namespace promptsteer
