#pragma once

#include <optional>
#include <span>

namespace promptsteer {

double mean(std::span<const double> xs);
// Unbiased (n - 1) variance; requires n >= 2.
double sample_variance(std::span<const double> xs);
double sample_stddev(std::span<const double> xs);
// nullopt for fewer than two values.
std::optional<double> standard_error_of_mean(std::span<const double> xs);

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
  double p_two_sided = 1.0;
};

// Unequal-variance two-sample t-test with Welch-Satterthwaite degrees of
// freedom. Needs >= 2 values per side and nonzero pooled variance.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace promptsteer
