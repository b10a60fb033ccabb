#include "promptsteer/scoring.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include "promptsteer/errors.hpp"

namespace promptsteer {

double unclipped_score(double distance, double alpha, double beta) {
  return alpha * distance + beta;
}

TargetCalibration calibrate_target(double reference_distance, double alpha_global,
                                   double beta_global) {
  const double u = unclipped_score(reference_distance, alpha_global, beta_global);
  if (!(u > 0.0) || !std::isfinite(u)) {
    throw CalibrationError("reference generation has nonpositive unclipped score " +
                           std::to_string(u) + "; target unusable");
  }
  TargetCalibration t;
  t.c = 100.0 / u;
  t.alpha = alpha_global * t.c;
  t.beta = beta_global * t.c;
  t.reference_unclipped = u;
  return t;
}

ScoreCalibration::ScoreCalibration(double alpha_global, double beta_global)
    : alpha_global_(alpha_global), beta_global_(beta_global) {
  if (!(alpha_global < 0.0)) {
    throw CalibrationError("alpha_global must be negative (score decreases with distance)");
  }
  if (!std::isfinite(beta_global)) throw CalibrationError("beta_global must be finite");
}

const TargetCalibration& ScoreCalibration::calibrate(const std::string& target_id,
                                                     double reference_distance) {
  per_target_[target_id] = calibrate_target(reference_distance, alpha_global_, beta_global_);
  return per_target_[target_id];
}

void ScoreCalibration::set_target(const std::string& target_id, TargetCalibration entry) {
  if (!(entry.c > 0.0)) throw CalibrationError("score adjustment c must be positive");
  if (!(entry.reference_unclipped > 0.0)) {
    throw CalibrationError("reference unclipped score must be positive");
  }
  entry.alpha = alpha_global_ * entry.c;
  entry.beta = beta_global_ * entry.c;
  per_target_[target_id] = entry;
}

bool ScoreCalibration::has_target(const std::string& target_id) const {
  return per_target_.contains(target_id);
}

const TargetCalibration& ScoreCalibration::target(const std::string& target_id) const {
  auto it = per_target_.find(target_id);
  if (it == per_target_.end()) throw NotFoundError("no calibration for target " + target_id);
  return it->second;
}

double ScoreCalibration::prerounding_score(double distance, const std::string& target_id) const {
  const auto& t = target(target_id);
  return 100.0 * (unclipped_score(distance, alpha_global_, beta_global_) / t.reference_unclipped);
}

int clip_and_round(double prerounding) {
  return static_cast<int>(std::round(std::clamp(prerounding, 0.0, 100.0)));
}

int ScoreCalibration::score(double distance, const std::string& target_id) const {
  return clip_and_round(prerounding_score(distance, target_id));
}

nlohmann::ordered_json ScoreCalibration::to_json() const {
  nlohmann::ordered_json j;
  j["version"] = kFileVersion;
  j["alpha_global"] = alpha_global_;
  j["beta_global"] = beta_global_;
  nlohmann::ordered_json targets = nlohmann::ordered_json::object();
  for (const auto& [id, t] : per_target_) {
    targets[id] = {{"c", t.c}, {"reference_unclipped", t.reference_unclipped}};
  }
  j["per_target"] = std::move(targets);
  return j;
}

ScoreCalibration ScoreCalibration::from_json(const nlohmann::json& j) {
  try {
    const int version = j.value("version", kFileVersion);
    if (version != kFileVersion) {
      throw FormatError("unsupported calibration version " + std::to_string(version));
    }
    ScoreCalibration cal(j.at("alpha_global").get<double>(), j.at("beta_global").get<double>());
    if (j.contains("per_target")) {
      for (const auto& [id, entry] : j.at("per_target").items()) {
        TargetCalibration t;
        t.c = entry.at("c").get<double>();
        t.reference_unclipped = entry.contains("reference_unclipped")
                                    ? entry.at("reference_unclipped").get<double>()
                                    : 100.0 / t.c;
        cal.set_target(id, t);
      }
    }
    return cal;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed calibration document: ") + e.what());
  }
}

void ScoreCalibration::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

ScoreCalibration ScoreCalibration::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

double label_for(SampleGroup group) {
  switch (group) {
    case SampleGroup::same_prompt_diff_seed: return 1.0;
    case SampleGroup::human_generated: return 0.5;
    case SampleGroup::different_prompt: return 0.0;
  }
  return 0.0;
}

const char* to_string(SampleGroup group) {
  switch (group) {
    case SampleGroup::same_prompt_diff_seed: return "same_prompt_diff_seed";
    case SampleGroup::human_generated: return "human_generated";
    case SampleGroup::different_prompt: return "different_prompt";
  }
  return "?";
}

SampleGroup sample_group_from_string(const std::string& name) {
  for (auto g : {SampleGroup::same_prompt_diff_seed, SampleGroup::human_generated,
                 SampleGroup::different_prompt}) {
    if (name == to_string(g)) return g;
  }
  throw ValidationError("unknown calibration sample group '" + name + "'");
}

LinearFit fit_calibration(std::span<const CalibrationSample> samples) {
  std::array<std::size_t, 3> group_sizes{};
  for (const auto& s : samples) {
    if (!std::isfinite(s.distance) || s.distance < 0.0) {
      throw ValidationError("calibration distance must be finite and nonnegative");
    }
    ++group_sizes[static_cast<std::size_t>(s.group)];
  }
  for (std::size_t n : group_sizes) {
    if (n == 0) throw DomainError("calibration samples must cover all three groups");
  }

  // Each group gets total weight 1, so per-sample weight is 1/n_group.
  auto weight = [&](const CalibrationSample& s) {
    return 1.0 / static_cast<double>(group_sizes[static_cast<std::size_t>(s.group)]);
  };
  double w_sum = 0.0, x_mean = 0.0, y_mean = 0.0;
  for (const auto& s : samples) {
    const double w = weight(s);
    w_sum += w;
    x_mean += w * s.distance;
    y_mean += w * s.label();
  }
  x_mean /= w_sum;
  y_mean /= w_sum;

  double sxx = 0.0, sxy = 0.0;
  for (const auto& s : samples) {
    const double w = weight(s);
    const double dx = s.distance - x_mean;
    sxx += w * dx * dx;
    sxy += w * dx * (s.label() - y_mean);
  }
  if (!(sxx > 0.0)) throw DomainError("degenerate calibration design: all distances equal");

  const double slope = sxy / sxx;
  const double intercept = y_mean - slope * x_mean;
  return {100.0 * slope, 100.0 * intercept};
}

double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DomainError("pearson: length mismatch");
  if (xs.size() < 2) throw DomainError("pearson: need at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace promptsteer
