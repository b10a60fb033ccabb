#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace promptsteer {

// Published global fit, already scaled to the 0-100 range.
inline constexpr double kDefaultAlphaGlobal = -150.3;
inline constexpr double kDefaultBetaGlobal = 179.1;

// alpha * d + beta, no clipping or rounding.
double unclipped_score(double distance, double alpha, double beta);

struct TargetCalibration {
  double c = 1.0;
  double alpha = 0.0;  // alpha_global * c
  double beta = 0.0;   // beta_global * c
  // unclipped_score of the target's reference generation under the global fit.
  double reference_unclipped = 100.0;
};

// Per-target adjustment that makes the reference generation score exactly 100
// before clipping. Throws CalibrationError if the reference scores <= 0.
TargetCalibration calibrate_target(double reference_distance, double alpha_global,
                                   double beta_global);

class ScoreCalibration {
 public:
  static constexpr int kFileVersion = 1;

  ScoreCalibration() : ScoreCalibration(kDefaultAlphaGlobal, kDefaultBetaGlobal) {}
  ScoreCalibration(double alpha_global, double beta_global);

  double alpha_global() const { return alpha_global_; }
  double beta_global() const { return beta_global_; }

  const TargetCalibration& calibrate(const std::string& target_id, double reference_distance);
  void set_target(const std::string& target_id, TargetCalibration entry);
  bool has_target(const std::string& target_id) const;
  const TargetCalibration& target(const std::string& target_id) const;
  const std::map<std::string, TargetCalibration>& targets() const { return per_target_; }

  // alpha_i * d + beta_i, evaluated as 100 * u(d) / u(d_ref) so that the
  // reference distance maps to exactly 100.
  double prerounding_score(double distance, const std::string& target_id) const;

  // round(clip(prerounding, 0, 100)), halves away from zero.
  int score(double distance, const std::string& target_id) const;

  nlohmann::ordered_json to_json() const;
  static ScoreCalibration from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static ScoreCalibration load(const std::filesystem::path& path);

 private:
  double alpha_global_;
  double beta_global_;
  std::map<std::string, TargetCalibration> per_target_;
};

int clip_and_round(double prerounding);

enum class SampleGroup { same_prompt_diff_seed, human_generated, different_prompt };

double label_for(SampleGroup group);
const char* to_string(SampleGroup group);
SampleGroup sample_group_from_string(const std::string& name);

struct CalibrationSample {
  std::string target_id;
  double distance = 0.0;
  SampleGroup group = SampleGroup::human_generated;
  double label() const { return label_for(group); }
};

struct LinearFit {
  double alpha = 0.0;
  double beta = 0.0;
};

// Least squares of label on distance with each group carrying equal total
// weight, scaled by 100. Throws DomainError if a group is missing or all
// distances coincide.
LinearFit fit_calibration(std::span<const CalibrationSample> samples);

double pearson_correlation(std::span<const double> xs, std::span<const double> ys);

}  // namespace promptsteer
