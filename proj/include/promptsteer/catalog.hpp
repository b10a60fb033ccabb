#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptsteer/scoring.hpp"

namespace promptsteer {

// Dataset subset flags. Subsets may overlap; membership is always explicit.
enum class Category {
  famous_person,
  landmark,
  man_made,
  people,
  real_image,
  ai_image,
  art,
  nature,
  city,
  fantasy,
  scifi_space,
};

inline constexpr Category kAllCategories[] = {
    Category::famous_person, Category::landmark, Category::man_made, Category::people,
    Category::real_image,    Category::ai_image, Category::art,      Category::nature,
    Category::city,          Category::fantasy,  Category::scifi_space,
};

std::string_view to_string(Category c);
std::optional<Category> category_from_string(std::string_view name);
// Human-readable row label ("Contains famous person?").
std::string_view category_label(Category c);

enum class TargetSource { wikipedia, ai_generated };

std::string_view to_string(TargetSource s);
TargetSource target_source_from_string(std::string_view name);

struct TargetSpec {
  std::string target_id;
  TargetSource source = TargetSource::ai_generated;
  std::string target_image_ref;
  std::string ground_truth_prompt;
  std::int64_t seed = 0;
  std::string model_id;
  std::set<Category> categories;
  TargetCalibration calibration;
  double reference_distance = 0.0;
  // Optional release day (YYYY-MM-DD); empty means always active.
  std::string active_date;

  bool has(Category c) const { return categories.contains(c); }
};

nlohmann::ordered_json to_json(const TargetSpec& t, bool include_ground_truth = true);
TargetSpec target_from_json(const nlohmann::json& j);

std::vector<TargetSpec> load_catalog(const std::filesystem::path& path);
void save_catalog(const std::filesystem::path& path, const std::vector<TargetSpec>& targets);

}  // namespace promptsteer
