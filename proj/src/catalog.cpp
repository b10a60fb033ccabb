#include "promptsteer/catalog.hpp"

#include <fstream>

#include "promptsteer/errors.hpp"

namespace promptsteer {

namespace {

struct CategoryName {
  Category category;
  std::string_view name;
  std::string_view label;
};

constexpr CategoryName kCategoryNames[] = {
    {Category::famous_person, "famous_person", "Contains famous person?"},
    {Category::landmark, "landmark", "Contains famous landmark?"},
    {Category::man_made, "man_made", "Contains man-made content?"},
    {Category::people, "people", "Contains people?"},
    {Category::real_image, "real_image", "Is real image?"},
    {Category::ai_image, "ai_image", "Is AI image?"},
    {Category::art, "art", "Is art?"},
    {Category::nature, "nature", "Contains nature?"},
    {Category::city, "city", "Contains city?"},
    {Category::fantasy, "fantasy", "Is fantasy?"},
    {Category::scifi_space, "scifi_space", "Is sci-fi or space?"},
};

}  // namespace

std::string_view to_string(Category c) {
  for (const auto& n : kCategoryNames) {
    if (n.category == c) return n.name;
  }
  return "?";
}

std::string_view category_label(Category c) {
  for (const auto& n : kCategoryNames) {
    if (n.category == c) return n.label;
  }
  return "?";
}

std::optional<Category> category_from_string(std::string_view name) {
  for (const auto& n : kCategoryNames) {
    if (n.name == name) return n.category;
  }
  return std::nullopt;
}

std::string_view to_string(TargetSource s) {
  return s == TargetSource::wikipedia ? "wikipedia" : "ai_generated";
}

TargetSource target_source_from_string(std::string_view name) {
  if (name == "wikipedia") return TargetSource::wikipedia;
  if (name == "ai_generated") return TargetSource::ai_generated;
  throw ValidationError("unknown target source '" + std::string(name) + "'");
}

nlohmann::ordered_json to_json(const TargetSpec& t, bool include_ground_truth) {
  nlohmann::ordered_json j;
  j["target_id"] = t.target_id;
  j["source"] = to_string(t.source);
  j["target_image_ref"] = t.target_image_ref;
  if (include_ground_truth) j["ground_truth_prompt"] = t.ground_truth_prompt;
  j["seed"] = t.seed;
  j["model_id"] = t.model_id;
  auto cats = nlohmann::ordered_json::array();
  for (Category c : t.categories) cats.push_back(to_string(c));
  j["categories"] = std::move(cats);
  if (include_ground_truth) {
    j["calibration"] = {{"c", t.calibration.c},
                        {"alpha", t.calibration.alpha},
                        {"beta", t.calibration.beta},
                        {"reference_unclipped", t.calibration.reference_unclipped}};
    j["reference_distance"] = t.reference_distance;
  }
  j["active_date"] = t.active_date;
  return j;
}

TargetSpec target_from_json(const nlohmann::json& j) {
  try {
    TargetSpec t;
    t.target_id = j.at("target_id").get<std::string>();
    t.source = target_source_from_string(j.at("source").get<std::string>());
    t.target_image_ref = j.at("target_image_ref").get<std::string>();
    t.ground_truth_prompt = j.value("ground_truth_prompt", std::string{});
    t.seed = j.at("seed").get<std::int64_t>();
    t.model_id = j.value("model_id", std::string{});
    for (const auto& c : j.value("categories", nlohmann::json::array())) {
      auto cat = category_from_string(c.get<std::string>());
      if (!cat) throw ValidationError("unknown category '" + c.get<std::string>() + "'");
      t.categories.insert(*cat);
    }
    if (j.contains("calibration")) {
      const auto& cal = j.at("calibration");
      t.calibration.c = cal.at("c").get<double>();
      t.calibration.alpha = cal.value("alpha", 0.0);
      t.calibration.beta = cal.value("beta", 0.0);
      t.calibration.reference_unclipped = cal.value("reference_unclipped", 100.0 / t.calibration.c);
    }
    t.reference_distance = j.value("reference_distance", 0.0);
    t.active_date = j.value("active_date", std::string{});
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed target entry: ") + e.what());
  }
}

std::vector<TargetSpec> load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read catalog " + path.string());
  std::vector<TargetSpec> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(target_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void save_catalog(const std::filesystem::path& path, const std::vector<TargetSpec>& targets) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write catalog " + path.string());
  for (const auto& t : targets) out << to_json(t).dump() << '\n';
}

}  // namespace promptsteer
