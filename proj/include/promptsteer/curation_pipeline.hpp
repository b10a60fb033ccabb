#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptsteer/catalog.hpp"
#include "promptsteer/embedding.hpp"
#include "promptsteer/genclient.hpp"
#include "promptsteer/scoring.hpp"

namespace promptsteer {

// One manifest line. Wikipedia entries point at an image file and carry its
// caption; AI entries carry the generating prompt.
struct ManifestEntry {
  std::string target_id;
  TargetSource source = TargetSource::ai_generated;
  std::filesystem::path image_path;
  std::string text;
  std::set<Category> categories;
  std::string model_id;
  std::string active_date;
};

ManifestEntry manifest_entry_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
// Relative image paths resolve against the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

struct CurationOptions {
  std::size_t n_seeds = 50;       // seed candidates per target
  std::size_t n_ai_targets = 10;  // first-set size for AI prompts
  std::uint64_t rng_seed = 0;
  std::string default_model_id = "mock";
  double alpha_global = kDefaultAlphaGlobal;
  double beta_global = kDefaultBetaGlobal;
};

struct SkippedTarget {
  std::string target_id;
  std::string reason;
};

struct CurationResult {
  std::vector<TargetSpec> catalog;
  ScoreCalibration calibration;
  std::vector<SkippedTarget> skipped;
};

// Seeds are distinct draws from [0, 2^32) on a per-target stream.
std::vector<std::int64_t> candidate_seeds(std::uint64_t rng_seed, const std::string& target_id,
                                          std::size_t n);

TargetSpec curate_entry(const ManifestEntry& entry, GenerationGateway& gateway,
                        EmbeddingProvider& embedder, const CurationOptions& options);

// Targets whose reference generation scores <= 0 under the global fit are
// skipped and reported.
CurationResult curate(const std::vector<ManifestEntry>& manifest, GenerationGateway& gateway,
                      EmbeddingProvider& embedder, const CurationOptions& options);

}  // namespace promptsteer
