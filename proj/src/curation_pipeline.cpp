#include "promptsteer/curation_pipeline.hpp"

#include <fstream>
#include <future>
#include <random>
#include <sstream>
#include <unordered_set>

#include "promptsteer/curation.hpp"
#include "promptsteer/errors.hpp"
#include "promptsteer/hashing.hpp"
#include "promptsteer/image.hpp"

namespace promptsteer {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<CandidateGeneration> generate_candidates(const std::string& prompt,
                                                     const std::vector<std::int64_t>& seeds,
                                                     const std::string& model_id, int steps,
                                                     GenerationGateway& gateway,
                                                     EmbeddingProvider& embedder) {
  std::vector<std::future<GenerationResult>> pending;
  pending.reserve(seeds.size());
  for (auto seed : seeds) {
    GenerationRequest req;
    req.positive_prompt = prompt;
    req.seed = seed;
    req.model_id = model_id;
    req.steps = steps;
    pending.push_back(std::async(std::launch::async, [&gateway, req] { return gateway.generate(req); }));
  }
  std::vector<CandidateGeneration> out;
  out.reserve(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const GenerationResult gen = pending[i].get();
    const auto bytes = gateway.store()->get(gen.image_ref);
    if (!bytes) throw TransportError("candidate image missing from store");
    out.push_back({seeds[i], gen.image_ref, embedder.embed_image(*bytes)});
  }
  return out;
}

}  // namespace

ManifestEntry manifest_entry_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ManifestEntry e;
  e.target_id = j.at("target_id").get<std::string>();
  e.source = target_source_from_string(j.at("source").get<std::string>());
  if (j.contains("prompt")) {
    e.text = j.at("prompt").get<std::string>();
  } else if (j.contains("caption")) {
    e.text = j.at("caption").get<std::string>();
  }
  if (e.text.empty()) throw ValidationError("manifest entry " + e.target_id + " has no prompt/caption");
  if (e.source == TargetSource::wikipedia) {
    std::filesystem::path p = j.at("image_path").get<std::string>();
    e.image_path = p.is_absolute() ? p : base_dir / p;
  }
  for (const auto& c : j.value("categories", nlohmann::json::array())) {
    auto cat = category_from_string(c.get<std::string>());
    if (!cat) throw ValidationError("unknown category " + c.get<std::string>());
    e.categories.insert(*cat);
  }
  e.categories.insert(e.source == TargetSource::wikipedia ? Category::real_image : Category::ai_image);
  e.model_id = j.value("model_id", std::string{});
  e.active_date = j.value("active_date", std::string{});
  return e;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open manifest " + path.string());
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(manifest_entry_from_json(nlohmann::json::parse(line), path.parent_path()));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("manifest line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::int64_t> candidate_seeds(std::uint64_t rng_seed, const std::string& target_id,
                                          std::size_t n) {
  std::mt19937_64 rng(rng_seed ^ stable_hash64(target_id));
  std::unordered_set<std::int64_t> seen;
  std::vector<std::int64_t> seeds;
  while (seeds.size() < n) {
    const auto s = static_cast<std::int64_t>(rng() >> 32);
    if (seen.insert(s).second) seeds.push_back(s);
  }
  return seeds;
}

TargetSpec curate_entry(const ManifestEntry& entry, GenerationGateway& gateway,
                        EmbeddingProvider& embedder, const CurationOptions& options) {
  if (options.n_seeds == 0) throw DomainError("need at least one seed candidate");
  TargetSpec t;
  t.target_id = entry.target_id;
  t.source = entry.source;
  t.ground_truth_prompt = entry.text;
  t.model_id = entry.model_id.empty() ? options.default_model_id : entry.model_id;
  t.categories = entry.categories;
  t.active_date = entry.active_date;

  const auto seeds = candidate_seeds(options.rng_seed, entry.target_id, options.n_seeds);
  if (entry.source == TargetSource::wikipedia) {
    const Image prepared = prepare_image(read_file(entry.image_path));
    t.target_image_ref = gateway.store()->put(encode_png(prepared, {{"Description", entry.text}}));
    const EmbeddingVector target_emb = embedder.embed_image(*gateway.store()->get(t.target_image_ref));
    const auto candidates = generate_candidates(entry.text, seeds, t.model_id, kPlaySteps, gateway, embedder);
    t.seed = select_seed_real(target_emb, candidates);
    for (const auto& c : candidates) {
      if (c.seed == t.seed) t.reference_distance = normalized_distance(c.embedding, target_emb);
    }
  } else {
    if (options.n_ai_targets == 0) throw DomainError("need at least one target candidate");
    const auto target_seeds =
        candidate_seeds(options.rng_seed ^ 0x7461726765747331ULL, entry.target_id, options.n_ai_targets);
    const auto set1 =
        generate_candidates(entry.text, target_seeds, t.model_id, kTargetCurationSteps, gateway, embedder);
    const auto set2 = generate_candidates(entry.text, seeds, t.model_id, kPlaySteps, gateway, embedder);
    const AiTargetSelection sel = select_target_ai(set1, set2);
    t.target_image_ref = set1[sel.target_index].image_ref;
    t.seed = sel.seed;
    t.reference_distance = sel.seed_distance;
  }
  t.calibration = calibrate_target(t.reference_distance, options.alpha_global, options.beta_global);
  return t;
}

CurationResult curate(const std::vector<ManifestEntry>& manifest, GenerationGateway& gateway,
                      EmbeddingProvider& embedder, const CurationOptions& options) {
  CurationResult result{{}, ScoreCalibration(options.alpha_global, options.beta_global), {}};
  std::unordered_set<std::string> ids;
  for (const auto& entry : manifest) {
    if (!ids.insert(entry.target_id).second) throw ValidationError("duplicate target id " + entry.target_id);
    try {
      TargetSpec t = curate_entry(entry, gateway, embedder, options);
      result.calibration.set_target(t.target_id, t.calibration);
      result.catalog.push_back(std::move(t));
    } catch (const CalibrationError& e) {
      result.skipped.push_back({entry.target_id, e.what()});
    }
  }
  return result;
}

}  // namespace promptsteer
