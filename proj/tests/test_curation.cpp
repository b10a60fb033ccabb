#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <tuple>

#include "promptsteer/curation.hpp"
#include "promptsteer/curation_pipeline.hpp"
#include "promptsteer/errors.hpp"
#include "promptsteer/image.hpp"
#include "promptsteer/mock_provider.hpp"
#include "promptsteer/session.hpp"
#include "support.hpp"

using namespace promptsteer;

namespace {

// Small shared pool so that exact distance ties are common.
std::vector<EmbeddingVector> make_pool(std::mt19937_64& rng, int n, int dim) {
  std::uniform_int_distribution<int> v(-2, 2);
  std::vector<EmbeddingVector> pool;
  while (static_cast<int>(pool.size()) < n) {
    std::vector<double> x(dim);
    bool nonzero = false;
    for (auto& e : x) {
      e = v(rng);
      nonzero = nonzero || e != 0;
    }
    if (nonzero) pool.emplace_back(x);
  }
  return pool;
}

std::vector<CandidateGeneration> draw(std::mt19937_64& rng, const std::vector<EmbeddingVector>& pool, int n) {
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::uniform_int_distribution<std::int64_t> seed(0, 40);
  std::vector<CandidateGeneration> out;
  for (int i = 0; i < n; ++i) out.push_back({seed(rng), "ref" + std::to_string(i), pool[pick(rng)]});
  return out;
}

std::int64_t brute_seed(const EmbeddingVector& target, const std::vector<CandidateGeneration>& cs) {
  std::vector<std::pair<double, std::int64_t>> keyed;
  for (const auto& c : cs) keyed.emplace_back(normalized_distance(c.embedding, target), c.seed);
  return std::min_element(keyed.begin(), keyed.end())->second;
}

}  // namespace

TEST_CASE("median") {
  CHECK(median({3.0}) == 3.0);
  CHECK(median({5.0, 1.0, 3.0}) == 3.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK_THROWS(median({}));
}

TEST_CASE("select_seed_real basics") {
  const EmbeddingVector t({1, 0, 0});
  const std::vector<CandidateGeneration> one{{17, "a", EmbeddingVector({0, 1, 0})}};
  CHECK(select_seed_real(t, one) == 17);
  const std::vector<CandidateGeneration> some{
      {3, "a", EmbeddingVector({0, 1, 0})}, {9, "b", EmbeddingVector({1, 0, 0})}, {1, "c", EmbeddingVector({1, 1, 0})}};
  CHECK(select_seed_real(t, some) == 9);
  CHECK_THROWS(select_seed_real(t, std::vector<CandidateGeneration>{}));
}

TEST_CASE("select_seed_real ties go to the lowest seed") {
  const EmbeddingVector t({1, 0});
  const std::vector<CandidateGeneration> tie{{8, "a", EmbeddingVector({0, 1})}, {2, "b", EmbeddingVector({0, 1})},
                                             {5, "c", EmbeddingVector({0, 1})}};
  CHECK(select_seed_real(t, tie) == 2);
}

TEST_CASE("select_seed_real matches brute force and is order invariant") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 200; ++rep) {
    const auto pool = make_pool(rng, 6, 3);
    auto cs = draw(rng, pool, 1 + rep % 50);
    const auto target = pool[rep % pool.size()];
    const auto chosen = select_seed_real(target, cs);
    CHECK(chosen == brute_seed(target, cs));
    std::shuffle(cs.begin(), cs.end(), rng);
    CHECK(select_seed_real(target, cs) == chosen);
  }
}

TEST_CASE("inserting a strictly closer candidate always wins") {
  std::mt19937_64 rng(4);
  const auto pool = make_pool(rng, 8, 4);
  auto cs = draw(rng, pool, 30);
  const EmbeddingVector target({0.3, -0.2, 0.9, 0.1});
  cs.push_back({999, "exact", target});
  CHECK(select_seed_real(target, cs) == 999);
}

TEST_CASE("select_target_ai basics") {
  const std::vector<CandidateGeneration> set1{{0, "x", EmbeddingVector({1, 0})}};
  const std::vector<CandidateGeneration> set2{{5, "a", EmbeddingVector({0, 1})}, {6, "b", EmbeddingVector({1, 0})}};
  const auto sel = select_target_ai(set1, set2);
  CHECK(sel.target_index == 0);
  CHECK(sel.seed == 6);
  CHECK(sel.seed_index == 1);
  CHECK(sel.seed_distance == 0.0);
  CHECK_THROWS(select_target_ai(std::vector<CandidateGeneration>{}, set2));
  CHECK_THROWS(select_target_ai(set1, std::vector<CandidateGeneration>{}));
}

TEST_CASE("select_target_ai matches the two-stage brute force") {
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 100; ++rep) {
    const auto pool = make_pool(rng, 7, 3);
    const auto s1 = draw(rng, pool, 10);
    const auto s2 = draw(rng, pool, rep % 2 ? 50 : 49);
    std::vector<std::tuple<double, std::size_t>> stage1;
    for (std::size_t i = 0; i < s1.size(); ++i) {
      std::vector<double> d;
      for (const auto& y : s2) d.push_back(normalized_distance(s1[i].embedding, y.embedding));
      std::sort(d.begin(), d.end());
      const double med = d.size() % 2 ? d[d.size() / 2] : 0.5 * (d[d.size() / 2 - 1] + d[d.size() / 2]);
      stage1.emplace_back(med, i);
    }
    const auto [best_med, ti] = *std::min_element(stage1.begin(), stage1.end());
    std::vector<std::tuple<double, std::size_t>> stage2;
    for (std::size_t j = 0; j < s2.size(); ++j) {
      stage2.emplace_back(normalized_distance(s2[j].embedding, s1[ti].embedding), j);
    }
    const auto [best_d, sj] = *std::min_element(stage2.begin(), stage2.end());

    const auto sel = select_target_ai(s1, s2);
    CHECK(sel.target_index == ti);
    CHECK(sel.seed_index == sj);
    CHECK(sel.seed == s2[sj].seed);
    CHECK(sel.target_median_distance == best_med);
    CHECK(sel.seed_distance == best_d);
    for (const auto& y : s2) CHECK(sel.seed_distance <= normalized_distance(y.embedding, s1[ti].embedding));
  }
}

TEST_CASE("candidate seeds are distinct and reproducible") {
  const auto a = candidate_seeds(5, "t", 50);
  CHECK(a == candidate_seeds(5, "t", 50));
  CHECK(a != candidate_seeds(5, "u", 50));
  std::set<std::int64_t> uniq(a.begin(), a.end());
  CHECK(uniq.size() == 50);
  for (auto s : a) {
    CHECK(s >= 0);
    CHECK(s < (std::int64_t{1} << 32));
  }
}

TEST_CASE("curation pipeline with the mock stack") {
  TempDir dir("curate");
  Image photo{700, 500, std::vector<std::uint8_t>(700 * 500 * 3, 80)};
  {
    std::ofstream f(dir / "photo.png", std::ios::binary);
    f << encode_png(photo);
  }
  {
    std::ofstream m(dir / "manifest.jsonl");
    m << R"({"target_id": "wiki1", "source": "wikipedia", "image_path": "photo.png", "caption": "Eiffel tower at night", "categories": ["landmark", "man_made", "city"]})"
      << "\n\n"
      << R"({"target_id": "ai1", "source": "ai_generated", "prompt": "a dragon made of glass, fantasy art", "categories": ["fantasy", "art"]})"
      << "\n";
  }
  const auto manifest = load_manifest(dir / "manifest.jsonl");
  REQUIRE(manifest.size() == 2);
  CHECK(manifest[0].categories.contains(Category::real_image));
  CHECK(manifest[1].categories.contains(Category::ai_image));

  auto gateway = std::make_shared<GenerationGateway>(std::make_shared<MockGenerationBackend>(),
                                                     std::make_shared<ImageStore>());
  auto embed = std::make_shared<MockEmbeddingProvider>(128);
  CurationOptions opts;
  opts.n_seeds = 12;
  opts.n_ai_targets = 4;
  const auto result = curate(manifest, *gateway, *embed, opts);
  REQUIRE(result.catalog.size() == 2);
  CHECK(result.skipped.empty());

  for (const auto& t : result.catalog) {
    const auto target_png = gateway->store()->get(t.target_image_ref);
    REQUIRE(target_png.has_value());
    const Image target_img = decode_image(*target_png);
    CHECK(target_img.width == 512);
    CHECK(target_img.height == 512);
    const auto seeds = candidate_seeds(opts.rng_seed, t.target_id, opts.n_seeds);
    CHECK(std::find(seeds.begin(), seeds.end(), t.seed) != seeds.end());
    // the ground-truth prompt with the chosen seed reproduces the reference score
    const auto target_emb = embed->embed_image(*target_png);
    const auto scored =
        score_prompt(t, target_emb, t.ground_truth_prompt, "", *gateway, *embed, result.calibration);
    CHECK(scored.distance == t.reference_distance);
    CHECK(result.calibration.prerounding_score(scored.distance, t.target_id) == 100.0);
    CHECK(scored.score == 100);
  }
}

TEST_CASE("targets whose reference scores nonpositive are skipped") {
  auto gateway = std::make_shared<GenerationGateway>(std::make_shared<MockGenerationBackend>(),
                                                     std::make_shared<ImageStore>());
  MockEmbeddingProvider embed(64);
  ManifestEntry e;
  e.target_id = "hard";
  e.text = "an owl";
  CurationOptions opts;
  opts.n_seeds = 3;
  opts.n_ai_targets = 2;
  opts.beta_global = 1.0;  // every plausible distance now scores below zero
  const auto result = curate({e}, *gateway, embed, opts);
  CHECK(result.catalog.empty());
  REQUIRE(result.skipped.size() == 1);
  CHECK(result.skipped[0].target_id == "hard");
}

TEST_CASE("manifest validation") {
  CHECK_THROWS_AS(manifest_entry_from_json(nlohmann::json::parse(R"({"target_id": "x", "source": "ai_generated"})"), "."),
                  ValidationError);
  CHECK_THROWS_AS(manifest_entry_from_json(
                      nlohmann::json::parse(R"({"target_id": "x", "source": "ai_generated", "prompt": "p", "categories": ["bogus"]})"),
                      "."),
                  ValidationError);
}
