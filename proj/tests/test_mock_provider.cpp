#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "promptsteer/errors.hpp"
#include "promptsteer/genclient.hpp"
#include "promptsteer/image.hpp"
#include "promptsteer/mock_provider.hpp"

using namespace promptsteer;

namespace {

std::string generate(const std::string& pos, const std::string& neg, std::int64_t seed) {
  MockGenerationBackend gen;
  GenerationRequest r;
  r.positive_prompt = pos;
  r.negative_prompt = neg;
  r.seed = seed;
  return gen.generate(r);
}

}  // namespace

TEST_CASE("tokenize lowercases and splits on punctuation") {
  CHECK(tokenize("A Red-Fox, 4K!") == std::vector<std::string>{"a", "red", "fox", "4k"});
  CHECK(tokenize("  ").empty());
  CHECK(tokenize("caf\xc3\xa9 noir") == std::vector<std::string>{"caf\xc3\xa9", "noir"});
}

TEST_CASE("text embeddings are unit norm and deterministic") {
  MockEmbeddingProvider m(256);
  const auto a = m.embed_text("a castle on a hill");
  CHECK(a.dimension() == 256);
  CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a == MockEmbeddingProvider(256).embed_text("a castle on a hill"));
  CHECK(a == m.embed_text("A CASTLE on a hill!"));
  CHECK(a != MockEmbeddingProvider(256, "other-key").embed_text("a castle on a hill"));
  CHECK(a.provider_id() == "mock-bow-256");
  CHECK_THROWS_AS(m.embed_text(""), ValidationError);
  CHECK(m.embed_text("!!!").norm() == doctest::Approx(1.0));
}

TEST_CASE("shared tokens bring text embeddings closer") {
  MockEmbeddingProvider m(512);
  const auto base = m.embed_text("red barn in a snowy field");
  const auto near = m.embed_text("red barn in a green field");
  const auto far = m.embed_text("astronaut floating above the moon");
  CHECK(cosine_similarity(base, near) > cosine_similarity(base, far));
}

TEST_CASE("image embeddings follow the prompts in the PNG") {
  MockEmbeddingProvider m(512);
  const auto target = m.embed_image(generate("a castle on a hill at sunset", "", 1));
  const auto same_prompt = m.embed_image(generate("a castle on a hill at sunset", "", 2));
  const auto partial = m.embed_image(generate("a castle", "", 2));
  const auto unrelated = m.embed_image(generate("bowl of ramen", "", 2));
  const double d_same = normalized_distance(same_prompt, target);
  const double d_partial = normalized_distance(partial, target);
  const double d_unrelated = normalized_distance(unrelated, target);
  CHECK(d_same < d_partial);
  CHECK(d_partial < d_unrelated);
  CHECK(target.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("negative prompts push image embeddings away from their tokens") {
  MockEmbeddingProvider m(512);
  const auto barn = m.embed_text("barn");
  const auto with = m.embed_image(generate("red barn", "", 3));
  const auto without = m.embed_image(generate("red barn", "barn", 3));
  CHECK(dot(without, barn) < dot(with, barn));
}

TEST_CASE("description chunk and plain images") {
  MockEmbeddingProvider m(128);
  Image flat{8, 8, std::vector<std::uint8_t>(8 * 8 * 3, 9)};
  const auto described = m.embed_image(encode_png(flat, {{"Description", "eiffel tower"}}));
  const auto plain = m.embed_image(encode_png(flat));
  CHECK(cosine_similarity(described, m.embed_text("eiffel tower")) > 0.8);
  CHECK(std::abs(cosine_similarity(plain, m.embed_text("eiffel tower"))) < 0.5);
  CHECK(m.embed_image("not an image at all").norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(m.embed_image(""), ValidationError);
}

TEST_CASE("mean distance falls as prompts share more target tokens") {
  // Monte Carlo over random vocabularies; the ordering must hold on average.
  MockEmbeddingProvider m(512);
  std::mt19937_64 rng(2024);
  const std::vector<std::string> vocab{"castle", "hill", "sunset", "oil", "painting", "dragon", "river",
                                       "forest", "city", "night", "neon", "portrait", "cat", "ocean",
                                       "mountain", "snow", "glass", "gold", "tower", "bridge"};
  std::array<double, 4> total{};
  const int reps = 60;
  for (int r = 0; r < reps; ++r) {
    auto words = vocab;
    std::shuffle(words.begin(), words.end(), rng);
    const std::string target = words[0] + " " + words[1] + " " + words[2] + " " + words[3];
    const auto t_emb = m.embed_image(generate(target, "", 10));
    for (int shared = 0; shared <= 3; ++shared) {
      std::string prompt;
      for (int i = 0; i < shared; ++i) prompt += words[i] + " ";
      for (int i = shared; i < 4; ++i) prompt += words[10 + i] + " ";
      total[shared] += normalized_distance(m.embed_image(generate(prompt, "", 11)), t_emb);
    }
  }
  CHECK(total[0] > total[1]);
  CHECK(total[1] > total[2]);
  CHECK(total[2] > total[3]);
}
