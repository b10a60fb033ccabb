#include <doctest.h>

#include <sstream>

#include "promptsteer/dataset.hpp"
#include "support.hpp"

using namespace promptsteer;

namespace {

DatasetRecord rec(const std::string& user, const std::string& target, std::int64_t ordinal, int score,
                  std::set<Category> cats, std::string pos = "a b c", std::string neg = "",
                  std::optional<std::int64_t> duration = std::nullopt) {
  DatasetRecord r;
  r.interaction_id = user + "-" + target + "-" + std::to_string(ordinal);
  r.session_id = user + target;
  r.user_id = user;
  r.target_id = target;
  r.model_id = "sd21";
  r.categories = std::move(cats);
  r.ordinal = ordinal;
  r.timestamp_ms = 1000 * ordinal;
  r.positive_prompt = std::move(pos);
  r.negative_prompt = std::move(neg);
  r.image_ref = "ref";
  r.score = score;
  r.duration_ms = duration;
  return r;
}

std::vector<DatasetRecord> crafted() {
  const std::set<Category> famous{Category::famous_person, Category::people, Category::real_image};
  const std::set<Category> art{Category::art, Category::ai_image};
  return {
      rec("u1", "t1", 1, 40, famous, "a man in a suit", "", 10000),
      rec("u1", "t1", 2, 60, famous, "barack obama smiling", "hat", 20000),
      rec("u2", "t1", 1, 70, famous, "obama", "", 5000),
      rec("u2", "t2", 1, 30, art, "oil painting of a dragon", "blurry ugly", 8000),
      rec("u2", "t2", 2, 50, art, "dragon painting", "", 12000),
      rec("u2", "t2", 3, 90, art, "green dragon oil painting fantasy", "", 30000),
      rec("u3", "t2", 1, 80, art, "dragon", "", std::nullopt),
  };
}

}  // namespace

TEST_CASE("records round trip through JSONL in canonical order") {
  auto r = crafted()[1];
  r.distance = 0.4375;
  r.human_rating = 7;
  const std::string line = to_jsonl_line(r);
  CHECK(line.rfind(R"({"interaction_id":"u1-t1-2","session_id":)", 0) == 0);
  std::istringstream in(line + "\n");
  const auto back = import_dataset(in);
  REQUIRE(back.records.size() == 1);
  CHECK(back.records[0] == r);

  std::ostringstream out;
  const auto all = crafted();
  export_dataset(out, all);
  std::istringstream again(out.str());
  CHECK(import_dataset(again).records == all);
}

TEST_CASE("strict import lists every bad line and field") {
  std::istringstream in(
      R"({"interaction_id":"a","user_id":"u","target_id":"t","ordinal":1,"timestamp_ms":0,"positive_prompt":"p","negative_prompt":"","score":50})"
      "\n"
      R"({"interaction_id":"b","user_id":"u","target_id":"t","ordinal":0,"timestamp_ms":0,"positive_prompt":"p","negative_prompt":"","score":101})"
      "\n"
      "{not json\n"
      R"({"interaction_id":"c","user_id":"u","target_id":"t","ordinal":2,"timestamp_ms":0,"positive_prompt":"p","negative_prompt":"","score":5,"human_rating":0,"mood":"happy"})"
      "\n"
      R"({"interaction_id":"d","target_id":"t","ordinal":2,"timestamp_ms":0,"positive_prompt":"p","negative_prompt":"","score":5,"distance":-1})"
      "\n");
  try {
    import_dataset(in);
    FAIL("expected a validation error");
  } catch (const DatasetValidationError& e) {
    std::set<std::pair<std::size_t, std::string>> got;
    for (const auto& i : e.issues()) got.emplace(i.line, i.field);
    const std::set<std::pair<std::size_t, std::string>> want{
        {2, "ordinal"}, {2, "score"}, {3, ""}, {4, "human_rating"}, {4, "mood"}, {5, "user_id"}, {5, "distance"}};
    CHECK(got == want);
  }
}

TEST_CASE("lenient import keeps the valid lines") {
  std::istringstream in(
      R"({"interaction_id":"a","user_id":"u","target_id":"t","ordinal":1,"timestamp_ms":0,"positive_prompt":"p","negative_prompt":"","score":50})"
      "\n\n"
      R"({"interaction_id":"b","user_id":"u","target_id":"t","ordinal":1,"timestamp_ms":0,"positive_prompt":"p","negative_prompt":"","score":"high"})"
      "\n");
  const auto r = import_dataset(in, ImportMode::lenient);
  CHECK(r.records.size() == 1);
  REQUIRE(r.issues.size() == 1);
  CHECK(r.issues[0].line == 3);
  CHECK(r.issues[0].field == "score");
  CHECK(describe(r.issues[0]).find("line 3") == 0);
}

TEST_CASE("hand-counted aggregates") {
  const auto rs = crafted();
  const auto total = aggregate(rs).value();
  CHECK(total.n_players == 3);
  CHECK(total.n_targets == 2);
  CHECK(total.n_interactions == 7);
  // pairs: (u1,t1) (u2,t1) (u2,t2) (u3,t2)
  CHECK(total.avg_prompts_per_player_target == 7.0 / 4.0);
  CHECK(total.avg_score == doctest::Approx(420.0 / 7.0).epsilon(1e-15));
  // durations 10,20,5,8,12,30 s -> median 11 s
  CHECK(total.median_duration_ms.value() == 11000.0);

  const auto famous = aggregate(rs, Category::famous_person).value();
  CHECK(famous.n_players == 2);
  CHECK(famous.n_targets == 1);
  CHECK(famous.n_interactions == 3);
  CHECK(famous.avg_prompts_per_player_target == 1.5);
  CHECK(famous.avg_score == doctest::Approx(170.0 / 3.0).epsilon(1e-15));

  const auto art = aggregate(rs, Category::art).value();
  CHECK(art.n_players == 2);
  CHECK(art.n_interactions == 4);
  CHECK(art.avg_prompts_per_player_target == 2.0);
  CHECK(art.avg_score == 62.5);
  CHECK(art.median_duration_ms.value() == 12000.0);

  CHECK_FALSE(aggregate(rs, Category::landmark).has_value());
}

TEST_CASE("word counts") {
  CHECK(word_count("") == 0);
  CHECK(word_count("  two   words ") == 2);
  CHECK(word_count("tab\tand\nnewline") == 3);
  const auto s = word_count_stats(crafted());
  // positive: 5+3+1+5+2+5+1 = 22, negative: 0+1+0+2+0+0+0 = 3
  CHECK(s.mean_positive_words == doctest::Approx(22.0 / 7.0).epsilon(1e-15));
  CHECK(s.mean_negative_words == doctest::Approx(3.0 / 7.0).epsilon(1e-15));
  CHECK(s.queries_per_target.at("t1") == 3);
  CHECK(s.queries_per_target.at("t2") == 4);
  CHECK(s.mean_queries_per_target == 3.5);
}

TEST_CASE("csv output") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  std::ostringstream out;
  write_aggregate_csv_header(out);
  write_aggregate_csv_row(out, "total", aggregate(crafted()));
  write_aggregate_csv_row(out, "landmark", aggregate(crafted(), Category::landmark));
  CHECK(out.str() ==
        "group,n_players,n_targets,n_interactions,avg_prompts,avg_score,median_duration_s\n"
        "total,3,2,7,1.75,60.00,11.00\n"
        "landmark,0,0,0,,,\n");
}

TEST_CASE("dataset files") {
  TempDir dir("dataset");
  const auto rs = crafted();
  export_dataset(dir / "d.jsonl", rs);
  CHECK(import_dataset(dir / "d.jsonl").records == rs);
  CHECK_THROWS_AS(import_dataset(dir / "missing.jsonl"), FormatError);
}
