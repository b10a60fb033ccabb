#include "promptsteer/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <utility>

#include "promptsteer/curation.hpp"

namespace promptsteer {

namespace {

constexpr const char* kFields[] = {
    "interaction_id", "session_id",      "user_id",         "target_id", "model_id",
    "categories",     "ordinal",         "timestamp_ms",    "positive_prompt",
    "negative_prompt", "image_ref",      "score",           "distance",  "duration_ms",
    "human_rating",
};

nlohmann::ordered_json optional_json(const auto& value) {
  if (!value) return nullptr;
  return *value;
}

class FieldReader {
 public:
  FieldReader(const nlohmann::json& j, std::size_t line, std::vector<ImportIssue>& issues)
      : j_(j), line_(line), issues_(issues) {}

  bool ok() const { return ok_; }

  void fail(const std::string& field, const std::string& message) {
    issues_.push_back({line_, field, message});
    ok_ = false;
  }

  std::string string(const char* field, bool required = true) {
    auto it = j_.find(field);
    if (it == j_.end() || it->is_null()) {
      if (required) fail(field, "missing required field");
      return {};
    }
    if (!it->is_string()) {
      fail(field, "must be a string");
      return {};
    }
    return it->get<std::string>();
  }

  std::optional<std::int64_t> integer(const char* field, bool required, std::int64_t lo,
                                      std::int64_t hi) {
    auto it = j_.find(field);
    if (it == j_.end() || it->is_null()) {
      if (required) fail(field, "missing required field");
      return std::nullopt;
    }
    if (!it->is_number_integer()) {
      fail(field, "must be an integer");
      return std::nullopt;
    }
    const auto v = it->get<std::int64_t>();
    if (v < lo || v > hi) {
      fail(field, "out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return std::nullopt;
    }
    return v;
  }

  std::optional<double> number(const char* field) {
    auto it = j_.find(field);
    if (it == j_.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) {
      fail(field, "must be a number");
      return std::nullopt;
    }
    const double v = it->get<double>();
    if (!(v >= 0.0)) {
      fail(field, "must be nonnegative");
      return std::nullopt;
    }
    return v;
  }

 private:
  const nlohmann::json& j_;
  std::size_t line_;
  std::vector<ImportIssue>& issues_;
  bool ok_ = true;
};

constexpr std::int64_t kMaxInt = std::numeric_limits<std::int64_t>::max();

}  // namespace

nlohmann::ordered_json to_json(const DatasetRecord& r) {
  nlohmann::ordered_json j;
  j["interaction_id"] = r.interaction_id;
  j["session_id"] = r.session_id;
  j["user_id"] = r.user_id;
  j["target_id"] = r.target_id;
  j["model_id"] = r.model_id;
  auto cats = nlohmann::ordered_json::array();
  for (Category c : r.categories) cats.push_back(to_string(c));
  j["categories"] = std::move(cats);
  j["ordinal"] = r.ordinal;
  j["timestamp_ms"] = r.timestamp_ms;
  j["positive_prompt"] = r.positive_prompt;
  j["negative_prompt"] = r.negative_prompt;
  j["image_ref"] = r.image_ref;
  j["score"] = r.score;
  j["distance"] = optional_json(r.distance);
  j["duration_ms"] = optional_json(r.duration_ms);
  j["human_rating"] = optional_json(r.human_rating);
  return j;
}

std::string to_jsonl_line(const DatasetRecord& r) { return to_json(r).dump(); }

std::string describe(const ImportIssue& issue) {
  std::string out = "line " + std::to_string(issue.line);
  if (!issue.field.empty()) out += ", field '" + issue.field + "'";
  return out + ": " + issue.message;
}

DatasetValidationError::DatasetValidationError(std::vector<ImportIssue> issues)
    : ValidationError([&] {
        std::string msg = "dataset validation failed (" + std::to_string(issues.size()) + " issue";
        msg += issues.size() == 1 ? ")" : "s)";
        for (std::size_t i = 0; i < issues.size() && i < 20; ++i) msg += "\n  " + describe(issues[i]);
        return msg;
      }()),
      issues_(std::move(issues)) {}

std::optional<DatasetRecord> record_from_json(const nlohmann::json& j, std::size_t line,
                                              std::vector<ImportIssue>& issues) {
  if (!j.is_object()) {
    issues.push_back({line, "", "record must be a JSON object"});
    return std::nullopt;
  }
  FieldReader f(j, line, issues);
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(std::begin(kFields), std::end(kFields),
                     [&](const char* k) { return key == k; }) == std::end(kFields)) {
      f.fail(key, "unknown field");
    }
  }

  DatasetRecord r;
  r.interaction_id = f.string("interaction_id");
  r.session_id = f.string("session_id", false);
  r.user_id = f.string("user_id");
  r.target_id = f.string("target_id");
  r.model_id = f.string("model_id", false);
  if (auto it = j.find("categories"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) {
      f.fail("categories", "must be an array of strings");
    } else {
      for (const auto& c : *it) {
        auto cat = c.is_string() ? category_from_string(c.get<std::string>()) : std::nullopt;
        if (!cat) {
          f.fail("categories", "unknown category " + c.dump());
        } else {
          r.categories.insert(*cat);
        }
      }
    }
  }
  if (auto v = f.integer("ordinal", true, 1, kMaxInt)) r.ordinal = *v;
  if (auto v = f.integer("timestamp_ms", true, 0, kMaxInt)) r.timestamp_ms = *v;
  r.positive_prompt = f.string("positive_prompt");
  r.negative_prompt = f.string("negative_prompt");
  r.image_ref = f.string("image_ref", false);
  if (auto v = f.integer("score", true, 0, 100)) r.score = static_cast<int>(*v);
  r.distance = f.number("distance");
  r.duration_ms = f.integer("duration_ms", false, 0, kMaxInt);
  if (auto v = f.integer("human_rating", false, 1, 10)) r.human_rating = static_cast<int>(*v);

  if (!f.ok()) return std::nullopt;
  return r;
}

ImportResult import_dataset(std::istream& in, ImportMode mode) {
  ImportResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      result.issues.push_back({line_no, "", std::string("invalid JSON: ") + e.what()});
      continue;
    }
    if (auto r = record_from_json(j, line_no, result.issues)) result.records.push_back(std::move(*r));
  }
  if (mode == ImportMode::strict && !result.issues.empty()) {
    throw DatasetValidationError(std::move(result.issues));
  }
  return result;
}

ImportResult import_dataset(const std::filesystem::path& path, ImportMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read dataset " + path.string());
  return import_dataset(in, mode);
}

void export_dataset(std::ostream& out, std::span<const DatasetRecord> records) {
  for (const auto& r : records) out << to_jsonl_line(r) << '\n';
}

void export_dataset(const std::filesystem::path& path, std::span<const DatasetRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write dataset " + path.string());
  export_dataset(out, records);
}

std::optional<GroupAggregate> aggregate(std::span<const DatasetRecord> records,
                                        std::optional<Category> group) {
  std::set<std::string> players;
  std::set<std::string> targets;
  std::set<std::pair<std::string, std::string>> pairs;
  std::vector<double> durations;
  double score_sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (group && !r.categories.contains(*group)) continue;
    ++n;
    players.insert(r.user_id);
    targets.insert(r.target_id);
    pairs.emplace(r.user_id, r.target_id);
    score_sum += r.score;
    if (r.duration_ms) durations.push_back(static_cast<double>(*r.duration_ms));
  }
  if (n == 0) return std::nullopt;
  GroupAggregate agg;
  agg.n_players = players.size();
  agg.n_targets = targets.size();
  agg.n_interactions = n;
  agg.avg_prompts_per_player_target = static_cast<double>(n) / static_cast<double>(pairs.size());
  agg.avg_score = score_sum / static_cast<double>(n);
  if (!durations.empty()) agg.median_duration_ms = median(std::move(durations));
  return agg;
}

std::size_t word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (std::isspace(c) != 0) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

WordCountStats word_count_stats(std::span<const DatasetRecord> records) {
  WordCountStats s;
  if (records.empty()) return s;
  double pos = 0.0, neg = 0.0;
  for (const auto& r : records) {
    pos += static_cast<double>(word_count(r.positive_prompt));
    neg += static_cast<double>(word_count(r.negative_prompt));
    ++s.queries_per_target[r.target_id];
  }
  const double n = static_cast<double>(records.size());
  s.mean_positive_words = pos / n;
  s.mean_negative_words = neg / n;
  s.mean_queries_per_target = n / static_cast<double>(s.queries_per_target.size());
  return s;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void write_queries_per_target_csv(std::ostream& out, const WordCountStats& stats) {
  out << "target_id,queries\n";
  for (const auto& [target, count] : stats.queries_per_target) {
    out << csv_field(target) << ',' << count << '\n';
  }
}

void write_word_counts_csv(std::ostream& out, std::span<const DatasetRecord> records) {
  out << "interaction_id,target_id,positive_words,negative_words\n";
  for (const auto& r : records) {
    out << csv_field(r.interaction_id) << ',' << csv_field(r.target_id) << ','
        << word_count(r.positive_prompt) << ',' << word_count(r.negative_prompt) << '\n';
  }
}

void write_aggregate_csv_header(std::ostream& out) {
  out << "group,n_players,n_targets,n_interactions,avg_prompts,avg_score,median_duration_s\n";
}

void write_aggregate_csv_row(std::ostream& out, std::string_view group_name,
                             const std::optional<GroupAggregate>& agg) {
  out << csv_field(group_name) << ',';
  if (!agg) {
    out << "0,0,0,,,\n";
    return;
  }
  std::ostringstream row;
  row << std::fixed << std::setprecision(2) << agg->n_players << ',' << agg->n_targets << ','
      << agg->n_interactions << ',' << agg->avg_prompts_per_player_target << ',' << agg->avg_score
      << ',';
  if (agg->median_duration_ms) row << *agg->median_duration_ms / 1000.0;
  out << row.str() << '\n';
}

}  // namespace promptsteer
