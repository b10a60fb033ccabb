#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptsteer/catalog.hpp"
#include "promptsteer/errors.hpp"

namespace promptsteer {

// One line of the interaction dataset (schema v1). Field order here is the
// canonical serialization order.
struct DatasetRecord {
  std::string interaction_id;
  std::string session_id;
  std::string user_id;
  std::string target_id;
  std::string model_id;
  std::set<Category> categories;
  std::int64_t ordinal = 1;
  std::int64_t timestamp_ms = 0;
  std::string positive_prompt;
  std::string negative_prompt;
  std::string image_ref;
  int score = 0;
  std::optional<double> distance;
  std::optional<std::int64_t> duration_ms;
  std::optional<int> human_rating;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

nlohmann::ordered_json to_json(const DatasetRecord& r);
std::string to_jsonl_line(const DatasetRecord& r);

struct ImportIssue {
  std::size_t line = 0;
  std::string field;  // empty for whole-line problems (bad JSON)
  std::string message;
};

std::string describe(const ImportIssue& issue);

class DatasetValidationError : public ValidationError {
 public:
  explicit DatasetValidationError(std::vector<ImportIssue> issues);
  const std::vector<ImportIssue>& issues() const { return issues_; }

 private:
  std::vector<ImportIssue> issues_;
};

// Parses one JSON object; appends problems to `issues` and returns nullopt if any.
std::optional<DatasetRecord> record_from_json(const nlohmann::json& j, std::size_t line,
                                              std::vector<ImportIssue>& issues);

enum class ImportMode { strict, lenient };

struct ImportResult {
  std::vector<DatasetRecord> records;
  std::vector<ImportIssue> issues;  // only populated in lenient mode
};

// Strict mode throws DatasetValidationError listing every bad line and field.
ImportResult import_dataset(std::istream& in, ImportMode mode = ImportMode::strict);
ImportResult import_dataset(const std::filesystem::path& path, ImportMode mode = ImportMode::strict);

void export_dataset(std::ostream& out, std::span<const DatasetRecord> records);
void export_dataset(const std::filesystem::path& path, std::span<const DatasetRecord> records);

struct GroupAggregate {
  std::size_t n_players = 0;
  std::size_t n_targets = 0;
  std::size_t n_interactions = 0;
  // interactions per distinct (user, target) pair
  double avg_prompts_per_player_target = 0.0;
  double avg_score = 0.0;
  std::optional<double> median_duration_ms;
};

// nullopt when no record falls in the group. No filter means the whole dataset.
std::optional<GroupAggregate> aggregate(std::span<const DatasetRecord> records,
                                        std::optional<Category> group = std::nullopt);

// Whitespace-delimited token count.
std::size_t word_count(std::string_view text);

struct WordCountStats {
  double mean_positive_words = 0.0;
  double mean_negative_words = 0.0;
  std::map<std::string, std::size_t> queries_per_target;
  double mean_queries_per_target = 0.0;
};

WordCountStats word_count_stats(std::span<const DatasetRecord> records);

std::string csv_field(std::string_view value);
void write_queries_per_target_csv(std::ostream& out, const WordCountStats& stats);
void write_word_counts_csv(std::ostream& out, std::span<const DatasetRecord> records);
void write_aggregate_csv_header(std::ostream& out);
void write_aggregate_csv_row(std::ostream& out, std::string_view group_name,
                             const std::optional<GroupAggregate>& agg);

}  // namespace promptsteer
