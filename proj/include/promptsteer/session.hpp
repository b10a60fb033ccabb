#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "promptsteer/catalog.hpp"
#include "promptsteer/dataset.hpp"
#include "promptsteer/embedding.hpp"
#include "promptsteer/genclient.hpp"
#include "promptsteer/scoring.hpp"

namespace promptsteer {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() const = 0;
};

class SystemClock : public Clock {
 public:
  std::int64_t now_ms() const override;
};

class ManualClock : public Clock {
 public:
  explicit ManualClock(std::int64_t start_ms = 0) : now_(start_ms) {}
  std::int64_t now_ms() const override;
  void advance(std::int64_t ms);

 private:
  mutable std::mutex mutex_;
  std::int64_t now_;
};

enum class SessionStatus { active, finished };

struct Session {
  std::string session_id;
  std::string user_id;
  std::string target_id;
  std::int64_t created_at_ms = 0;
  SessionStatus status = SessionStatus::active;
};

std::string_view to_string(SessionStatus s);

// A recorded submission. The dataset record is immutable once written; only
// the rating (and its audit timestamp) may change.
struct Interaction {
  DatasetRecord record;
  std::optional<std::int64_t> rated_at_ms;
};

struct SubmitResult {
  std::string interaction_id;
  std::string image_ref;
  int score = 0;
  std::int64_t ordinal = 0;
};

struct ScoredGeneration {
  std::string image_ref;
  double distance = 0.0;
  int score = 0;
};

// generate with the target's fixed seed -> embed -> distance -> calibrated score.
ScoredGeneration score_prompt(const TargetSpec& target, const EmbeddingVector& target_embedding,
                              const std::string& positive, const std::string& negative,
                              GenerationGateway& gateway, EmbeddingProvider& embedder,
                              const ScoreCalibration& calibration, int steps = kPlaySteps);

// Append-only JSONL file; each append is flushed and fsync'd before returning.
class AppendLog {
 public:
  AppendLog() = default;  // discards writes
  explicit AppendLog(std::filesystem::path path);
  ~AppendLog();
  AppendLog(const AppendLog&) = delete;
  AppendLog& operator=(const AppendLog&) = delete;

  void open(std::filesystem::path path);
  void append(const std::string& line);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  std::mutex mutex_;
};

class SessionService {
 public:
  // An empty store_dir keeps everything in memory. Existing logs in store_dir
  // are replayed on construction.
  SessionService(std::vector<TargetSpec> catalog, ScoreCalibration calibration,
                 std::shared_ptr<GenerationGateway> gateway,
                 std::shared_ptr<EmbeddingProvider> embedder, std::filesystem::path store_dir = {},
                 std::shared_ptr<Clock> clock = nullptr, std::uint64_t id_seed = 0);

  // Idempotent: returns the existing active session for (user, target).
  Session start_session(const std::string& user_id, const std::string& target_id);
  Session finish_session(const std::string& session_id);
  Session session(const std::string& session_id) const;

  // Serialized per session. The interaction is durable before this returns.
  SubmitResult submit_prompt(const std::string& session_id, const std::string& positive,
                             const std::string& negative);

  Interaction submit_rating(const std::string& interaction_id, int rating);
  Interaction interaction(const std::string& interaction_id) const;
  std::vector<Interaction> history(const std::string& session_id) const;

  const std::vector<TargetSpec>& targets() const { return catalog_; }
  // Targets whose active_date is empty or <= date (ISO YYYY-MM-DD compares lexically).
  std::vector<TargetSpec> active_targets(const std::string& date) const;
  const TargetSpec& target(const std::string& target_id) const;
  std::optional<std::string> image(const std::string& image_ref) const;
  const ScoreCalibration& calibration() const { return calibration_; }

  // Every interaction in log order, with the latest ratings applied.
  std::vector<DatasetRecord> export_records() const;

 private:
  struct SessionState {
    Session session;
    std::vector<std::string> interaction_ids;
    std::mutex submit_mutex;
  };

  SessionState& state(const std::string& session_id) const;
  const EmbeddingVector& target_embedding(const TargetSpec& target);
  std::string new_session_id();
  void replay_store();

  std::vector<TargetSpec> catalog_;
  std::map<std::string, std::size_t> target_index_;
  ScoreCalibration calibration_;
  std::shared_ptr<GenerationGateway> gateway_;
  std::shared_ptr<EmbeddingProvider> embedder_;
  std::shared_ptr<Clock> clock_;
  std::filesystem::path store_dir_;

  AppendLog session_log_;
  AppendLog interaction_log_;
  AppendLog rating_log_;

  mutable std::shared_mutex state_mutex_;
  std::map<std::string, std::unique_ptr<SessionState>> sessions_;
  std::map<std::pair<std::string, std::string>, std::string> active_by_pair_;
  std::map<std::string, Interaction> interactions_;
  std::vector<std::string> interaction_order_;

  std::mutex embed_mutex_;
  std::map<std::string, EmbeddingVector> target_embeddings_;

  std::mutex id_mutex_;
  std::mt19937_64 id_rng_;
};

struct ReplayMismatch {
  std::string interaction_id;
  int stored_score = 0;
  int recomputed_score = 0;
  std::optional<double> stored_distance;
  double recomputed_distance = 0.0;
};

// Regenerates and rescores every record; returns the records that differ.
std::vector<ReplayMismatch> verify_replay(std::span<const DatasetRecord> records,
                                          const std::vector<TargetSpec>& catalog,
                                          const ScoreCalibration& calibration,
                                          GenerationGateway& gateway, EmbeddingProvider& embedder);

}  // namespace promptsteer
