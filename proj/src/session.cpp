#include "promptsteer/session.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "promptsteer/errors.hpp"

namespace promptsteer {

namespace {

constexpr const char* kSessionLog = "sessions.jsonl";
constexpr const char* kInteractionLog = "interactions.jsonl";
constexpr const char* kRatingLog = "ratings.jsonl";

template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      // A torn final line from a crash mid-append is the only tolerated damage.
      if (in.peek() == std::char_traits<char>::eof()) return;
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": corrupt log line");
    }
    fn(j, line_no);
  }
}

}  // namespace

std::int64_t SystemClock::now_ms() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::int64_t ManualClock::now_ms() const {
  std::lock_guard lock(mutex_);
  return now_;
}

void ManualClock::advance(std::int64_t ms) {
  std::lock_guard lock(mutex_);
  now_ += ms;
}

std::string_view to_string(SessionStatus s) {
  return s == SessionStatus::active ? "active" : "finished";
}

ScoredGeneration score_prompt(const TargetSpec& target, const EmbeddingVector& target_embedding,
                              const std::string& positive, const std::string& negative,
                              GenerationGateway& gateway, EmbeddingProvider& embedder,
                              const ScoreCalibration& calibration, int steps) {
  GenerationRequest req;
  req.positive_prompt = positive;
  req.negative_prompt = negative;
  req.seed = target.seed;
  req.model_id = target.model_id;
  req.steps = steps;
  const GenerationResult gen = gateway.generate(req);
  const auto bytes = gateway.store()->get(gen.image_ref);
  if (!bytes) throw TransportError("generated image " + gen.image_ref + " missing from store");
  const EmbeddingVector emb = embedder.embed_image(*bytes);
  ScoredGeneration out;
  out.image_ref = gen.image_ref;
  out.distance = normalized_distance(emb, target_embedding);
  out.score = calibration.score(out.distance, target.target_id);
  return out;
}

AppendLog::AppendLog(std::filesystem::path path) { open(std::move(path)); }

void AppendLog::open(std::filesystem::path path) {
  std::lock_guard lock(mutex_);
  if (fd_ >= 0) ::close(fd_);
  path_ = std::move(path);
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw FormatError("cannot open log " + path_.string() + ": " + std::strerror(errno));
}

AppendLog::~AppendLog() {
  if (fd_ >= 0) ::close(fd_);
}

void AppendLog::append(const std::string& line) {
  if (fd_ < 0) return;
  std::string buf = line;
  buf.push_back('\n');
  std::lock_guard lock(mutex_);
  std::size_t written = 0;
  while (written < buf.size()) {
    const ssize_t n = ::write(fd_, buf.data() + written, buf.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw FormatError("write to " + path_.string() + " failed: " + std::strerror(errno));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd_) != 0) {
    throw FormatError("fsync " + path_.string() + " failed: " + std::strerror(errno));
  }
}

SessionService::SessionService(std::vector<TargetSpec> catalog, ScoreCalibration calibration,
                               std::shared_ptr<GenerationGateway> gateway,
                               std::shared_ptr<EmbeddingProvider> embedder,
                               std::filesystem::path store_dir, std::shared_ptr<Clock> clock,
                               std::uint64_t id_seed)
    : catalog_(std::move(catalog)),
      calibration_(std::move(calibration)),
      gateway_(std::move(gateway)),
      embedder_(std::move(embedder)),
      clock_(clock ? std::move(clock) : std::make_shared<SystemClock>()),
      store_dir_(std::move(store_dir)),
      id_rng_(id_seed != 0 ? id_seed : std::random_device{}()) {
  if (!gateway_ || !embedder_) throw std::invalid_argument("session service needs gateway and embedder");
  for (std::size_t i = 0; i < catalog_.size(); ++i) {
    const auto& t = catalog_[i];
    if (!target_index_.emplace(t.target_id, i).second) {
      throw ValidationError("duplicate target id " + t.target_id);
    }
    if (!calibration_.has_target(t.target_id)) calibration_.set_target(t.target_id, t.calibration);
  }
  if (!store_dir_.empty()) {
    std::filesystem::create_directories(store_dir_);
    replay_store();
    session_log_.open(store_dir_ / kSessionLog);
    interaction_log_.open(store_dir_ / kInteractionLog);
    rating_log_.open(store_dir_ / kRatingLog);
  }
}

void SessionService::replay_store() {
  for_each_json_line(store_dir_ / kSessionLog, [&](const nlohmann::json& j, std::size_t) {
    const auto event = j.at("event").get<std::string>();
    const auto id = j.at("session_id").get<std::string>();
    if (event == "start") {
      auto st = std::make_unique<SessionState>();
      st->session.session_id = id;
      st->session.user_id = j.at("user_id").get<std::string>();
      st->session.target_id = j.at("target_id").get<std::string>();
      st->session.created_at_ms = j.at("created_at_ms").get<std::int64_t>();
      active_by_pair_[{st->session.user_id, st->session.target_id}] = id;
      sessions_[id] = std::move(st);
    } else if (event == "finish") {
      auto& s = sessions_.at(id)->session;
      s.status = SessionStatus::finished;
      active_by_pair_.erase({s.user_id, s.target_id});
    }
  });
  std::vector<ImportIssue> issues;
  for_each_json_line(store_dir_ / kInteractionLog, [&](const nlohmann::json& j, std::size_t line) {
    auto rec = record_from_json(j, line, issues);
    if (!rec) throw DatasetValidationError(issues);
    auto it = sessions_.find(rec->session_id);
    if (it == sessions_.end()) {
      throw FormatError("interaction " + rec->interaction_id + " references unknown session");
    }
    it->second->interaction_ids.push_back(rec->interaction_id);
    interaction_order_.push_back(rec->interaction_id);
    const std::string id = rec->interaction_id;
    interactions_[id] = Interaction{std::move(*rec), std::nullopt};
  });
  for_each_json_line(store_dir_ / kRatingLog, [&](const nlohmann::json& j, std::size_t) {
    auto& inter = interactions_.at(j.at("interaction_id").get<std::string>());
    inter.record.human_rating = j.at("rating").get<int>();
    inter.rated_at_ms = j.at("rated_at_ms").get<std::int64_t>();
  });
}

std::string SessionService::new_session_id() {
  std::lock_guard lock(id_mutex_);
  std::ostringstream ss;
  ss << std::hex << std::setfill('0') << std::setw(16) << id_rng_() << std::setw(16) << id_rng_();
  return ss.str();
}

const TargetSpec& SessionService::target(const std::string& target_id) const {
  auto it = target_index_.find(target_id);
  if (it == target_index_.end()) throw NotFoundError("unknown target " + target_id);
  return catalog_[it->second];
}

std::vector<TargetSpec> SessionService::active_targets(const std::string& date) const {
  std::vector<TargetSpec> out;
  for (const auto& t : catalog_) {
    if (t.active_date.empty() || date.empty() || t.active_date <= date) out.push_back(t);
  }
  return out;
}

std::optional<std::string> SessionService::image(const std::string& image_ref) const {
  return gateway_->store()->get(image_ref);
}

const EmbeddingVector& SessionService::target_embedding(const TargetSpec& target) {
  std::lock_guard lock(embed_mutex_);
  if (auto it = target_embeddings_.find(target.target_id); it != target_embeddings_.end()) {
    return it->second;
  }
  const auto bytes = gateway_->store()->get(target.target_image_ref);
  if (!bytes) throw NotFoundError("target image " + target.target_image_ref + " not in store");
  return target_embeddings_.emplace(target.target_id, embedder_->embed_image(*bytes)).first->second;
}

SessionService::SessionState& SessionService::state(const std::string& session_id) const {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("unknown session " + session_id);
  return *it->second;
}

Session SessionService::start_session(const std::string& user_id, const std::string& target_id) {
  target(target_id);
  if (user_id.empty()) throw ValidationError("user_id must not be empty");
  std::unique_lock lock(state_mutex_);
  if (auto it = active_by_pair_.find({user_id, target_id}); it != active_by_pair_.end()) {
    return state(it->second).session;
  }
  auto st = std::make_unique<SessionState>();
  st->session.session_id = new_session_id();
  st->session.user_id = user_id;
  st->session.target_id = target_id;
  st->session.created_at_ms = clock_->now_ms();
  nlohmann::ordered_json j;
  j["event"] = "start";
  j["session_id"] = st->session.session_id;
  j["user_id"] = user_id;
  j["target_id"] = target_id;
  j["created_at_ms"] = st->session.created_at_ms;
  session_log_.append(j.dump());
  Session out = st->session;
  active_by_pair_[{user_id, target_id}] = out.session_id;
  sessions_[out.session_id] = std::move(st);
  return out;
}

Session SessionService::finish_session(const std::string& session_id) {
  SessionState* st = nullptr;
  {
    std::shared_lock lock(state_mutex_);
    st = &state(session_id);
  }
  std::lock_guard submit(st->submit_mutex);
  std::unique_lock lock(state_mutex_);
  if (st->session.status == SessionStatus::finished) return st->session;
  nlohmann::ordered_json j;
  j["event"] = "finish";
  j["session_id"] = session_id;
  j["at_ms"] = clock_->now_ms();
  session_log_.append(j.dump());
  st->session.status = SessionStatus::finished;
  active_by_pair_.erase({st->session.user_id, st->session.target_id});
  return st->session;
}

Session SessionService::session(const std::string& session_id) const {
  std::shared_lock lock(state_mutex_);
  return state(session_id).session;
}

SubmitResult SessionService::submit_prompt(const std::string& session_id,
                                           const std::string& positive,
                                           const std::string& negative) {
  SessionState* st = nullptr;
  {
    std::shared_lock lock(state_mutex_);
    st = &state(session_id);
  }
  // Sessions are never erased, so the pointer stays valid.
  std::lock_guard submit(st->submit_mutex);

  Session session;
  std::int64_t previous_ms = 0;
  std::int64_t ordinal = 0;
  {
    std::shared_lock lock(state_mutex_);
    session = st->session;
    ordinal = static_cast<std::int64_t>(st->interaction_ids.size()) + 1;
    previous_ms = st->interaction_ids.empty()
                      ? session.created_at_ms
                      : interactions_.at(st->interaction_ids.back()).record.timestamp_ms;
  }
  if (session.status != SessionStatus::active) {
    throw StateError("session " + session_id + " is finished");
  }

  const TargetSpec& t = target(session.target_id);
  const ScoredGeneration scored =
      score_prompt(t, target_embedding(t), positive, negative, *gateway_, *embedder_, calibration_);

  DatasetRecord r;
  r.interaction_id = session_id + "-" + std::to_string(ordinal);
  r.session_id = session_id;
  r.user_id = session.user_id;
  r.target_id = t.target_id;
  r.model_id = t.model_id;
  r.categories = t.categories;
  r.ordinal = ordinal;
  r.timestamp_ms = std::max(clock_->now_ms(), previous_ms);
  r.positive_prompt = positive;
  r.negative_prompt = negative;
  r.image_ref = scored.image_ref;
  r.score = scored.score;
  r.distance = scored.distance;
  r.duration_ms = r.timestamp_ms - previous_ms;

  interaction_log_.append(to_jsonl_line(r));

  SubmitResult result{r.interaction_id, r.image_ref, r.score, r.ordinal};
  std::unique_lock lock(state_mutex_);
  st->interaction_ids.push_back(r.interaction_id);
  interaction_order_.push_back(r.interaction_id);
  const std::string id = r.interaction_id;
  interactions_[id] = Interaction{std::move(r), std::nullopt};
  return result;
}

Interaction SessionService::submit_rating(const std::string& interaction_id, int rating) {
  if (rating < 1 || rating > 10) {
    throw ValidationError("rating must be an integer in [1, 10], got " + std::to_string(rating));
  }
  std::unique_lock lock(state_mutex_);
  auto it = interactions_.find(interaction_id);
  if (it == interactions_.end()) throw NotFoundError("unknown interaction " + interaction_id);
  const std::int64_t now = clock_->now_ms();
  nlohmann::ordered_json j;
  j["interaction_id"] = interaction_id;
  j["rating"] = rating;
  j["rated_at_ms"] = now;
  rating_log_.append(j.dump());
  it->second.record.human_rating = rating;
  it->second.rated_at_ms = now;
  return it->second;
}

Interaction SessionService::interaction(const std::string& interaction_id) const {
  std::shared_lock lock(state_mutex_);
  auto it = interactions_.find(interaction_id);
  if (it == interactions_.end()) throw NotFoundError("unknown interaction " + interaction_id);
  return it->second;
}

std::vector<Interaction> SessionService::history(const std::string& session_id) const {
  std::shared_lock lock(state_mutex_);
  const SessionState& st = state(session_id);
  std::vector<Interaction> out;
  out.reserve(st.interaction_ids.size());
  for (const auto& id : st.interaction_ids) out.push_back(interactions_.at(id));
  return out;
}

std::vector<DatasetRecord> SessionService::export_records() const {
  std::shared_lock lock(state_mutex_);
  std::vector<DatasetRecord> out;
  out.reserve(interaction_order_.size());
  for (const auto& id : interaction_order_) out.push_back(interactions_.at(id).record);
  return out;
}

std::vector<ReplayMismatch> verify_replay(std::span<const DatasetRecord> records,
                                          const std::vector<TargetSpec>& catalog,
                                          const ScoreCalibration& calibration,
                                          GenerationGateway& gateway, EmbeddingProvider& embedder) {
  std::map<std::string, const TargetSpec*> by_id;
  for (const auto& t : catalog) by_id[t.target_id] = &t;
  std::map<std::string, EmbeddingVector> target_embeddings;
  std::vector<ReplayMismatch> mismatches;
  for (const auto& r : records) {
    auto it = by_id.find(r.target_id);
    if (it == by_id.end()) throw NotFoundError("replay: unknown target " + r.target_id);
    const TargetSpec& t = *it->second;
    auto emb = target_embeddings.find(t.target_id);
    if (emb == target_embeddings.end()) {
      const auto bytes = gateway.store()->get(t.target_image_ref);
      if (!bytes) throw NotFoundError("replay: target image missing for " + t.target_id);
      emb = target_embeddings.emplace(t.target_id, embedder.embed_image(*bytes)).first;
    }
    const ScoredGeneration s =
        score_prompt(t, emb->second, r.positive_prompt, r.negative_prompt, gateway, embedder, calibration);
    const bool distance_matches = !r.distance || *r.distance == s.distance;
    if (s.score != r.score || !distance_matches || s.image_ref != r.image_ref) {
      mismatches.push_back({r.interaction_id, r.score, s.score, r.distance, s.distance});
    }
  }
  return mismatches;
}

}  // namespace promptsteer
