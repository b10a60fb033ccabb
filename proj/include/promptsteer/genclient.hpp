#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace promptsteer {

inline constexpr int kPlaySteps = 20;
inline constexpr int kTargetCurationSteps = 50;
inline constexpr std::size_t kMaxPromptChars = 2000;

struct GenerationRequest {
  std::string positive_prompt;
  std::string negative_prompt;
  std::int64_t seed = 0;
  std::string model_id;
  int steps = kPlaySteps;
  int width = 512;
  int height = 512;

  friend bool operator==(const GenerationRequest&, const GenerationRequest&) = default;
};

bool is_valid_utf8(std::string_view s);
std::size_t utf8_length(std::string_view s);

// Throws ValidationError for malformed UTF-8, over-long prompts, or bad sizes.
void validate_request(const GenerationRequest& req);

// SHA-256 over a canonical serialization; equal iff requests are byte-identical.
std::string request_key(const GenerationRequest& req);

struct GenerationResult {
  std::string image_ref;
  double latency_ms = 0.0;
  std::string backend_id;
  bool from_cache = false;
};

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string id() const = 0;
  // Encoded image bytes. Throws TransportError on retryable failure.
  virtual std::string generate(const GenerationRequest& req) = 0;
};

// Raw RGB pixels of the mock backend: SHA-256 counter-mode expansion keyed by
// the backend key over (positive, negative, seed).
std::string mock_pixel_bytes(std::string_view key, std::string_view positive,
                             std::string_view negative, std::int64_t seed, int width = 512,
                             int height = 512);

// PNG text keys written by the mock backend.
inline constexpr const char* kMockPromptKey = "Prompt";
inline constexpr const char* kMockNegativeKey = "NegativePrompt";
inline constexpr const char* kMockSeedKey = "Seed";

class MockGenerationBackend : public GenerationBackend {
 public:
  explicit MockGenerationBackend(std::string key = "promptsteer-mock");

  std::string id() const override { return "mock"; }
  std::string generate(const GenerationRequest& req) override;

  // The next n calls throw TransportError.
  void fail_next(int n);
  std::size_t calls() const;
  const std::string& key() const { return key_; }

 private:
  std::string key_;
  mutable std::mutex mutex_;
  int pending_failures_ = 0;
  std::size_t calls_ = 0;
};

// Content-addressed image store; refs are SHA-256 hex of the bytes. Memory-only
// when constructed without a directory.
class ImageStore {
 public:
  ImageStore() = default;
  explicit ImageStore(std::filesystem::path directory);

  std::string put(std::string bytes);
  std::optional<std::string> get(const std::string& ref) const;
  bool contains(const std::string& ref) const;
  const std::filesystem::path& directory() const { return directory_; }

 private:
  std::filesystem::path directory_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::string> memory_;
};

struct GatewayOptions {
  int max_retries = 2;
  std::chrono::milliseconds retry_backoff{100};
  std::size_t max_in_flight = 2;
};

// Caching, retrying front for one backend. Prompts pass through untouched.
class GenerationGateway {
 public:
  GenerationGateway(std::shared_ptr<GenerationBackend> backend, std::shared_ptr<ImageStore> store,
                    GatewayOptions options = {});

  GenerationResult generate(const GenerationRequest& req);

  std::shared_ptr<ImageStore> store() const { return store_; }
  const std::string& backend_id() const { return backend_id_; }
  std::size_t cache_size() const;
  std::size_t backend_calls() const;

 private:
  std::string call_backend(const GenerationRequest& req);
  void acquire_slot();
  void release_slot();

  std::shared_ptr<GenerationBackend> backend_;
  std::shared_ptr<ImageStore> store_;
  GatewayOptions options_;
  std::string backend_id_;

  mutable std::mutex cache_mutex_;
  std::map<std::string, std::string> cache_;  // request key -> image ref
  std::map<std::string, std::shared_future<std::string>> in_flight_;
  std::size_t backend_calls_ = 0;

  // FIFO admission: tickets are served strictly in arrival order.
  std::mutex slot_mutex_;
  std::condition_variable slot_cv_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t admit_ticket_ = 0;
  std::size_t active_ = 0;
};

}  // namespace promptsteer
