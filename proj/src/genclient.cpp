#include "promptsteer/genclient.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "promptsteer/errors.hpp"
#include "promptsteer/hashing.hpp"
#include "promptsteer/image.hpp"

namespace promptsteer {

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong encodings, surrogates, out-of-range.
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += extra + 1;
  }
  return true;
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

void validate_request(const GenerationRequest& req) {
  if (!is_valid_utf8(req.positive_prompt) || !is_valid_utf8(req.negative_prompt)) {
    throw ValidationError("prompt is not valid UTF-8");
  }
  if (utf8_length(req.positive_prompt) > kMaxPromptChars ||
      utf8_length(req.negative_prompt) > kMaxPromptChars) {
    throw ValidationError("prompt exceeds " + std::to_string(kMaxPromptChars) + " characters");
  }
  if (req.width != kImageSide || req.height != kImageSide) {
    throw ValidationError("generation size must be 512x512");
  }
  if (req.steps < 1) throw ValidationError("steps must be positive");
}

std::string request_key(const GenerationRequest& req) {
  nlohmann::ordered_json j;
  j["prompt"] = req.positive_prompt;
  j["negative_prompt"] = req.negative_prompt;
  j["seed"] = req.seed;
  j["model_id"] = req.model_id;
  j["steps"] = req.steps;
  j["width"] = req.width;
  j["height"] = req.height;
  return sha256_hex(j.dump());
}

std::string mock_pixel_bytes(std::string_view key, std::string_view positive,
                             std::string_view negative, std::int64_t seed, int width,
                             int height) {
  // Length-prefixed fields so ("a b", "") and ("a", "b") cannot collide.
  std::string message;
  for (std::string_view field : {positive, negative}) {
    message += std::to_string(field.size());
    message += ':';
    message.append(field);
  }
  message += std::to_string(seed);
  return keyed_expand(key, message, static_cast<std::size_t>(width) * height * 3);
}

MockGenerationBackend::MockGenerationBackend(std::string key) : key_(std::move(key)) {}

void MockGenerationBackend::fail_next(int n) {
  std::lock_guard lock(mutex_);
  pending_failures_ = n;
}

std::size_t MockGenerationBackend::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::string MockGenerationBackend::generate(const GenerationRequest& req) {
  {
    std::lock_guard lock(mutex_);
    ++calls_;
    if (pending_failures_ > 0) {
      --pending_failures_;
      throw TransportError("mock backend: injected failure");
    }
  }
  Image img;
  img.width = req.width;
  img.height = req.height;
  const std::string pixels =
      mock_pixel_bytes(key_, req.positive_prompt, req.negative_prompt, req.seed, req.width,
                       req.height);
  img.rgb.assign(pixels.begin(), pixels.end());
  return encode_png(img, {{kMockPromptKey, req.positive_prompt},
                          {kMockNegativeKey, req.negative_prompt},
                          {kMockSeedKey, std::to_string(req.seed)}});
}

ImageStore::ImageStore(std::filesystem::path directory) : directory_(std::move(directory)) {
  if (!directory_.empty()) std::filesystem::create_directories(directory_);
}

std::string ImageStore::put(std::string bytes) {
  std::string ref = sha256_hex(bytes);
  std::lock_guard lock(mutex_);
  if (!directory_.empty()) {
    const auto path = directory_ / ref;
    if (!std::filesystem::exists(path)) {
      const auto tmp = directory_ / (ref + ".tmp");
      {
        std::ofstream out(tmp, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw FormatError("cannot write image " + tmp.string());
      }
      std::filesystem::rename(tmp, path);
    }
  }
  memory_.emplace(ref, std::move(bytes));
  return ref;
}

std::optional<std::string> ImageStore::get(const std::string& ref) const {
  std::lock_guard lock(mutex_);
  if (auto it = memory_.find(ref); it != memory_.end()) return it->second;
  if (directory_.empty() || ref.find('/') != std::string::npos || ref.find("..") != std::string::npos) {
    return std::nullopt;
  }
  std::ifstream in(directory_ / ref, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return memory_.emplace(ref, ss.str()).first->second;
}

bool ImageStore::contains(const std::string& ref) const { return get(ref).has_value(); }

GenerationGateway::GenerationGateway(std::shared_ptr<GenerationBackend> backend,
                                     std::shared_ptr<ImageStore> store, GatewayOptions options)
    : backend_(std::move(backend)), store_(std::move(store)), options_(options) {
  if (!backend_) throw std::invalid_argument("gateway needs a backend");
  if (!store_) store_ = std::make_shared<ImageStore>();
  if (options_.max_in_flight == 0) options_.max_in_flight = 1;
  backend_id_ = backend_->id();
}

std::size_t GenerationGateway::cache_size() const {
  std::lock_guard lock(cache_mutex_);
  return cache_.size();
}

std::size_t GenerationGateway::backend_calls() const {
  std::lock_guard lock(cache_mutex_);
  return backend_calls_;
}

void GenerationGateway::acquire_slot() {
  std::unique_lock lock(slot_mutex_);
  const std::uint64_t ticket = next_ticket_++;
  slot_cv_.wait(lock, [&] { return ticket == admit_ticket_ && active_ < options_.max_in_flight; });
  ++admit_ticket_;
  ++active_;
  slot_cv_.notify_all();
}

void GenerationGateway::release_slot() {
  {
    std::lock_guard lock(slot_mutex_);
    --active_;
  }
  slot_cv_.notify_all();
}

std::string GenerationGateway::call_backend(const GenerationRequest& req) {
  std::string last_error;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(options_.retry_backoff * attempt);
    acquire_slot();
    try {
      {
        std::lock_guard lock(cache_mutex_);
        ++backend_calls_;
      }
      std::string bytes = backend_->generate(req);
      release_slot();
      return store_->put(std::move(bytes));
    } catch (const TransportError& e) {
      release_slot();
      last_error = e.what();
    } catch (...) {
      release_slot();
      throw;
    }
  }
  throw TransportError("generation failed after " + std::to_string(options_.max_retries + 1) +
                       " attempts: " + last_error);
}

GenerationResult GenerationGateway::generate(const GenerationRequest& req) {
  validate_request(req);
  const auto start = std::chrono::steady_clock::now();
  const std::string key = request_key(req);
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  };

  std::shared_future<std::string> pending;
  std::promise<std::string> promise;
  bool owner = false;
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      return {it->second, elapsed_ms(), backend_id_, true};
    }
    if (auto it = in_flight_.find(key); it != in_flight_.end()) {
      pending = it->second;
    } else {
      pending = promise.get_future().share();
      in_flight_.emplace(key, pending);
      owner = true;
    }
  }

  if (!owner) {
    std::string ref = pending.get();  // rethrows the owner's failure
    return {std::move(ref), elapsed_ms(), backend_id_, true};
  }

  try {
    std::string ref = call_backend(req);
    {
      std::lock_guard lock(cache_mutex_);
      cache_.emplace(key, ref);
      in_flight_.erase(key);
    }
    promise.set_value(ref);
    return {std::move(ref), elapsed_ms(), backend_id_, false};
  } catch (...) {
    {
      std::lock_guard lock(cache_mutex_);
      in_flight_.erase(key);
    }
    promise.set_exception(std::current_exception());
    throw;
  }
}

}  // namespace promptsteer
