#pragma once

#include <chrono>
#include <mutex>
#include <string>

#include "promptsteer/embedding.hpp"
#include "promptsteer/genclient.hpp"

namespace promptsteer {

struct HttpEndpoint {
  std::string origin;  // scheme://host:port
  std::string path;    // /generate
  std::chrono::milliseconds timeout{30000};

  // Splits "http://host:port/path" into origin and path.
  static HttpEndpoint parse(const std::string& url,
                            std::chrono::milliseconds timeout = std::chrono::milliseconds{30000});
};

// Backend wire contract: POST JSON {prompt, negative_prompt, seed, steps,
// width, height}; the response body is the encoded image. Connection failures
// and 5xx responses raise TransportError; 4xx raise ValidationError.
class HttpGenerationBackend : public GenerationBackend {
 public:
  HttpGenerationBackend(HttpEndpoint endpoint, std::string backend_id = "http");

  std::string id() const override { return backend_id_; }
  std::string generate(const GenerationRequest& req) override;

 private:
  HttpEndpoint endpoint_;
  std::string backend_id_;
};

// Embedding wire contract: POST JSON {kind: "image"|"text", payload} with
// image payloads base64-encoded; response {provider_id, dimension, values}.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpEndpoint endpoint);

  std::string provider_id() const override;
  EmbeddingVector embed(const EmbedRequest& request) override;

 private:
  HttpEndpoint endpoint_;
  mutable std::mutex mutex_;
  std::string provider_id_;  // learned from the first response
};

// Request/response JSON for the embedding contract, shared with test servers.
std::string embed_request_json(const EmbedRequest& request);
EmbedRequest parse_embed_request(const std::string& body);
std::string embed_response_json(const EmbeddingVector& v);
EmbeddingVector parse_embed_response(const std::string& body);

std::string generation_request_json(const GenerationRequest& req);
GenerationRequest parse_generation_request(const std::string& body);

}  // namespace promptsteer
