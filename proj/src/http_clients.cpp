#include "promptsteer/http_clients.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "promptsteer/errors.hpp"
#include "promptsteer/hashing.hpp"

namespace promptsteer {

namespace {

httplib::Client make_client(const HttpEndpoint& ep) {
  httplib::Client client(ep.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(ep.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(ep.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  return client;
}

httplib::Result post_json(const HttpEndpoint& ep, const std::string& body) {
  auto client = make_client(ep);
  auto res = client.Post(ep.path, body, "application/json");
  if (!res) {
    throw TransportError("POST " + ep.origin + ep.path + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status >= 500) {
    throw TransportError("POST " + ep.origin + ep.path + " returned " + std::to_string(res->status));
  }
  if (res->status >= 400) {
    throw ValidationError("POST " + ep.origin + ep.path + " rejected with " +
                          std::to_string(res->status) + ": " + res->body);
  }
  return res;
}

}  // namespace

HttpEndpoint HttpEndpoint::parse(const std::string& url, std::chrono::milliseconds timeout) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  HttpEndpoint ep;
  ep.origin = url.substr(0, path_start);
  ep.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  ep.timeout = timeout;
  return ep;
}

std::string generation_request_json(const GenerationRequest& req) {
  nlohmann::ordered_json j;
  j["prompt"] = req.positive_prompt;
  j["negative_prompt"] = req.negative_prompt;
  j["seed"] = req.seed;
  j["steps"] = req.steps;
  j["width"] = req.width;
  j["height"] = req.height;
  return j.dump();
}

GenerationRequest parse_generation_request(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    GenerationRequest req;
    req.positive_prompt = j.at("prompt").get<std::string>();
    req.negative_prompt = j.value("negative_prompt", std::string{});
    req.seed = j.at("seed").get<std::int64_t>();
    req.steps = j.value("steps", kPlaySteps);
    req.width = j.value("width", 512);
    req.height = j.value("height", 512);
    return req;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed generation request: ") + e.what());
  }
}

HttpGenerationBackend::HttpGenerationBackend(HttpEndpoint endpoint, std::string backend_id)
    : endpoint_(std::move(endpoint)), backend_id_(std::move(backend_id)) {}

std::string HttpGenerationBackend::generate(const GenerationRequest& req) {
  auto res = post_json(endpoint_, generation_request_json(req));
  if (res->body.empty()) throw TransportError("generation backend returned an empty body");
  return res->body;
}

std::string embed_request_json(const EmbedRequest& request) {
  nlohmann::ordered_json j;
  j["kind"] = request.kind == EmbedKind::image ? "image" : "text";
  j["payload"] = request.kind == EmbedKind::image ? base64_encode(request.payload) : request.payload;
  return j.dump();
}

EmbedRequest parse_embed_request(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    EmbedRequest req;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "image") {
      req.kind = EmbedKind::image;
      req.payload = base64_decode(j.at("payload").get<std::string>());
    } else if (kind == "text") {
      req.kind = EmbedKind::text;
      req.payload = j.at("payload").get<std::string>();
    } else {
      throw ValidationError("unknown embed kind '" + kind + "'");
    }
    return req;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed embed request: ") + e.what());
  }
}

std::string embed_response_json(const EmbeddingVector& v) {
  nlohmann::ordered_json j;
  j["provider_id"] = v.provider_id();
  j["dimension"] = v.dimension();
  j["values"] = std::vector<double>(v.values().begin(), v.values().end());
  return j.dump();
}

EmbeddingVector parse_embed_response(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    auto values = j.at("values").get<std::vector<double>>();
    const auto dim = j.at("dimension").get<std::size_t>();
    if (dim != values.size()) {
      throw FormatError("embedding response dimension " + std::to_string(dim) + " but " +
                        std::to_string(values.size()) + " values");
    }
    return EmbeddingVector(std::move(values), j.at("provider_id").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed embedding response: ") + e.what());
  }
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {}

std::string HttpEmbeddingProvider::provider_id() const {
  std::lock_guard lock(mutex_);
  return provider_id_.empty() ? "http:" + endpoint_.origin + endpoint_.path : provider_id_;
}

EmbeddingVector HttpEmbeddingProvider::embed(const EmbedRequest& request) {
  auto res = post_json(endpoint_, embed_request_json(request));
  EmbeddingVector v = parse_embed_response(res->body);
  std::lock_guard lock(mutex_);
  provider_id_ = v.provider_id();
  return v;
}

}  // namespace promptsteer
