#include "promptsteer/server.hpp"

#include <httplib.h>

#include "promptsteer/errors.hpp"

namespace promptsteer {

namespace {

using Json = nlohmann::ordered_json;

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message, bool retryable) {
  send_json(res, status, Json{{"error", message}, {"retryable", retryable}});
  if (retryable) res.set_header("Retry-After", "1");
}

std::string image_mime(const std::string& bytes) {
  if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xFF &&
      static_cast<unsigned char>(bytes[1]) == 0xD8) {
    return "image/jpeg";
  }
  return "image/png";
}

template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const NotFoundError& e) {
      send_error(res, 404, e.what(), false);
    } catch (const ValidationError& e) {
      send_error(res, 400, e.what(), false);
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, std::string("malformed request body: ") + e.what(), false);
    } catch (const StateError& e) {
      send_error(res, 409, e.what(), false);
    } catch (const TransportError& e) {
      send_error(res, 503, e.what(), true);
    } catch (const std::exception& e) {
      send_error(res, 500, e.what(), false);
    }
  };
}

nlohmann::json parse_body(const httplib::Request& req) {
  auto j = nlohmann::json::parse(req.body);
  if (!j.is_object()) throw ValidationError("request body must be a JSON object");
  return j;
}

std::string string_field(const nlohmann::json& j, const char* key, bool required) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw ValidationError(std::string("missing field '") + key + "'");
    return {};
  }
  if (!it->is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

Json public_target_json(const TargetSpec& t) {
  Json j;
  j["target_id"] = t.target_id;
  j["source"] = to_string(t.source);
  j["model_id"] = t.model_id;
  auto cats = Json::array();
  for (Category c : t.categories) cats.push_back(to_string(c));
  j["categories"] = std::move(cats);
  j["image_url"] = "/api/targets/" + t.target_id + "/image";
  if (!t.active_date.empty()) j["active_date"] = t.active_date;
  return j;
}

Json session_json(const Session& s) {
  return Json{{"session_id", s.session_id},
              {"user_id", s.user_id},
              {"target_id", s.target_id},
              {"created_at_ms", s.created_at_ms},
              {"status", to_string(s.status)}};
}

Json interaction_json(const Interaction& i) {
  const auto& r = i.record;
  Json j;
  j["interaction_id"] = r.interaction_id;
  j["session_id"] = r.session_id;
  j["ordinal"] = r.ordinal;
  j["timestamp_ms"] = r.timestamp_ms;
  j["positive"] = r.positive_prompt;
  j["negative"] = r.negative_prompt;
  j["image_url"] = "/api/images/" + r.image_ref;
  j["score"] = r.score;
  j["duration_ms"] = r.duration_ms ? Json(*r.duration_ms) : Json(nullptr);
  j["human_rating"] = r.human_rating ? Json(*r.human_rating) : Json(nullptr);
  j["rated_at_ms"] = i.rated_at_ms ? Json(*i.rated_at_ms) : Json(nullptr);
  return j;
}

void install_api_routes(httplib::Server& server, SessionService& service) {
  server.Post("/api/sessions", guarded([&service](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    const Session s = service.start_session(string_field(body, "user_id", true),
                                            string_field(body, "target_id", true));
    Json j = session_json(s);
    auto history = Json::array();
    for (const auto& i : service.history(s.session_id)) history.push_back(interaction_json(i));
    j["history"] = std::move(history);
    send_json(res, 200, j);
  }));

  server.Get(R"(/api/sessions/([^/]+))",
             guarded([&service](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, session_json(service.session(req.matches[1])));
             }));

  server.Post(R"(/api/sessions/([^/]+)/prompts)",
              guarded([&service](const httplib::Request& req, httplib::Response& res) {
                const auto body = parse_body(req);
                const SubmitResult r = service.submit_prompt(
                    req.matches[1], string_field(body, "positive", false),
                    string_field(body, "negative", false));
                send_json(res, 200,
                          Json{{"interaction_id", r.interaction_id},
                               {"image_url", "/api/images/" + r.image_ref},
                               {"score", r.score},
                               {"ordinal", r.ordinal}});
              }));

  server.Get(R"(/api/sessions/([^/]+)/history)",
             guarded([&service](const httplib::Request& req, httplib::Response& res) {
               auto out = Json::array();
               for (const auto& i : service.history(req.matches[1])) out.push_back(interaction_json(i));
               send_json(res, 200, out);
             }));

  server.Post(R"(/api/sessions/([^/]+)/finish)",
              guarded([&service](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200, session_json(service.finish_session(req.matches[1])));
              }));

  server.Post(R"(/api/interactions/([^/]+)/rating)",
              guarded([&service](const httplib::Request& req, httplib::Response& res) {
                const auto body = parse_body(req);
                auto it = body.find("rating");
                if (it == body.end() || !it->is_number_integer()) {
                  throw ValidationError("field 'rating' must be an integer in [1, 10]");
                }
                send_json(res, 200, interaction_json(service.submit_rating(req.matches[1], it->get<int>())));
              }));

  server.Get("/api/targets", guarded([&service](const httplib::Request& req, httplib::Response& res) {
    auto out = Json::array();
    const std::string date = req.has_param("date") ? req.get_param_value("date") : "";
    for (const auto& t : service.active_targets(date)) out.push_back(public_target_json(t));
    send_json(res, 200, out);
  }));

  server.Get(R"(/api/targets/([^/]+)/image)",
             guarded([&service](const httplib::Request& req, httplib::Response& res) {
               const auto& t = service.target(req.matches[1]);
               auto bytes = service.image(t.target_image_ref);
               if (!bytes) throw NotFoundError("target image missing");
               res.set_content(*bytes, image_mime(*bytes));
             }));

  server.Get(R"(/api/images/([0-9a-f]+))",
             guarded([&service](const httplib::Request& req, httplib::Response& res) {
               auto bytes = service.image(req.matches[1]);
               if (!bytes) throw NotFoundError("unknown image");
               res.set_content(*bytes, image_mime(*bytes));
             }));
}

ApiServer::ApiServer(SessionService& service) : server_(std::make_unique<httplib::Server>()) {
  install_api_routes(*server_, service);
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  if (!server_->bind_to_port(host, port)) {
    throw TransportError("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void ApiServer::serve() { server_->listen_after_bind(); }

void ApiServer::start_background() {
  thread_ = std::thread([this] { serve(); });
  server_->wait_until_ready();
}

void ApiServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace promptsteer
