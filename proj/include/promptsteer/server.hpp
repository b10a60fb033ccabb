#pragma once

#include <memory>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "promptsteer/session.hpp"

namespace httplib {
class Server;
}

namespace promptsteer {

// JSON views served to play clients. Ground-truth prompts and calibration
// constants never appear here.
nlohmann::ordered_json public_target_json(const TargetSpec& t);
nlohmann::ordered_json session_json(const Session& s);
nlohmann::ordered_json interaction_json(const Interaction& i);

// Routes:
//   POST /api/sessions                    {user_id, target_id}
//   GET  /api/sessions/{id}
//   POST /api/sessions/{id}/prompts       {positive, negative} -> {image_url, score, ordinal}
//   GET  /api/sessions/{id}/history
//   POST /api/sessions/{id}/finish
//   POST /api/interactions/{id}/rating    {rating}
//   GET  /api/targets[?date=YYYY-MM-DD]
//   GET  /api/targets/{id}/image
//   GET  /api/images/{ref}
void install_api_routes(httplib::Server& server, SessionService& service);

class ApiServer {
 public:
  explicit ApiServer(SessionService& service);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  void serve();             // blocks until stop()
  void start_background();  // serve() on an owned thread
  void stop();

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace promptsteer
