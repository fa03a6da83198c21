#pragma once

#include <string>

#include "metal/config.hpp"
#include "metal/http.hpp"
#include "metal/recommender.hpp"
#include "metal/roster_service.hpp"
#include "metal/store.hpp"
#include "metal/xapi_service.hpp"

namespace httplib {
class Server;
}

namespace metal {

/// Route table over one store. Transport-free so tests call `dispatch`
/// directly; `mount` wires it into an httplib server.
class Api {
 public:
  Api(Store& store, recommend::RecommendationBook& book, RunConfig config, Clock clock = system_clock());

  http::Response dispatch(const http::Request& req);

 private:
  http::Response indicators(const std::string& kind, const std::string& id, const http::Request& req);
  http::Response list_recommendations(const http::Request& req);
  http::Response decide(const std::string& id, const http::Request& req);
  http::Response delivered(const std::string& learner);
  http::Response propose(const http::Request& req);

  CivilDate reference() const;

  Store& store_;
  recommend::RecommendationBook& book_;
  RunConfig config_;
  Clock clock_;
  XapiService xapi_;
  RosterService roster_;
};

/// Every route requires `Authorization: Bearer <token>` when `token` is
/// non-empty.
void mount(httplib::Server& server, Api& api, const std::string& token);

}  // namespace metal
