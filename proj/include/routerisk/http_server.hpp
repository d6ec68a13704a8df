#pragma once

// Routes the service handlers onto a cpp-httplib server.

#include <string>

#include "httplib.h"
#include "routerisk/service.hpp"

namespace routerisk::service {

inline void reply(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_header("Access-Control-Allow-Origin", "*");
  res.set_content(r.body.dump(), "application/json");
}

/// `svc` must outlive the server.
inline void mount(httplib::Server& server, const Service& svc) {
  server.Get("/api/health", [&svc](const httplib::Request&, httplib::Response& res) { reply(res, svc.health()); });
  server.Get("/api/presets", [&svc](const httplib::Request&, httplib::Response& res) { reply(res, svc.get_presets()); });
  server.Post("/api/score",
              [&svc](const httplib::Request& req, httplib::Response& res) { reply(res, svc.score(req.body)); });
  server.Post("/api/sweep",
              [&svc](const httplib::Request& req, httplib::Response& res) { reply(res, svc.sweep(req.body)); });
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

}  // namespace routerisk::service
