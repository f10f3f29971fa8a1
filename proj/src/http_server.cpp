#include <httplib.h>

#include "grove/error.hpp"
#include "grove/service.hpp"

namespace grove {

void serve_http(const Service& service, const std::string& host, int port) {
  httplib::Server server;
  auto route = [&service](const httplib::Request& req, httplib::Response& res) {
    Request r{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    const Response out = service.handle(r);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  server.Get(R"(/api/.*)", route);
  server.Post(R"(/api/.*)", route);
  if (!server.listen(host, port)) fail(Errc::io_error, "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace grove
