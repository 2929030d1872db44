#include "hoidet/annotation/server.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace hoidet::annotation {

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, nlohmann::ordered_json{{"error", message}});
}

}  // namespace

AnnotationServer::AnnotationServer(TaskStore& store)
    : store_(store), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

AnnotationServer::~AnnotationServer() { stop(); }

void AnnotationServer::install_routes() {
  auto& s = *server_;
  s.Get("/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
    const auto annotator = req.get_param_value("annotator");
    if (annotator.empty()) return send_error(res, 400, "missing 'annotator' query parameter");
    const auto next = store_.next_task(annotator);
    nlohmann::ordered_json body;
    body["task"] = next.task ? nlohmann::ordered_json::parse(task_to_json(*next.task))
                             : nlohmann::ordered_json(nullptr);
    body["remaining"] = next.remaining;
    send_json(res, 200, body);
  });

  s.Post(R"(/tasks/(-?\d+)/submit)", [this](const httplib::Request& req, httplib::Response& res) {
    int id = 0;
    try {
      id = std::stoi(req.matches[1].str());
    } catch (const std::exception&) {
      return send_error(res, 404, "unknown task");
    }
    try {
      const auto sub = submission_from_json(req.body, id);
      const auto n = store_.submit(sub);
      send_json(res, 200, nlohmann::ordered_json{{"task_id", id}, {"instances", n}});
    } catch (const ParseError& e) {
      send_error(res, 400, e.what());
    } catch (const UnknownTaskError& e) {
      send_error(res, 404, e.what());
    } catch (const ConflictError& e) {
      send_error(res, 409, e.what());
    } catch (const ValidationError& e) {
      send_error(res, 422, e.what());
    } catch (const IoError& e) {
      send_error(res, 500, e.what());
    }
  });

  s.Get(R"(/images/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1].str();
    if (!store_.source().find(id)) return send_error(res, 404, "unknown image");
    std::ifstream in(store_.source().image_path(id), std::ios::binary);
    if (!in) return send_error(res, 404, "raster missing");
    std::ostringstream buf;
    buf << in.rdbuf();
    res.status = 200;
    res.set_content(buf.str(), "image/png");
  });

  s.Get("/export", [this](const httplib::Request&, httplib::Response& res) {
    res.status = 200;
    res.set_content(store_.export_annotations(), "text/plain");
  });

  s.Get("/progress", [this](const httplib::Request&, httplib::Response& res) {
    const auto p = store_.progress();
    send_json(res, 200,
              nlohmann::ordered_json{{"total", p.total},
                                     {"open", p.open},
                                     {"claimed", p.claimed},
                                     {"submitted", p.submitted}});
  });

  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    } catch (...) {
      send_error(res, 500, "unknown error");
    }
  });
}

int AnnotationServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void AnnotationServer::run(const std::string& host, int port) {
  if (!server_->listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
}

void AnnotationServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace hoidet::annotation
