#pragma once

#include <memory>
#include <string>
#include <thread>

#include "hoidet/annotation/task_store.hpp"

namespace httplib {
class Server;
}

namespace hoidet::annotation {

/// HTTP+JSON front end of a TaskStore.
///
///   GET  /tasks/next?annotator=A  -> {"task": {...} | null, "remaining": n}
///   POST /tasks/{id}/submit       -> {"instances": n}; 409 stale claim, 422 rule broken
///   GET  /images/{image_id}       -> PNG
///   GET  /export                  -> annotations file
///   GET  /progress                -> {"total", "open", "claimed", "submitted"}
class AnnotationServer {
 public:
  explicit AnnotationServer(TaskStore& store);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Binds (port 0 picks a free one) and serves on a background thread.
  /// Returns the bound port; throws IoError if binding fails.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Blocks serving on the calling thread.
  void run(const std::string& host, int port);
  void stop();

 private:
  void install_routes();

  TaskStore& store_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace hoidet::annotation
