#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

namespace splatforge::testing {

/// Loopback HTTP server on an ephemeral port, serving until destroyed.
class FakeServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  FakeServer() = default;
  FakeServer(const FakeServer&) = delete;
  FakeServer& operator=(const FakeServer&) = delete;
  ~FakeServer() { stop(); }

  void get(const std::string& path, Handler h) { server_.Get(path, wrap(path, std::move(h))); }
  void post(const std::string& path, Handler h) { server_.Post(path, wrap(path, std::move(h))); }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int hits(const std::string& path) const {
    std::lock_guard lock(mutex_);
    int n = 0;
    for (const auto& p : paths_) n += p == path;
    return n;
  }
  std::vector<std::string> bodies() const {
    std::lock_guard lock(mutex_);
    return bodies_;
  }

 private:
  Handler wrap(std::string path, Handler h) {
    return [this, path, h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mutex_);
        paths_.push_back(path);
        bodies_.push_back(req.body);
      }
      h(req, res);
    };
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mutex_;
  std::vector<std::string> paths_;
  std::vector<std::string> bodies_;
};

}  // namespace splatforge::testing
