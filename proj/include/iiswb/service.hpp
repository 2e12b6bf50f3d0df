#pragma once

// Session-oriented HTTP API over the agent. Every session is persisted as an
// append-only JSON-lines event log under the data directory and replayed the
// first time an unknown id is looked up.
//
//   POST /sessions                      {source, format?}          201 | 413 | 422
//   GET  /sessions/{id}                                             200 | 404
//   GET  /sessions/{id}/description|diagnosis|recommendation        200 | 404 | 409
//   POST /sessions/{id}/chat            {message}                   200 | 404 | 429
//   POST /sessions/{id}/repair          {params, mode?, apply?}     200 | 202 | 404 | 422
//   POST /sessions/{id}/repair/confirm                              200 | 404 | 409
//   GET  /sessions/{id}/model           text/plain .om

#include "iiswb/agent.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

namespace iiswb {

enum class Phase { Loaded, Described, Diagnosed, Chatting };
std::string to_string(Phase phase);
std::optional<Phase> parse_phase(std::string_view text);

struct ServiceConfig {
  std::filesystem::path data_dir = "workbench-data";
  std::chrono::milliseconds solve_budget{30'000};
  std::size_t max_source_bytes = 1 << 20;
  /// One client per request; defaults to client_from_env.
  std::function<std::unique_ptr<ChatClient>()> make_client;
};

/// WORKBENCH_DATA_DIR, WORKBENCH_SOLVE_BUDGET_SECS (may be fractional).
ServiceConfig service_config_from_env();
/// WORKBENCH_PORT, default 8080.
int service_port_from_env();

class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Blocks until stop().
  bool listen(const std::string& host, int port);
  /// Serves on a background thread; returns the bound port.
  int start_background(const std::string& host = "127.0.0.1");
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace iiswb
