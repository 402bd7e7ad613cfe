#pragma once

#include <chrono>
#include <future>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cardless/common/clock.hpp"
#include "cardless/gateway/approvals.hpp"
#include "cardless/gateway/sessions.hpp"
#include "cardless/protocol/engine.hpp"

namespace httplib {
class Server;
}

namespace cardless::gateway {

struct GatewayOptions {
  std::chrono::milliseconds long_poll_hold{25000};
  SessionLimits limits;
  std::size_t worker_threads = 32;
};

// HTTP front end of the bank. Endpoints and bodies are documented in
// docs/http_api.md. Payment adjudications run on background tasks so a
// pending approval never blocks a request thread.
class GatewayServer {
 public:
  GatewayServer(protocol::PaymentSystem& system,
                std::shared_ptr<const protocol::FraudScorer> scorer, const Clock& clock,
                GatewayOptions options = {});
  ~GatewayServer();

  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  // Port 0 picks a free port. Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  // Serves until stop(); blocks.
  void run();
  // run() on a background thread; returns once the server accepts requests.
  void start();
  void stop();
  // Stops accepting requests only; safe to call from a signal handler.
  void interrupt();
  // Waits for every in-flight adjudication to finish.
  void drain();

  ApprovalBroker& broker() { return broker_; }
  SessionStore& sessions() { return sessions_; }

 private:
  void routes();
  void spawn(const std::string& session_id);

  protocol::PaymentSystem& system_;
  std::shared_ptr<const protocol::FraudScorer> scorer_;
  const Clock& clock_;
  GatewayOptions options_;
  ApprovalBroker broker_;
  SessionStore sessions_;
  std::unique_ptr<httplib::Server> server_;
  std::thread runner_;
  std::mutex tasks_mu_;
  std::vector<std::future<void>> tasks_;
};

}  // namespace cardless::gateway
