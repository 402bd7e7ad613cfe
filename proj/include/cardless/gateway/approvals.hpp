#pragma once

#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cardless/protocol/engine.hpp"

namespace cardless::gateway {

enum class Resolution { accepted, not_found, already_resolved };

// Hands approval queries from blocked adjudications to polling clients.
// Each query is resolved at most once: by the cardholder, by its timeout or
// by shutdown.
class ApprovalBroker final : public protocol::ApprovalSource {
 public:
  protocol::ApprovalDecision request(const protocol::ApprovalQuery& query,
                                     std::chrono::seconds timeout) override;

  std::vector<protocol::ApprovalQuery> pending(const std::string& account_id) const;
  // Returns as soon as the account has a pending query, or after `hold`.
  std::vector<protocol::ApprovalQuery> wait_pending(const std::string& account_id,
                                                    std::chrono::milliseconds hold);

  // `decision` must be approve or decline. Queries owned by another account
  // report not_found.
  Resolution resolve(const std::string& account_id, const std::string& session_id,
                     protocol::ApprovalDecision decision);

  // Times out every waiting query and wakes all pollers.
  void shutdown();

 private:
  struct Slot {
    protocol::ApprovalQuery query;
    std::optional<protocol::ApprovalDecision> decision;
  };

  std::vector<protocol::ApprovalQuery> pending_locked(const std::string& account_id) const;

  mutable std::mutex mu_;
  std::condition_variable decided_;
  std::condition_variable arrived_;
  std::map<std::string, Slot> slots_;
  std::map<std::string, std::string> closed_;  // session id -> account id
  bool stopping_ = false;
};

}  // namespace cardless::gateway
