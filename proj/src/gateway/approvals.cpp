#include "cardless/gateway/approvals.hpp"

namespace cardless::gateway {

using protocol::ApprovalDecision;
using protocol::ApprovalQuery;

ApprovalDecision ApprovalBroker::request(const ApprovalQuery& query,
                                         std::chrono::seconds timeout) {
  std::unique_lock lock(mu_);
  if (stopping_ || closed_.count(query.session_id)) return ApprovalDecision::timeout;
  auto [it, inserted] = slots_.emplace(query.session_id, Slot{query, std::nullopt});
  if (!inserted) return ApprovalDecision::timeout;
  arrived_.notify_all();

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  decided_.wait_until(lock, deadline, [&] { return it->second.decision.has_value() || stopping_; });
  ApprovalDecision decision = it->second.decision.value_or(ApprovalDecision::timeout);
  closed_[query.session_id] = query.account_id;
  slots_.erase(it);
  return decision;
}

std::vector<ApprovalQuery> ApprovalBroker::pending_locked(const std::string& account_id) const {
  std::vector<ApprovalQuery> out;
  for (const auto& [id, slot] : slots_) {
    if (slot.query.account_id == account_id && !slot.decision) out.push_back(slot.query);
  }
  return out;
}

std::vector<ApprovalQuery> ApprovalBroker::pending(const std::string& account_id) const {
  std::lock_guard lock(mu_);
  return pending_locked(account_id);
}

std::vector<ApprovalQuery> ApprovalBroker::wait_pending(const std::string& account_id,
                                                        std::chrono::milliseconds hold) {
  std::unique_lock lock(mu_);
  std::vector<ApprovalQuery> out;
  arrived_.wait_for(lock, hold, [&] {
    out = pending_locked(account_id);
    return !out.empty() || stopping_;
  });
  return out;
}

Resolution ApprovalBroker::resolve(const std::string& account_id, const std::string& session_id,
                                   ApprovalDecision decision) {
  std::lock_guard lock(mu_);
  auto it = slots_.find(session_id);
  if (it == slots_.end() || it->second.query.account_id != account_id) {
    auto closed = closed_.find(session_id);
    if (closed != closed_.end() && closed->second == account_id) {
      return Resolution::already_resolved;
    }
    return Resolution::not_found;
  }
  if (it->second.decision) return Resolution::already_resolved;
  it->second.decision = decision;
  decided_.notify_all();
  return Resolution::accepted;
}

void ApprovalBroker::shutdown() {
  std::lock_guard lock(mu_);
  stopping_ = true;
  decided_.notify_all();
  arrived_.notify_all();
}

}  // namespace cardless::gateway
