#include "cardless/gateway/sessions.hpp"

#include "cardless/crypto/primitives.hpp"

namespace cardless::gateway {
namespace {

std::string token_key(const std::string& token) {
  return hex_encode(crypto::sha256(to_bytes(token)));
}

}  // namespace

SessionStore::SessionStore(const Clock& clock, SessionLimits limits)
    : clock_(clock), limits_(limits) {}

std::string SessionStore::open(const std::string& account_id) {
  std::lock_guard lock(mu_);
  std::string token = base64url_encode(rng_.bytes(32));
  entries_[token_key(token)] = Entry{account_id, clock_.now(), 0};
  return token;
}

AuthResult SessionStore::authorize(const std::string& token) {
  const std::string key = token_key(token);
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return {AuthStatus::unknown, {}};
  const std::int64_t now = clock_.now();
  if (now - it->second.last_used >= limits_.idle_timeout.count()) {
    entries_.erase(it);
    return {AuthStatus::expired, {}};
  }
  if (it->second.requests >= limits_.request_cap) return {AuthStatus::over_cap, {}};
  it->second.last_used = now;
  ++it->second.requests;
  return {AuthStatus::ok, it->second.account_id};
}

void SessionStore::revoke(const std::string& token) {
  std::lock_guard lock(mu_);
  entries_.erase(token_key(token));
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

}  // namespace cardless::gateway
