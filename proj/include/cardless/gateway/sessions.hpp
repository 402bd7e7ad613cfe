#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "cardless/common/clock.hpp"
#include "cardless/common/random.hpp"

namespace cardless::gateway {

struct SessionLimits {
  std::chrono::seconds idle_timeout{30 * 60};
  std::uint64_t request_cap = 10000;
};

enum class AuthStatus { ok, unknown, expired, over_cap };

struct AuthResult {
  AuthStatus status = AuthStatus::unknown;
  std::string account_id;
};

// Bearer tokens: 32 random bytes, unpadded base64url. Only a SHA-256 of each
// token is kept. Thread-safe.
class SessionStore {
 public:
  SessionStore(const Clock& clock, SessionLimits limits);

  std::string open(const std::string& account_id);
  // Refreshes the idle timer and counts the request on success.
  AuthResult authorize(const std::string& token);
  void revoke(const std::string& token);
  std::size_t size() const;

 private:
  struct Entry {
    std::string account_id;
    std::int64_t last_used = 0;
    std::uint64_t requests = 0;
  };

  const Clock& clock_;
  SessionLimits limits_;
  mutable std::mutex mu_;
  SystemRandom rng_;
  std::map<std::string, Entry> entries_;
};

}  // namespace cardless::gateway
