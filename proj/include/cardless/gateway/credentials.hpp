#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "cardless/common/bytes.hpp"
#include "cardless/common/random.hpp"

namespace cardless::gateway {

inline constexpr int kDefaultHashIterations = 20000;
inline constexpr std::size_t kSaltBytes = 16;
inline constexpr std::size_t kDigestBytes = 32;

struct Credentials {
  std::string username;
  std::string password;
};

// Salted PBKDF2-HMAC-SHA256 digests. The PIN is the second factor used to
// confirm payments.
struct CredentialRecord {
  std::string username;
  std::array<std::uint8_t, kSaltBytes> salt{};
  Bytes password_digest;
  Bytes pin_digest;
  int iterations = kDefaultHashIterations;

  friend bool operator==(const CredentialRecord&, const CredentialRecord&) = default;
};

bool is_valid_pin(std::string_view pin);

// Throws std::invalid_argument for an empty username/password or a PIN that
// is not six digits.
CredentialRecord make_credential_record(std::string_view username, std::string_view password,
                                        std::string_view pin, int iterations, RandomSource& rng);

enum class Verification { verified, rejected };

// `stored` may be null for an unknown user; a dummy digest with
// `unknown_user_iterations` is still computed so both rejection paths cost the
// same.
Verification verify_user(const Credentials& input, const CredentialRecord* stored,
                         int unknown_user_iterations = kDefaultHashIterations);

bool verify_pin(const CredentialRecord& stored, std::string_view pin);

}  // namespace cardless::gateway
