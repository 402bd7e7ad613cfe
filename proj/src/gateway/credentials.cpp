#include "cardless/gateway/credentials.hpp"

#include <algorithm>
#include <stdexcept>

#include "cardless/crypto/primitives.hpp"

namespace cardless::gateway {
namespace {

Bytes pin_salt(const CredentialRecord& r) {
  Bytes salt(r.salt.begin(), r.salt.end());
  const std::string_view domain = "/pin";
  salt.insert(salt.end(), domain.begin(), domain.end());
  return salt;
}

Bytes password_hash(std::string_view password, ByteView salt, int iterations) {
  return crypto::pbkdf2_sha256(password, salt, iterations, kDigestBytes);
}

}  // namespace

bool is_valid_pin(std::string_view pin) {
  return pin.size() == 6 &&
         std::all_of(pin.begin(), pin.end(), [](char c) { return c >= '0' && c <= '9'; });
}

CredentialRecord make_credential_record(std::string_view username, std::string_view password,
                                        std::string_view pin, int iterations, RandomSource& rng) {
  if (username.empty() || password.empty()) {
    throw std::invalid_argument("username and password must be non-empty");
  }
  if (!is_valid_pin(pin)) throw std::invalid_argument("PIN must be six digits");
  CredentialRecord r;
  r.username = std::string(username);
  rng.fill(r.salt);
  r.iterations = iterations;
  r.password_digest = password_hash(password, r.salt, iterations);
  r.pin_digest = password_hash(pin, pin_salt(r), iterations);
  return r;
}

Verification verify_user(const Credentials& input, const CredentialRecord* stored,
                         int unknown_user_iterations) {
  if (stored == nullptr || stored->username != input.username) {
    static const std::array<std::uint8_t, kSaltBytes> kDummySalt{};
    const int iterations = stored ? stored->iterations : unknown_user_iterations;
    (void)password_hash(input.password, kDummySalt, iterations);
    return Verification::rejected;
  }
  Bytes digest = password_hash(input.password, stored->salt, stored->iterations);
  return crypto::constant_time_equal(digest, stored->password_digest) ? Verification::verified
                                                                      : Verification::rejected;
}

bool verify_pin(const CredentialRecord& stored, std::string_view pin) {
  if (!is_valid_pin(pin)) return false;
  Bytes digest = password_hash(pin, pin_salt(stored), stored.iterations);
  return crypto::constant_time_equal(digest, stored.pin_digest);
}

}  // namespace cardless::gateway
