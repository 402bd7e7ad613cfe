#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cardless/common/bytes.hpp"

namespace cardless::crypto {

class CryptoError : public std::runtime_error {
 public:
  enum class Kind {
    unsupported_size,
    out_of_range,
    key_mismatch,
    auth_failure,
    format,
  };
  CryptoError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

using Digest = std::array<std::uint8_t, 32>;

inline constexpr std::size_t kSymmetricKeyBytes = 32;

Digest sha256(ByteView data);
Digest hmac_sha256(ByteView key, ByteView data);

// PBKDF2-HMAC-SHA256.
Bytes pbkdf2_sha256(std::string_view secret, ByteView salt, int iterations,
                    std::size_t out_len);

bool constant_time_equal(ByteView a, ByteView b);

// Sub-key for a named purpose: HMAC-SHA256(master, label).
Bytes derive_key(ByteView master, std::string_view label);

}  // namespace cardless::crypto
