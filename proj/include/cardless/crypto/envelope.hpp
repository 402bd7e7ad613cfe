#pragma once

#include <array>

#include "cardless/common/bytes.hpp"
#include "cardless/common/random.hpp"
#include "cardless/crypto/primitives.hpp"

// Authenticated symmetric envelope (AES-256-GCM) for card payloads.
namespace cardless::crypto {

inline constexpr std::size_t kNonceBytes = 12;
inline constexpr std::size_t kTagBytes = 16;

struct SealedCard {
  std::array<std::uint8_t, kNonceBytes> nonce{};
  Bytes body;
  std::array<std::uint8_t, kTagBytes> tag{};

  // nonce || body || tag
  Bytes serialize() const;
  // Throws CryptoError(format) when shorter than nonce + tag.
  static SealedCard parse(ByteView bytes);

  friend bool operator==(const SealedCard&, const SealedCard&) = default;
};

// `aad` is authenticated but not encrypted. Key must be 32 bytes
// (CryptoError(format) otherwise).
SealedCard seal_card(ByteView payload, ByteView key, RandomSource& rng,
                     ByteView aad = {});
SealedCard seal_card_with_nonce(ByteView payload, ByteView key,
                                const std::array<std::uint8_t, kNonceBytes>& nonce,
                                ByteView aad = {});

// Throws CryptoError(auth_failure) on any tamper or wrong key.
Bytes open_card(const SealedCard& sealed, ByteView key, ByteView aad = {});

}  // namespace cardless::crypto
