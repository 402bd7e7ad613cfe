#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cardless/common/bytes.hpp"
#include "cardless/common/random.hpp"
#include "cardless/crypto/envelope.hpp"

// Presentation token handed to merchants and ATMs in place of the card
// number. Byte layout (big-endian integers):
//
//   offset  size     field
//   0       4        magic "VC01"
//   4       1        network id
//   5       16       token id
//   21      8        expiry, unix seconds
//   29      2        ct_len
//   31      ct_len   sealed card reference (nonce || body || tag)
//   31+ct   32       HMAC-SHA256 over bytes [0, 31 + ct_len)
//
// The card reference is sealed under a sub-key of the network key with the
// token id as associated data; the MAC uses a second sub-key.
namespace cardless::token {

class TokenError : public std::runtime_error {
 public:
  enum class Kind { format, authenticity, expired, validation };
  TokenError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::array<std::uint8_t, 4> kMagic{'V', 'C', '0', '1'};
inline constexpr std::size_t kTokenIdBytes = 16;
inline constexpr std::size_t kMacBytes = 32;
inline constexpr std::size_t kHeaderBytes = 31;
// Whole token stays under 400 bytes so it fits a mid-size QR symbol.
inline constexpr std::size_t kMaxTokenBytes = 400;
inline constexpr std::size_t kMaxSealedBytes = kMaxTokenBytes - kHeaderBytes - kMacBytes;
inline constexpr std::string_view kQrPrefix = "cardless://v1/";

using TokenId = std::array<std::uint8_t, kTokenIdBytes>;

struct CardToken {
  std::uint8_t network_id = 0;
  TokenId token_id{};
  std::int64_t expiry = 0;
  crypto::SealedCard sealed;
  std::array<std::uint8_t, kMacBytes> mac{};

  // Canonical bytes, MAC included.
  Bytes serialize() const;
  std::string token_id_hex() const { return hex_encode(token_id); }

  friend bool operator==(const CardToken&, const CardToken&) = default;
};

// Draws token id and nonce from `rng`. Expiry must be later than `now`.
Bytes encode_token(ByteView card_ref, ByteView network_key, std::uint8_t network_id,
                   std::int64_t expiry, std::int64_t now, RandomSource& rng);

// Deterministic form with caller-chosen token id and nonce.
Bytes encode_token(ByteView card_ref, ByteView network_key, std::uint8_t network_id,
                   std::int64_t expiry, std::int64_t now, const TokenId& token_id,
                   const std::array<std::uint8_t, crypto::kNonceBytes>& nonce);

// Checks, in order: layout and magic (format), MAC (authenticity), expiry
// (expired, when now >= expiry).
CardToken decode_token(ByteView bytes, ByteView network_key, std::int64_t now);

// Opens the sealed card reference of an authenticated token.
Bytes open_card_ref(const CardToken& token, ByteView network_key);

std::string qr_payload(ByteView token_bytes);
Bytes qr_parse(std::string_view payload);

}  // namespace cardless::token
