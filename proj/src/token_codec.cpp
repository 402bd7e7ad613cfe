#include "cardless/token_codec.hpp"

#include <algorithm>

#include "cardless/crypto/primitives.hpp"

namespace cardless::token {
namespace {

Bytes seal_key(ByteView network_key) { return crypto::derive_key(network_key, "cardless/token-seal"); }
Bytes mac_key(ByteView network_key) { return crypto::derive_key(network_key, "cardless/token-mac"); }

void check_network_key(ByteView key) {
  if (key.size() != crypto::kSymmetricKeyBytes) {
    throw TokenError(TokenError::Kind::validation, "network key must be 32 bytes");
  }
}

Bytes header_and_body(const CardToken& t) {
  Bytes out(kMagic.begin(), kMagic.end());
  out.push_back(t.network_id);
  out.insert(out.end(), t.token_id.begin(), t.token_id.end());
  append_be(out, static_cast<std::uint64_t>(t.expiry), 8);
  Bytes sealed = t.sealed.serialize();
  append_be(out, sealed.size(), 2);
  out.insert(out.end(), sealed.begin(), sealed.end());
  return out;
}

}  // namespace

Bytes CardToken::serialize() const {
  Bytes out = header_and_body(*this);
  out.insert(out.end(), mac.begin(), mac.end());
  return out;
}

Bytes encode_token(ByteView card_ref, ByteView network_key, std::uint8_t network_id,
                   std::int64_t expiry, std::int64_t now, RandomSource& rng) {
  TokenId token_id{};
  std::array<std::uint8_t, crypto::kNonceBytes> nonce{};
  rng.fill(token_id);
  rng.fill(nonce);
  return encode_token(card_ref, network_key, network_id, expiry, now, token_id, nonce);
}

Bytes encode_token(ByteView card_ref, ByteView network_key, std::uint8_t network_id,
                   std::int64_t expiry, std::int64_t now, const TokenId& token_id,
                   const std::array<std::uint8_t, crypto::kNonceBytes>& nonce) {
  check_network_key(network_key);
  if (expiry <= now) throw TokenError(TokenError::Kind::validation, "token expiry is not in the future");
  if (card_ref.size() + crypto::kNonceBytes + crypto::kTagBytes > kMaxSealedBytes) {
    throw TokenError(TokenError::Kind::validation, "card reference too large for a token");
  }
  CardToken t;
  t.network_id = network_id;
  t.token_id = token_id;
  t.expiry = expiry;
  t.sealed = crypto::seal_card_with_nonce(card_ref, seal_key(network_key), nonce, token_id);
  Bytes body = header_and_body(t);
  crypto::Digest mac = crypto::hmac_sha256(mac_key(network_key), body);
  std::copy(mac.begin(), mac.end(), t.mac.begin());
  body.insert(body.end(), t.mac.begin(), t.mac.end());
  return body;
}

CardToken decode_token(ByteView bytes, ByteView network_key, std::int64_t now) {
  check_network_key(network_key);
  if (bytes.size() < kHeaderBytes + crypto::kNonceBytes + crypto::kTagBytes + kMacBytes ||
      bytes.size() > kMaxTokenBytes) {
    throw TokenError(TokenError::Kind::format, "token length out of range");
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw TokenError(TokenError::Kind::format, "bad token magic");
  }
  const std::size_t ct_len = read_be(bytes, 29, 2);
  if (kHeaderBytes + ct_len + kMacBytes != bytes.size() ||
      ct_len < crypto::kNonceBytes + crypto::kTagBytes) {
    throw TokenError(TokenError::Kind::format, "token length field mismatch");
  }
  const ByteView signed_part = bytes.first(kHeaderBytes + ct_len);
  const ByteView mac = bytes.last(kMacBytes);
  crypto::Digest expected = crypto::hmac_sha256(mac_key(network_key), signed_part);
  if (!crypto::constant_time_equal(expected, mac)) {
    throw TokenError(TokenError::Kind::authenticity, "token MAC mismatch");
  }
  CardToken t;
  t.network_id = bytes[4];
  std::copy_n(bytes.begin() + 5, kTokenIdBytes, t.token_id.begin());
  t.expiry = static_cast<std::int64_t>(read_be(bytes, 21, 8));
  t.sealed = crypto::SealedCard::parse(bytes.subspan(kHeaderBytes, ct_len));
  std::copy(mac.begin(), mac.end(), t.mac.begin());
  if (now >= t.expiry) throw TokenError(TokenError::Kind::expired, "token expired");
  return t;
}

Bytes open_card_ref(const CardToken& token, ByteView network_key) {
  check_network_key(network_key);
  try {
    return crypto::open_card(token.sealed, seal_key(network_key), token.token_id);
  } catch (const crypto::CryptoError&) {
    throw TokenError(TokenError::Kind::authenticity, "card reference failed authentication");
  }
}

std::string qr_payload(ByteView token_bytes) {
  return std::string(kQrPrefix) + base64url_encode(token_bytes);
}

Bytes qr_parse(std::string_view payload) {
  if (payload.substr(0, kQrPrefix.size()) != kQrPrefix || payload.size() == kQrPrefix.size()) {
    throw TokenError(TokenError::Kind::format, "QR payload lacks the cardless://v1/ prefix");
  }
  try {
    return base64url_decode(payload.substr(kQrPrefix.size()));
  } catch (const std::invalid_argument& e) {
    throw TokenError(TokenError::Kind::format, std::string("QR payload: ") + e.what());
  }
}

}  // namespace cardless::token
