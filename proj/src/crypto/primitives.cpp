#include "cardless/crypto/primitives.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

namespace cardless::crypto {

Digest sha256(ByteView data) {
  Digest out{};
  SHA256(data.data(), data.size(), out.data());
  return out;
}

Digest hmac_sha256(ByteView key, ByteView data) {
  Digest out{};
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(),
           data.size(), out.data(), &len) == nullptr ||
      len != out.size()) {
    throw std::runtime_error("HMAC-SHA256 failed");
  }
  return out;
}

Bytes pbkdf2_sha256(std::string_view secret, ByteView salt, int iterations,
                    std::size_t out_len) {
  if (iterations < 1) throw std::invalid_argument("pbkdf2: iterations must be >= 1");
  Bytes out(out_len);
  if (PKCS5_PBKDF2_HMAC(secret.data(), static_cast<int>(secret.size()), salt.data(),
                        static_cast<int>(salt.size()), iterations, EVP_sha256(),
                        static_cast<int>(out_len), out.data()) != 1) {
    throw std::runtime_error("PBKDF2 failed");
  }
  return out;
}

bool constant_time_equal(ByteView a, ByteView b) {
  if (a.size() != b.size()) return false;
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

Bytes derive_key(ByteView master, std::string_view label) {
  Bytes info = to_bytes(label);
  Digest d = hmac_sha256(master, info);
  return Bytes(d.begin(), d.end());
}

}  // namespace cardless::crypto
