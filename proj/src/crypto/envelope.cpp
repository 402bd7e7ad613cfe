#include "cardless/crypto/envelope.hpp"

#include <openssl/evp.h>

#include <memory>

namespace cardless::crypto {
namespace {

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;

CipherCtx new_ctx() {
  CipherCtx ctx(EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free);
  if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
  return ctx;
}

void check_key(ByteView key) {
  if (key.size() != kSymmetricKeyBytes) {
    throw CryptoError(CryptoError::Kind::format, "envelope key must be 32 bytes");
  }
}

void ossl(int rc, const char* what) {
  if (rc != 1) throw std::runtime_error(what);
}

}  // namespace

Bytes SealedCard::serialize() const {
  Bytes out(nonce.begin(), nonce.end());
  out.insert(out.end(), body.begin(), body.end());
  out.insert(out.end(), tag.begin(), tag.end());
  return out;
}

SealedCard SealedCard::parse(ByteView bytes) {
  if (bytes.size() < kNonceBytes + kTagBytes) {
    throw CryptoError(CryptoError::Kind::format, "sealed card too short");
  }
  SealedCard s;
  std::copy_n(bytes.begin(), kNonceBytes, s.nonce.begin());
  s.body.assign(bytes.begin() + kNonceBytes, bytes.end() - kTagBytes);
  std::copy(bytes.end() - kTagBytes, bytes.end(), s.tag.begin());
  return s;
}

SealedCard seal_card(ByteView payload, ByteView key, RandomSource& rng, ByteView aad) {
  std::array<std::uint8_t, kNonceBytes> nonce{};
  rng.fill(nonce);
  return seal_card_with_nonce(payload, key, nonce, aad);
}

SealedCard seal_card_with_nonce(ByteView payload, ByteView key,
                                const std::array<std::uint8_t, kNonceBytes>& nonce,
                                ByteView aad) {
  check_key(key);
  auto ctx = new_ctx();
  SealedCard out;
  out.nonce = nonce;
  out.body.resize(payload.size());
  int len = 0;
  ossl(EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr),
       "gcm init");
  ossl(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceBytes, nullptr),
       "gcm ivlen");
  ossl(EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()),
       "gcm key");
  if (!aad.empty()) {
    ossl(EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(),
                           static_cast<int>(aad.size())),
         "gcm aad");
  }
  if (!payload.empty()) {
    ossl(EVP_EncryptUpdate(ctx.get(), out.body.data(), &len, payload.data(),
                           static_cast<int>(payload.size())),
         "gcm update");
  }
  ossl(EVP_EncryptFinal_ex(ctx.get(), out.body.data() + payload.size(), &len),
       "gcm final");
  ossl(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagBytes, out.tag.data()),
       "gcm tag");
  return out;
}

Bytes open_card(const SealedCard& sealed, ByteView key, ByteView aad) {
  check_key(key);
  auto ctx = new_ctx();
  Bytes plain(sealed.body.size());
  int len = 0;
  ossl(EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr),
       "gcm init");
  ossl(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceBytes, nullptr),
       "gcm ivlen");
  ossl(EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), sealed.nonce.data()),
       "gcm key");
  if (!aad.empty()) {
    ossl(EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(),
                           static_cast<int>(aad.size())),
         "gcm aad");
  }
  if (!sealed.body.empty()) {
    ossl(EVP_DecryptUpdate(ctx.get(), plain.data(), &len, sealed.body.data(),
                           static_cast<int>(sealed.body.size())),
         "gcm update");
  }
  auto tag = sealed.tag;
  ossl(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagBytes, tag.data()),
       "gcm set tag");
  if (EVP_DecryptFinal_ex(ctx.get(), plain.data() + plain.size(), &len) != 1) {
    throw CryptoError(CryptoError::Kind::auth_failure, "sealed card failed authentication");
  }
  return plain;
}

}  // namespace cardless::crypto
