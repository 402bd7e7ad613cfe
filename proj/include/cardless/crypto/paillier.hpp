#pragma once

#include <gmpxx.h>

#include <array>
#include <cstdint>

#include "cardless/common/bytes.hpp"
#include "cardless/common/random.hpp"
#include "cardless/crypto/primitives.hpp"

// Additively homomorphic public-key encryption (Paillier, g = n + 1).
//
//   E(m; r) = (1 + m n) r^n  mod n^2
//   D(c)    = L(c^lambda mod n^2) * mu  mod n,   L(u) = (u - 1) / n
//   E(a) * E(b) mod n^2 decrypts to a + b; E(a)^k decrypts to k a.
//
// The plaintext space is Z_n. Money amounts (minor units, < 2^64) are far
// below n for every supported modulus.
namespace cardless::crypto {

using KeyFingerprint = std::array<std::uint8_t, 8>;

class PublicKey {
 public:
  PublicKey() = default;
  explicit PublicKey(mpz_class n);

  const mpz_class& n() const { return n_; }
  const mpz_class& n_squared() const { return n_squared_; }
  const KeyFingerprint& fingerprint() const { return fingerprint_; }
  std::size_t modulus_bits() const;

 private:
  mpz_class n_;
  mpz_class n_squared_;
  KeyFingerprint fingerprint_{};
};

class SecretKey {
 public:
  SecretKey() = default;
  SecretKey(const mpz_class& p, const mpz_class& q);

  const PublicKey& public_key() const { return public_; }
  const mpz_class& lambda() const { return lambda_; }
  const mpz_class& mu() const { return mu_; }
  const mpz_class& p() const { return p_; }
  const mpz_class& q() const { return q_; }

 private:
  PublicKey public_;
  mpz_class p_;
  mpz_class q_;
  mpz_class lambda_;
  mpz_class mu_;
};

struct HeKeyPair {
  PublicKey public_key;
  SecretKey secret_key;
  unsigned modulus_bits = 0;
};

class Ciphertext {
 public:
  Ciphertext() = default;
  Ciphertext(mpz_class value, const KeyFingerprint& key)
      : value_(std::move(value)), key_(key) {}

  const mpz_class& value() const { return value_; }
  const KeyFingerprint& key_fingerprint() const { return key_; }

  // fingerprint (8) || length (4, big-endian) || magnitude (big-endian)
  Bytes serialize() const;
  static Ciphertext parse(ByteView bytes);

  friend bool operator==(const Ciphertext& a, const Ciphertext& b) {
    return a.key_ == b.key_ && a.value_ == b.value_;
  }

 private:
  mpz_class value_;
  KeyFingerprint key_{};
};

// Supported sizes: 256 (tests), 512, 1024, 2048.
HeKeyPair he_keygen(unsigned modulus_bits, RandomSource& rng);

// Random unit r in [1, n) with gcd(r, n) = 1.
mpz_class he_random_unit(const PublicKey& pk, RandomSource& rng);

Ciphertext he_encrypt(const PublicKey& pk, const mpz_class& m, RandomSource& rng);
Ciphertext he_encrypt(const PublicKey& pk, std::uint64_t m, RandomSource& rng);
Ciphertext he_encrypt_with_unit(const PublicKey& pk, const mpz_class& m,
                                const mpz_class& r);

mpz_class he_decrypt(const SecretKey& sk, const Ciphertext& c);
// Throws CryptoError(out_of_range) if the plaintext does not fit in 64 bits.
std::uint64_t he_decrypt_u64(const SecretKey& sk, const Ciphertext& c);

Ciphertext he_add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b);
// k must be in [0, n).
Ciphertext he_scale(const PublicKey& pk, const Ciphertext& c, const mpz_class& k);

Bytes mpz_to_bytes(const mpz_class& v);
mpz_class mpz_from_bytes(ByteView bytes);

}  // namespace cardless::crypto
