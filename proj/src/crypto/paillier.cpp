#include "cardless/crypto/paillier.hpp"

#include <algorithm>

namespace cardless::crypto {
namespace {

void require_key(const PublicKey& pk, const Ciphertext& c) {
  if (c.key_fingerprint() != pk.fingerprint()) {
    throw CryptoError(CryptoError::Kind::key_mismatch,
                      "ciphertext was produced under a different key");
  }
  if (c.value() <= 0 || c.value() >= pk.n_squared()) {
    throw CryptoError(CryptoError::Kind::out_of_range,
                      "ciphertext outside the group Z*_{n^2}");
  }
}

mpz_class random_bits(RandomSource& rng, std::size_t bits) {
  Bytes buf = rng.bytes((bits + 7) / 8);
  mpz_class v = mpz_from_bytes(buf);
  const std::size_t excess = buf.size() * 8 - bits;
  if (excess > 0) v >>= excess;
  return v;
}

mpz_class random_prime(RandomSource& rng, std::size_t bits) {
  for (;;) {
    mpz_class candidate = random_bits(rng, bits);
    mpz_setbit(candidate.get_mpz_t(), bits - 1);
    mpz_setbit(candidate.get_mpz_t(), bits - 2);
    mpz_setbit(candidate.get_mpz_t(), 0);
    mpz_class prime;
    mpz_nextprime(prime.get_mpz_t(), candidate.get_mpz_t());
    if (mpz_sizeinbase(prime.get_mpz_t(), 2) == bits) return prime;
  }
}

}  // namespace

Bytes mpz_to_bytes(const mpz_class& v) {
  if (v < 0) throw std::invalid_argument("mpz_to_bytes: negative value");
  if (v == 0) return {};
  std::size_t count = 0;
  Bytes out((mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8);
  mpz_export(out.data(), &count, 1, 1, 1, 0, v.get_mpz_t());
  out.resize(count);
  return out;
}

mpz_class mpz_from_bytes(ByteView bytes) {
  mpz_class v;
  if (!bytes.empty()) mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  return v;
}

PublicKey::PublicKey(mpz_class n) : n_(std::move(n)), n_squared_(n_ * n_) {
  Digest d = sha256(mpz_to_bytes(n_));
  std::copy_n(d.begin(), fingerprint_.size(), fingerprint_.begin());
}

std::size_t PublicKey::modulus_bits() const {
  return mpz_sizeinbase(n_.get_mpz_t(), 2);
}

SecretKey::SecretKey(const mpz_class& p, const mpz_class& q)
    : public_(p * q), p_(p), q_(q) {
  mpz_class pm1 = p - 1;
  mpz_class qm1 = q - 1;
  mpz_lcm(lambda_.get_mpz_t(), pm1.get_mpz_t(), qm1.get_mpz_t());
  // With g = n + 1, L(g^lambda mod n^2) = lambda mod n.
  mpz_class lambda_mod_n = lambda_ % public_.n();
  if (mpz_invert(mu_.get_mpz_t(), lambda_mod_n.get_mpz_t(), public_.n().get_mpz_t()) == 0) {
    throw CryptoError(CryptoError::Kind::format, "lambda not invertible mod n");
  }
}

HeKeyPair he_keygen(unsigned modulus_bits, RandomSource& rng) {
  if (modulus_bits != 256 && modulus_bits != 512 && modulus_bits != 1024 &&
      modulus_bits != 2048) {
    throw CryptoError(CryptoError::Kind::unsupported_size,
                      "unsupported modulus size " + std::to_string(modulus_bits));
  }
  const std::size_t half = modulus_bits / 2;
  for (;;) {
    mpz_class p = random_prime(rng, half);
    mpz_class q = random_prime(rng, half);
    if (p == q) continue;
    mpz_class n = p * q;
    mpz_class phi = (p - 1) * (q - 1);
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), n.get_mpz_t(), phi.get_mpz_t());
    if (g != 1 || mpz_sizeinbase(n.get_mpz_t(), 2) != modulus_bits) continue;
    SecretKey sk(p, q);
    return HeKeyPair{sk.public_key(), sk, modulus_bits};
  }
}

mpz_class he_random_unit(const PublicKey& pk, RandomSource& rng) {
  const std::size_t bits = pk.modulus_bits() + 64;
  for (;;) {
    mpz_class r = random_bits(rng, bits) % pk.n();
    if (r == 0) continue;
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), pk.n().get_mpz_t());
    if (g == 1) return r;
  }
}

Ciphertext he_encrypt_with_unit(const PublicKey& pk, const mpz_class& m,
                                const mpz_class& r) {
  if (m < 0 || m >= pk.n()) {
    throw CryptoError(CryptoError::Kind::out_of_range, "plaintext outside [0, n)");
  }
  mpz_class rn;
  mpz_powm(rn.get_mpz_t(), r.get_mpz_t(), pk.n().get_mpz_t(), pk.n_squared().get_mpz_t());
  mpz_class c = (1 + m * pk.n()) % pk.n_squared();
  c = (c * rn) % pk.n_squared();
  return Ciphertext(std::move(c), pk.fingerprint());
}

Ciphertext he_encrypt(const PublicKey& pk, const mpz_class& m, RandomSource& rng) {
  if (m < 0 || m >= pk.n()) {
    throw CryptoError(CryptoError::Kind::out_of_range, "plaintext outside [0, n)");
  }
  return he_encrypt_with_unit(pk, m, he_random_unit(pk, rng));
}

Ciphertext he_encrypt(const PublicKey& pk, std::uint64_t m, RandomSource& rng) {
  mpz_class v;
  mpz_import(v.get_mpz_t(), 1, 1, sizeof(m), 0, 0, &m);
  return he_encrypt(pk, v, rng);
}

mpz_class he_decrypt(const SecretKey& sk, const Ciphertext& c) {
  const PublicKey& pk = sk.public_key();
  require_key(pk, c);
  mpz_class u;
  mpz_powm(u.get_mpz_t(), c.value().get_mpz_t(), sk.lambda().get_mpz_t(),
           pk.n_squared().get_mpz_t());
  mpz_class l = (u - 1) / pk.n();
  return (l * sk.mu()) % pk.n();
}

std::uint64_t he_decrypt_u64(const SecretKey& sk, const Ciphertext& c) {
  mpz_class m = he_decrypt(sk, c);
  if (mpz_sizeinbase(m.get_mpz_t(), 2) > 64) {
    throw CryptoError(CryptoError::Kind::out_of_range, "plaintext exceeds 64 bits");
  }
  std::uint64_t out = 0;
  mpz_export(&out, nullptr, 1, sizeof(out), 0, 0, m.get_mpz_t());
  return out;
}

Ciphertext he_add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  require_key(pk, a);
  require_key(pk, b);
  return Ciphertext((a.value() * b.value()) % pk.n_squared(), pk.fingerprint());
}

Ciphertext he_scale(const PublicKey& pk, const Ciphertext& c, const mpz_class& k) {
  require_key(pk, c);
  if (k < 0 || k >= pk.n()) {
    throw CryptoError(CryptoError::Kind::out_of_range, "scalar outside [0, n)");
  }
  mpz_class out;
  mpz_powm(out.get_mpz_t(), c.value().get_mpz_t(), k.get_mpz_t(),
           pk.n_squared().get_mpz_t());
  return Ciphertext(std::move(out), pk.fingerprint());
}

Bytes Ciphertext::serialize() const {
  Bytes out(key_.begin(), key_.end());
  Bytes mag = mpz_to_bytes(value_);
  append_be(out, mag.size(), 4);
  out.insert(out.end(), mag.begin(), mag.end());
  return out;
}

Ciphertext Ciphertext::parse(ByteView bytes) {
  if (bytes.size() < 12) throw CryptoError(CryptoError::Kind::format, "ciphertext too short");
  KeyFingerprint fp{};
  std::copy_n(bytes.begin(), fp.size(), fp.begin());
  const std::size_t len = read_be(bytes, 8, 4);
  if (bytes.size() != 12 + len) {
    throw CryptoError(CryptoError::Kind::format, "ciphertext length prefix mismatch");
  }
  return Ciphertext(mpz_from_bytes(bytes.subspan(12)), fp);
}

}  // namespace cardless::crypto
