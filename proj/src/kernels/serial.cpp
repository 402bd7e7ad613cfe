#include <cmath>
#include <stdexcept>

#include "cardless/card_numbering.hpp"
#include "cardless/kernels/kernels.hpp"

namespace cardless::kernels {

double sigmoid(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

double softplus(double s) { return std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s))); }

namespace serial {

void luhn_validate(std::span<const std::string> pans, std::span<std::uint8_t> out) {
  if (out.size() != pans.size()) throw std::invalid_argument("luhn_validate: size mismatch");
  for (std::size_t i = 0; i < pans.size(); ++i) {
    try {
      out[i] = card::luhn_validate(pans[i]) ? 1 : 0;
    } catch (const card::FormatError&) {
      out[i] = 0;
    }
  }
}

void logistic_probabilities(const DesignMatrix& x, std::span<const double> beta,
                            std::span<double> out) {
  if (beta.size() != x.cols + 1 || out.size() != x.rows) {
    throw std::invalid_argument("logistic_probabilities: dimension mismatch");
  }
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto r = x.row(i);
    double s = beta[0];
    for (std::size_t j = 0; j < x.cols; ++j) s += beta[j + 1] * r[j];
    out[i] = sigmoid(s);
  }
}

double logistic_loss_gradient(const DesignMatrix& x, std::span<const double> labels,
                              std::span<const double> beta, double l2,
                              std::span<double> gradient) {
  if (beta.size() != x.cols + 1 || gradient.size() != beta.size() ||
      labels.size() != x.rows || x.rows == 0) {
    throw std::invalid_argument("logistic_loss_gradient: dimension mismatch");
  }
  std::fill(gradient.begin(), gradient.end(), 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto r = x.row(i);
    double s = beta[0];
    for (std::size_t j = 0; j < x.cols; ++j) s += beta[j + 1] * r[j];
    loss += softplus(s) - labels[i] * s;
    const double residual = sigmoid(s) - labels[i];
    gradient[0] += residual;
    for (std::size_t j = 0; j < x.cols; ++j) gradient[j + 1] += residual * r[j];
  }
  const double inv = 1.0 / static_cast<double>(x.rows);
  loss *= inv;
  for (auto& g : gradient) g *= inv;
  for (std::size_t j = 1; j < beta.size(); ++j) {
    loss += 0.5 * l2 * beta[j] * beta[j];
    gradient[j] += l2 * beta[j];
  }
  return loss;
}

std::vector<crypto::Ciphertext> he_add(const crypto::PublicKey& pk,
                                       std::span<const crypto::Ciphertext> a,
                                       std::span<const crypto::Ciphertext> b) {
  if (a.size() != b.size()) throw std::invalid_argument("he_add: size mismatch");
  std::vector<crypto::Ciphertext> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = crypto::he_add(pk, a[i], b[i]);
  return out;
}

std::vector<crypto::Ciphertext> he_scale(const crypto::PublicKey& pk,
                                         std::span<const crypto::Ciphertext> c,
                                         std::span<const mpz_class> k) {
  if (c.size() != k.size()) throw std::invalid_argument("he_scale: size mismatch");
  std::vector<crypto::Ciphertext> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = crypto::he_scale(pk, c[i], k[i]);
  return out;
}

std::vector<crypto::Ciphertext> he_encrypt(const crypto::PublicKey& pk,
                                           std::span<const mpz_class> m,
                                           std::span<const mpz_class> units) {
  if (m.size() != units.size()) throw std::invalid_argument("he_encrypt: size mismatch");
  std::vector<crypto::Ciphertext> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    out[i] = crypto::he_encrypt_with_unit(pk, m[i], units[i]);
  }
  return out;
}

std::vector<mpz_class> he_decrypt(const crypto::SecretKey& sk,
                                  std::span<const crypto::Ciphertext> c) {
  std::vector<mpz_class> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = crypto::he_decrypt(sk, c[i]);
  return out;
}

}  // namespace serial
}  // namespace cardless::kernels
