#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cardless/crypto/paillier.hpp"

// Data-parallel inner loops. `serial` is the reference implementation kept for
// tests and benchmarks; `parallel` is the OpenMP version used in production
// paths. Both namespaces expose identical signatures.
namespace cardless::kernels {

// Row-major, rows x cols.
struct DesignMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * cols, cols);
  }
};

// Rows per partial sum in the parallel reduction. Partials are combined in
// chunk order, so results do not depend on the thread count.
inline constexpr std::size_t kReductionChunk = 512;

namespace serial {

// out[i] = 1 if pans[i] is a well-formed, Luhn-valid number.
void luhn_validate(std::span<const std::string> pans, std::span<std::uint8_t> out);

// beta = (intercept, coefficients...), length cols + 1.
void logistic_probabilities(const DesignMatrix& x, std::span<const double> beta,
                            std::span<double> out);

// Mean negative log-likelihood plus (l2 / 2) |coefficients|^2; the intercept
// is not penalised. Writes the gradient (length cols + 1) and returns the loss.
double logistic_loss_gradient(const DesignMatrix& x, std::span<const double> labels,
                              std::span<const double> beta, double l2,
                              std::span<double> gradient);

std::vector<crypto::Ciphertext> he_add(const crypto::PublicKey& pk,
                                       std::span<const crypto::Ciphertext> a,
                                       std::span<const crypto::Ciphertext> b);
std::vector<crypto::Ciphertext> he_scale(const crypto::PublicKey& pk,
                                         std::span<const crypto::Ciphertext> c,
                                         std::span<const mpz_class> k);
std::vector<crypto::Ciphertext> he_encrypt(const crypto::PublicKey& pk,
                                           std::span<const mpz_class> m,
                                           std::span<const mpz_class> units);
std::vector<mpz_class> he_decrypt(const crypto::SecretKey& sk,
                                  std::span<const crypto::Ciphertext> c);

}  // namespace serial

namespace parallel {

void luhn_validate(std::span<const std::string> pans, std::span<std::uint8_t> out);
void logistic_probabilities(const DesignMatrix& x, std::span<const double> beta,
                            std::span<double> out);
double logistic_loss_gradient(const DesignMatrix& x, std::span<const double> labels,
                              std::span<const double> beta, double l2,
                              std::span<double> gradient);
std::vector<crypto::Ciphertext> he_add(const crypto::PublicKey& pk,
                                       std::span<const crypto::Ciphertext> a,
                                       std::span<const crypto::Ciphertext> b);
std::vector<crypto::Ciphertext> he_scale(const crypto::PublicKey& pk,
                                         std::span<const crypto::Ciphertext> c,
                                         std::span<const mpz_class> k);
std::vector<crypto::Ciphertext> he_encrypt(const crypto::PublicKey& pk,
                                           std::span<const mpz_class> m,
                                           std::span<const mpz_class> units);
std::vector<mpz_class> he_decrypt(const crypto::SecretKey& sk,
                                  std::span<const crypto::Ciphertext> c);

}  // namespace parallel

// Numerically stable logistic function and log(1 + e^s).
double sigmoid(double s);
double softplus(double s);

}  // namespace cardless::kernels
