#include <omp.h>

#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>

#include "cardless/card_numbering.hpp"
#include "cardless/kernels/kernels.hpp"

namespace cardless::kernels::parallel {
namespace {

// Exceptions must not cross an OpenMP region boundary; keep the first one
// and rethrow it after the loop.
class FirstError {
 public:
  template <typename F>
  void run(F&& f) {
    try {
      f();
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr error_;
};

std::int64_t as_index(std::size_t n) { return static_cast<std::int64_t>(n); }

}  // namespace

void luhn_validate(std::span<const std::string> pans, std::span<std::uint8_t> out) {
  if (out.size() != pans.size()) throw std::invalid_argument("luhn_validate: size mismatch");
  const std::int64_t n = as_index(pans.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
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
  const std::int64_t n = as_index(x.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    auto r = x.row(static_cast<std::size_t>(i));
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
  const std::size_t width = beta.size();
  const std::size_t chunks = (x.rows + kReductionChunk - 1) / kReductionChunk;
  // Per chunk: [loss, gradient...]
  std::vector<double> partial(chunks * (width + 1), 0.0);

#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < as_index(chunks); ++c) {
    double* acc = partial.data() + static_cast<std::size_t>(c) * (width + 1);
    const std::size_t begin = static_cast<std::size_t>(c) * kReductionChunk;
    const std::size_t end = std::min(begin + kReductionChunk, x.rows);
    for (std::size_t i = begin; i < end; ++i) {
      auto r = x.row(i);
      double s = beta[0];
      for (std::size_t j = 0; j < x.cols; ++j) s += beta[j + 1] * r[j];
      acc[0] += softplus(s) - labels[i] * s;
      const double residual = sigmoid(s) - labels[i];
      acc[1] += residual;
      for (std::size_t j = 0; j < x.cols; ++j) acc[j + 2] += residual * r[j];
    }
  }

  double loss = 0.0;
  std::fill(gradient.begin(), gradient.end(), 0.0);
  for (std::size_t c = 0; c < chunks; ++c) {
    const double* acc = partial.data() + c * (width + 1);
    loss += acc[0];
    for (std::size_t j = 0; j < width; ++j) gradient[j] += acc[j + 1];
  }
  const double inv = 1.0 / static_cast<double>(x.rows);
  loss *= inv;
  for (auto& g : gradient) g *= inv;
  for (std::size_t j = 1; j < width; ++j) {
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
  FirstError error;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < as_index(a.size()); ++i) {
    error.run([&] { out[i] = crypto::he_add(pk, a[i], b[i]); });
  }
  error.rethrow();
  return out;
}

std::vector<crypto::Ciphertext> he_scale(const crypto::PublicKey& pk,
                                         std::span<const crypto::Ciphertext> c,
                                         std::span<const mpz_class> k) {
  if (c.size() != k.size()) throw std::invalid_argument("he_scale: size mismatch");
  std::vector<crypto::Ciphertext> out(c.size());
  FirstError error;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < as_index(c.size()); ++i) {
    error.run([&] { out[i] = crypto::he_scale(pk, c[i], k[i]); });
  }
  error.rethrow();
  return out;
}

std::vector<crypto::Ciphertext> he_encrypt(const crypto::PublicKey& pk,
                                           std::span<const mpz_class> m,
                                           std::span<const mpz_class> units) {
  if (m.size() != units.size()) throw std::invalid_argument("he_encrypt: size mismatch");
  std::vector<crypto::Ciphertext> out(m.size());
  FirstError error;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < as_index(m.size()); ++i) {
    error.run([&] { out[i] = crypto::he_encrypt_with_unit(pk, m[i], units[i]); });
  }
  error.rethrow();
  return out;
}

std::vector<mpz_class> he_decrypt(const crypto::SecretKey& sk,
                                  std::span<const crypto::Ciphertext> c) {
  std::vector<mpz_class> out(c.size());
  FirstError error;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < as_index(c.size()); ++i) {
    error.run([&] { out[i] = crypto::he_decrypt(sk, c[i]); });
  }
  error.rethrow();
  return out;
}

}  // namespace cardless::kernels::parallel
