#pragma once

// Reference computations written independently of the library code, used to
// derive and cross-check pinned test values.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

// Luhn check digit by walking the body left to right and deciding parity from
// the distance to the end: the digit adjacent to the check digit is doubled.
inline int luhn_digit(const std::string& body) {
  int sum = 0;
  const std::size_t n = body.size();
  for (std::size_t i = 0; i < n; ++i) {
    int d = body[i] - '0';
    const bool doubled = (n - i) % 2 == 1;
    if (doubled) {
      d *= 2;
      d = d / 10 + d % 10;
    }
    sum += d;
  }
  return (10 - sum % 10) % 10;
}

// Mean logistic loss with L2 on the non-intercept weights, in long double.
// beta[0] is the intercept; rows are already standardized.
inline long double logistic_loss(const std::vector<long double>& beta,
                                 const std::vector<std::vector<double>>& x,
                                 const std::vector<int>& y, long double l2) {
  long double total = 0;
  for (std::size_t r = 0; r < x.size(); ++r) {
    long double s = beta[0];
    for (std::size_t j = 0; j < x[r].size(); ++j) s += beta[j + 1] * x[r][j];
    // log(1 + e^s) - y s
    long double softplus = s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
    total += softplus - y[r] * s;
  }
  long double penalty = 0;
  for (std::size_t j = 1; j < beta.size(); ++j) penalty += beta[j] * beta[j];
  return total / x.size() + 0.5L * l2 * penalty;
}

// Central finite-difference gradient of logistic_loss.
inline std::vector<double> fd_gradient(const std::vector<double>& beta,
                                       const std::vector<std::vector<double>>& x,
                                       const std::vector<int>& y, double l2, double h) {
  std::vector<double> g(beta.size());
  for (std::size_t k = 0; k < beta.size(); ++k) {
    std::vector<long double> up(beta.begin(), beta.end()), down(beta.begin(), beta.end());
    up[k] += h;
    down[k] -= h;
    g[k] = static_cast<double>((logistic_loss(up, x, y, l2) - logistic_loss(down, x, y, l2)) /
                               (2.0L * h));
  }
  return g;
}

// AUC by enumerating every positive/negative pair; ties count one half.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace oracle
