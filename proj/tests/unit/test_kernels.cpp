#include <doctest.h>

#include <omp.h>

#include "cardless/card_numbering.hpp"
#include "cardless/common/random.hpp"
#include "cardless/kernels/kernels.hpp"

using namespace cardless;
using namespace cardless::kernels;

namespace {

DesignMatrix random_matrix(RandomSource& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  DesignMatrix x{rows, cols, {}};
  for (std::size_t i = 0; i < rows * cols; ++i) x.values.push_back(normal(rng));
  return x;
}

// Runs f with the given OpenMP thread count.
template <class F>
auto with_threads(int n, F f) {
  const int before = omp_get_max_threads();
  omp_set_num_threads(n);
  auto out = f();
  omp_set_num_threads(before);
  return out;
}

}  // namespace

TEST_CASE("sigmoid and softplus are stable") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) <= 1.0);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(3.0) + sigmoid(-3.0) == doctest::Approx(1.0));
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(std::isfinite(softplus(-800.0)));
}

TEST_CASE("batch Luhn validation: parallel equals serial") {
  SeededRandom rng(31);
  std::vector<std::string> pans;
  card::PanRegistry registry;
  for (int i = 0; i < 3000; ++i) {
    std::string pan = card::issue_pan("444433", rng, registry).pan();
    switch (rng.uniform(4)) {
      case 0: pan[rng.uniform(16)] = static_cast<char>('0' + rng.uniform(10)); break;
      case 1: pan[3] = 'x'; break;
      case 2: pan = pan.substr(0, 5); break;
      default: break;
    }
    pans.push_back(pan);
  }
  std::vector<std::uint8_t> s(pans.size()), p(pans.size());
  serial::luhn_validate(pans, s);
  parallel::luhn_validate(pans, p);
  CHECK(s == p);
  for (std::size_t i = 0; i < pans.size(); ++i) {
    bool expect = false;
    try {
      expect = card::luhn_validate(pans[i]);
    } catch (const card::FormatError&) {
    }
    REQUIRE(static_cast<bool>(s[i]) == expect);
  }
}

TEST_CASE("logistic kernels: parallel equals serial and ignores thread count") {
  SeededRandom rng(32);
  auto x = random_matrix(rng, 5 * kReductionChunk + 17, 6);
  std::vector<double> labels(x.rows);
  for (auto& y : labels) y = static_cast<double>(rng.uniform(2));
  std::vector<double> beta = {0.3, -1.0, 0.5, 0.0, 2.0, -0.25, 1.5};

  std::vector<double> ps(x.rows), pp(x.rows);
  serial::logistic_probabilities(x, beta, ps);
  parallel::logistic_probabilities(x, beta, pp);
  CHECK(ps == pp);

  std::vector<double> gs(beta.size()), gp(beta.size());
  const double ls = serial::logistic_loss_gradient(x, labels, beta, 1e-3, gs);
  const double lp = parallel::logistic_loss_gradient(x, labels, beta, 1e-3, gp);
  CHECK(lp == doctest::Approx(ls).epsilon(1e-12));
  for (std::size_t k = 0; k < beta.size(); ++k) CHECK(gp[k] == doctest::Approx(gs[k]).epsilon(1e-12));

  auto run = [&](int threads) {
    return with_threads(threads, [&] {
      std::vector<double> g(beta.size());
      const double l = parallel::logistic_loss_gradient(x, labels, beta, 1e-3, g);
      g.push_back(l);
      return g;
    });
  };
  const auto one = run(1);
  CHECK(run(2) == one);
  CHECK(run(3) == one);
  CHECK(run(8) == one);
}

TEST_CASE("batch homomorphic operations: parallel equals serial") {
  SeededRandom rng(33);
  auto keys = crypto::he_keygen(256, rng);
  const auto& pk = keys.public_key;
  constexpr std::size_t n = 64;
  std::vector<mpz_class> m(n), k(n), units(n);
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = mpz_class(std::to_string(rng.uniform(1'000'000'000)));
    k[i] = mpz_class(std::to_string(rng.uniform(1000)));
    units[i] = crypto::he_random_unit(pk, rng);
  }
  auto cs = serial::he_encrypt(pk, m, units);
  auto cp = parallel::he_encrypt(pk, m, units);
  REQUIRE(cs == cp);
  CHECK(serial::he_decrypt(keys.secret_key, cs) == m);
  CHECK(parallel::he_decrypt(keys.secret_key, cp) == m);

  auto sums = parallel::he_add(pk, cs, cp);
  CHECK(sums == serial::he_add(pk, cs, cp));
  auto scaled = parallel::he_scale(pk, cs, k);
  CHECK(scaled == serial::he_scale(pk, cs, k));
  auto dsum = parallel::he_decrypt(keys.secret_key, sums);
  auto dscaled = parallel::he_decrypt(keys.secret_key, scaled);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(dsum[i] == 2 * m[i]);
    CHECK(dscaled[i] == k[i] * m[i]);
  }
}
