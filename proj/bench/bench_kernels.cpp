#include <benchmark/benchmark.h>

#include <random>

#include "cardless/card_numbering.hpp"
#include "cardless/common/random.hpp"
#include "cardless/kernels/kernels.hpp"

// Serial reference against the OpenMP kernels. Set OMP_NUM_THREADS to vary
// the parallel width.
namespace {

using namespace cardless;
namespace k = cardless::kernels;

const std::vector<std::string>& pans() {
  static const std::vector<std::string> out = [] {
    SeededRandom rng(1);
    card::PanRegistry registry;
    std::vector<std::string> v;
    for (int i = 0; i < 200000; ++i) v.push_back(card::issue_pan("444433", rng, registry).pan());
    return v;
  }();
  return out;
}

struct Logistic {
  k::DesignMatrix x;
  std::vector<double> labels;
  std::vector<double> beta;
};

const Logistic& logistic() {
  static const Logistic out = [] {
    SeededRandom rng(2);
    std::normal_distribution<double> normal(0.0, 1.0);
    Logistic l;
    l.x = {100000, 6, {}};
    for (std::size_t i = 0; i < l.x.rows * l.x.cols; ++i) l.x.values.push_back(normal(rng));
    for (std::size_t i = 0; i < l.x.rows; ++i) l.labels.push_back(static_cast<double>(rng.uniform(2)));
    l.beta = {0.1, -0.5, 0.25, 1.0, 0.0, -2.0, 0.75};
    return l;
  }();
  return out;
}

struct HeBatch {
  crypto::HeKeyPair keys;
  std::vector<mpz_class> m, scalars, units;
  std::vector<crypto::Ciphertext> c;
};

const HeBatch& he() {
  static const HeBatch out = [] {
    SeededRandom rng(3);
    HeBatch b{crypto::he_keygen(512, rng), {}, {}, {}, {}};
    for (int i = 0; i < 64; ++i) {
      b.m.emplace_back(std::to_string(rng.uniform(1'000'000)));
      b.scalars.emplace_back(std::to_string(1 + rng.uniform(1000)));
      b.units.push_back(crypto::he_random_unit(b.keys.public_key, rng));
    }
    b.c = k::serial::he_encrypt(b.keys.public_key, b.m, b.units);
    return b;
  }();
  return out;
}

template <auto Fn>
void luhn(benchmark::State& state) {
  const auto& v = pans();
  std::vector<std::uint8_t> out(v.size());
  for (auto _ : state) {
    Fn(v, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(v.size()));
}

template <auto Fn>
void gradient(benchmark::State& state) {
  const auto& l = logistic();
  std::vector<double> g(l.beta.size());
  for (auto _ : state) benchmark::DoNotOptimize(Fn(l.x, l.labels, l.beta, 1e-4, g));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(l.x.rows));
}

template <auto Fn>
void probabilities(benchmark::State& state) {
  const auto& l = logistic();
  std::vector<double> p(l.x.rows);
  for (auto _ : state) {
    Fn(l.x, l.beta, p);
    benchmark::DoNotOptimize(p.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(l.x.rows));
}

template <auto Fn>
void he_encrypt(benchmark::State& state) {
  const auto& b = he();
  for (auto _ : state) benchmark::DoNotOptimize(Fn(b.keys.public_key, b.m, b.units));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b.m.size()));
}

template <auto Fn>
void he_scale(benchmark::State& state) {
  const auto& b = he();
  for (auto _ : state) benchmark::DoNotOptimize(Fn(b.keys.public_key, b.c, b.scalars));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b.c.size()));
}

template <auto Fn>
void he_decrypt(benchmark::State& state) {
  const auto& b = he();
  for (auto _ : state) benchmark::DoNotOptimize(Fn(b.keys.secret_key, b.c));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b.c.size()));
}

}  // namespace

BENCHMARK(luhn<k::serial::luhn_validate>)->Name("luhn_batch/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(luhn<k::parallel::luhn_validate>)->Name("luhn_batch/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(gradient<k::serial::logistic_loss_gradient>)->Name("lr_gradient/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(gradient<k::parallel::logistic_loss_gradient>)->Name("lr_gradient/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(probabilities<k::serial::logistic_probabilities>)->Name("lr_proba/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(probabilities<k::parallel::logistic_probabilities>)->Name("lr_proba/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(he_encrypt<k::serial::he_encrypt>)->Name("he_encrypt/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(he_encrypt<k::parallel::he_encrypt>)->Name("he_encrypt/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(he_scale<k::serial::he_scale>)->Name("he_scale/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(he_scale<k::parallel::he_scale>)->Name("he_scale/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(he_decrypt<k::serial::he_decrypt>)->Name("he_decrypt/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(he_decrypt<k::parallel::he_decrypt>)->Name("he_decrypt/parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
