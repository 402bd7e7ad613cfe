#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string_view>

#include "cardless/common/bytes.hpp"

namespace cardless {

// Source of random bits. Models UniformRandomBitGenerator so it can drive the
// <random> distributions directly. Instances are not thread-safe.
class RandomSource {
 public:
  using result_type = std::uint64_t;

  virtual ~RandomSource() = default;

  virtual std::uint64_t next_u64() = 0;
  virtual void fill(std::span<std::uint8_t> out);

  result_type operator()() { return next_u64(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  // Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t uniform(std::uint64_t bound);
  Bytes bytes(std::size_t n);
};

// Operating-system CSPRNG (OpenSSL RAND_bytes).
class SystemRandom final : public RandomSource {
 public:
  std::uint64_t next_u64() override;
  void fill(std::span<std::uint8_t> out) override;
};

// Reproducible stream for simulation and tests.
class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next_u64() override { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Independent sub-seed for a named stream: first 8 bytes of
// SHA-256(seed_be || label).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

}  // namespace cardless
