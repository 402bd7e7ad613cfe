#include "cardless/sim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace cardless::sim {
namespace {

constexpr std::int64_t kEpoch = 1'000'000'000;

double uniform01(RandomSource& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double normal(RandomSource& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

int draw_category(RandomSource& rng, const Profile& p) {
  if (uniform01(rng) < 0.85) return p.favourites[rng.uniform(3)];
  return static_cast<int>(rng.uniform(kCategoryCount));
}

fraud::Channel draw_channel(RandomSource& rng) {
  double u = uniform01(rng);
  if (u < 0.85) return fraud::Channel::merchant;
  if (u < 0.95) return fraud::Channel::atm;
  return fraud::Channel::transfer;
}

std::int64_t draw_amount(RandomSource& rng, const Profile& p, double shift) {
  double a = std::round(p.mean_amount + (normal(rng) + shift) * p.std_amount);
  return std::max<std::int64_t>(kAmountFloor, static_cast<std::int64_t>(a));
}

}  // namespace

std::string category_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "cat-%02d", index);
  return buf;
}

Profile draw_profile(RandomSource& rng) {
  Profile p;
  p.mean_amount = std::pow(10.0, 3.0 + uniform01(rng));
  p.std_amount = 0.3 * p.mean_amount;
  std::array<int, kCategoryCount> cats{};
  for (int i = 0; i < kCategoryCount; ++i) cats[i] = i;
  // Partial Fisher-Yates: three distinct favourites.
  for (int i = 0; i < 3; ++i) {
    int j = i + static_cast<int>(rng.uniform(kCategoryCount - i));
    std::swap(cats[i], cats[j]);
  }
  std::copy_n(cats.begin(), 3, p.favourites.begin());
  return p;
}

GeneratedExample generate_example(RandomSource& rng, bool fraud, double separation,
                                  std::int64_t now) {
  const Profile p = draw_profile(rng);
  const int rows = 20 + static_cast<int>(rng.uniform(11));

  // Timestamps walk backwards from the candidate; gap i precedes row i.
  std::vector<std::int64_t> times;
  times.reserve(rows);
  double cursor = static_cast<double>(now);
  for (int i = 0; i < rows; ++i) {
    double shift = (fraud && i < kBurstGaps) ? separation : 0.0;
    double minutes = std::pow(10.0, kGapLogMean - shift * kGapLogStd + kGapLogStd * normal(rng));
    cursor -= minutes * 60.0;
    times.push_back(static_cast<std::int64_t>(std::floor(cursor)));
  }
  std::reverse(times.begin(), times.end());

  GeneratedExample ex;
  ex.label = fraud ? 1 : 0;
  ex.history.reserve(rows);
  for (std::int64_t t : times) {
    fraud::TransactionRecord r;
    r.timestamp = std::min(t, now);
    r.amount_minor = draw_amount(rng, p, 0.0);
    r.category = category_name(draw_category(rng, p));
    r.channel = draw_channel(rng);
    ex.history.push_back(std::move(r));
  }
  ex.candidate.timestamp = now;
  ex.candidate.amount_minor = draw_amount(rng, p, fraud ? separation : 0.0);
  ex.candidate.category = category_name(draw_category(rng, p));
  ex.candidate.channel = draw_channel(rng);
  return ex;
}

fraud::LabeledDataset gen_dataset(std::uint64_t seed, std::size_t n, double fraud_rate,
                                  double separation) {
  if (!(fraud_rate >= 0.0 && fraud_rate <= 1.0)) {
    throw std::invalid_argument("fraud_rate must lie in [0, 1]");
  }
  if (!(separation >= 0.0)) throw std::invalid_argument("separation must be non-negative");
  SeededRandom rng(seed);
  fraud::LabeledDataset data;
  data.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool is_fraud = uniform01(rng) < fraud_rate;
    auto ex = generate_example(rng, is_fraud, separation, kEpoch);
    data.rows.push_back({fraud::extract_features(ex.history, ex.candidate), ex.label});
  }
  return data;
}

std::pair<fraud::LabeledDataset, fraud::LabeledDataset> split(const fraud::LabeledDataset& data,
                                                              double train_fraction) {
  const auto cut = static_cast<std::size_t>(std::llround(train_fraction * data.rows.size()));
  fraud::LabeledDataset train, test;
  train.rows.assign(data.rows.begin(), data.rows.begin() + std::min(cut, data.rows.size()));
  test.rows.assign(data.rows.begin() + std::min(cut, data.rows.size()), data.rows.end());
  return {std::move(train), std::move(test)};
}

}  // namespace cardless::sim
