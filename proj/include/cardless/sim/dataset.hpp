#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cardless/common/random.hpp"
#include "cardless/fraud/features.hpp"
#include "cardless/fraud/model.hpp"

// Synthetic cardholder behaviour. Each example is one account: a history of
// 20-30 past transactions and a candidate transaction at `now`.
//
// Legitimate activity: amounts ~ N(mu, 0.3 mu) with mu log-uniform in
// [10.00, 100.00] (floor 0.50), gaps with log10(minutes) ~ N(1.5, 0.5),
// 85% of purchases in three favourite categories, channels 85/10/5
// merchant/atm/transfer.
//
// Fraud shifts the candidate amount by `separation` standard deviations and
// the candidate gap plus the 14 gaps before it by `separation` standard
// deviations of the log-gap (a burst).
namespace cardless::sim {

inline constexpr int kCategoryCount = 12;
inline constexpr int kBurstGaps = 15;
inline constexpr double kGapLogMean = 1.5;
inline constexpr double kGapLogStd = 0.5;
inline constexpr std::int64_t kAmountFloor = 50;

std::string category_name(int index);

struct Profile {
  double mean_amount = 0.0;
  double std_amount = 0.0;
  std::array<int, 3> favourites{};
};

struct GeneratedExample {
  std::vector<fraud::TransactionRecord> history;
  fraud::TransactionRecord candidate;
  int label = 0;
};

Profile draw_profile(RandomSource& rng);

// History rows end strictly before `now`; the candidate is at `now`.
GeneratedExample generate_example(RandomSource& rng, bool fraud, double separation,
                                  std::int64_t now);

// Throws std::invalid_argument unless 0 <= fraud_rate <= 1 and
// separation >= 0. n = 0 yields an empty dataset.
fraud::LabeledDataset gen_dataset(std::uint64_t seed, std::size_t n, double fraud_rate,
                                  double separation);

// First `train_fraction` of the rows, then the rest.
std::pair<fraud::LabeledDataset, fraud::LabeledDataset> split(const fraud::LabeledDataset& data,
                                                              double train_fraction);

}  // namespace cardless::sim
