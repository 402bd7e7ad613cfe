#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cardless::fraud {

class OrderingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Channel : std::uint8_t { merchant = 0, atm = 1, transfer = 2 };

struct TransactionRecord {
  std::int64_t timestamp = 0;  // unix seconds
  std::int64_t amount_minor = 0;
  std::string category;
  Channel channel = Channel::merchant;
  // Declined attempts stay in the history but not in spend statistics.
  bool approved = true;

  friend bool operator==(const TransactionRecord&, const TransactionRecord&) = default;
};

struct FeatureVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

inline constexpr std::size_t kFeatureCount = 6;

// Feature layout:
//   0  amount z-score against approved history amounts (std floored at 1)
//   1  log10(1 + amount_minor)
//   2  history rows within the hour before the candidate
//   3  merchant category never seen in history {0,1}
//   4  log10(1 + min(minutes since previous row, 1440)) / log10(1441)
//   5  channel differs from the modal history channel {0,1}
//
// Empty history: z = 0, velocity 0, novelty 1, recency 1, mismatch 1.
inline constexpr double kRecencyCapMinutes = 1440.0;
inline constexpr std::int64_t kVelocityWindowSeconds = 3600;

// History must be ordered by timestamp and not later than `txn`
// (OrderingError otherwise).
FeatureVector extract_features(std::span<const TransactionRecord> history,
                               const TransactionRecord& txn);

}  // namespace cardless::fraud
