#include "cardless/fraud/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace cardless::fraud {

FeatureVector extract_features(std::span<const TransactionRecord> history,
                               const TransactionRecord& txn) {
  if (txn.amount_minor < 0) throw std::invalid_argument("negative transaction amount");
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i].timestamp < history[i - 1].timestamp) {
      throw OrderingError("history is not ordered by timestamp");
    }
  }
  if (!history.empty() && txn.timestamp < history.back().timestamp) {
    throw OrderingError("transaction precedes the latest history timestamp");
  }

  const double amount = static_cast<double>(txn.amount_minor);
  FeatureVector f;
  f.values.assign(kFeatureCount, 0.0);
  f.values[1] = std::log10(1.0 + amount);

  if (history.empty()) {
    f.values[3] = 1.0;
    f.values[4] = 1.0;
    f.values[5] = 1.0;
    return f;
  }

  double sum = 0.0;
  std::size_t approved = 0;
  for (const auto& row : history) {
    if (!row.approved) continue;
    sum += static_cast<double>(row.amount_minor);
    ++approved;
  }
  if (approved > 0) {
    const double mean = sum / static_cast<double>(approved);
    double sq = 0.0;
    for (const auto& row : history) {
      if (!row.approved) continue;
      const double d = static_cast<double>(row.amount_minor) - mean;
      sq += d * d;
    }
    const double sd = std::sqrt(sq / static_cast<double>(approved));
    f.values[0] = (amount - mean) / std::max(sd, 1.0);
  }

  const std::int64_t window_start = txn.timestamp - kVelocityWindowSeconds;
  f.values[2] = static_cast<double>(
      std::count_if(history.begin(), history.end(),
                    [&](const TransactionRecord& r) { return r.timestamp > window_start; }));

  const bool seen = std::any_of(history.begin(), history.end(), [&](const auto& r) {
    return r.category == txn.category;
  });
  f.values[3] = seen ? 0.0 : 1.0;

  const double minutes =
      static_cast<double>(txn.timestamp - history.back().timestamp) / 60.0;
  f.values[4] = std::log10(1.0 + std::min(minutes, kRecencyCapMinutes)) /
                std::log10(1.0 + kRecencyCapMinutes);

  std::array<std::size_t, 3> counts{};
  for (const auto& row : history) ++counts[static_cast<std::size_t>(row.channel)];
  // Ties resolve to the lowest channel code.
  const auto modal = static_cast<std::size_t>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
  f.values[5] = modal == static_cast<std::size_t>(txn.channel) ? 0.0 : 1.0;
  return f;
}

}  // namespace cardless::fraud
