#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cardless/fraud/features.hpp"
#include "cardless/kernels/kernels.hpp"

// Logistic-regression fraud scorer:
//   p(x) = 1 / (1 + exp(-(b0 + sum_i b_i z_i))),  z_i = (x_i - mean_i) / std_i
// A transaction is fraud when p >= threshold.
namespace cardless::fraud {

class ModelError : public std::runtime_error {
 public:
  enum class Kind { dimension_mismatch, empty_dataset, single_class, divergence, invalid, format };
  ModelError(Kind kind, const std::string& what, std::optional<int> epoch = std::nullopt)
      : std::runtime_error(what), kind_(kind), epoch_(epoch) {}
  Kind kind() const { return kind_; }
  // Set for divergence: the epoch whose loss was non-finite.
  std::optional<int> epoch() const { return epoch_; }

 private:
  Kind kind_;
  std::optional<int> epoch_;
};

struct LabeledRow {
  FeatureVector x;
  int label = 0;  // 0 legit, 1 fraud
};

struct LabeledDataset {
  std::vector<LabeledRow> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
};

class FraudModel {
 public:
  // Throws ModelError(invalid) unless lengths agree, stds > 0 and
  // 0 < threshold < 1.
  FraudModel(double intercept, std::vector<double> coefficients,
             std::vector<double> means, std::vector<double> stds,
             double threshold = 0.5);

  // Model over already-standardized features (means 0, stds 1).
  static FraudModel unscaled(double intercept, std::vector<double> coefficients,
                             double threshold = 0.5);

  double intercept() const { return intercept_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& stds() const { return stds_; }
  double threshold() const { return threshold_; }
  std::size_t dimension() const { return coefficients_.size(); }

  double logit(const FeatureVector& x) const;

  // Versioned text form; numbers use the shortest round-trip representation.
  std::string serialize() const;
  static FraudModel parse(std::string_view text);

  friend bool operator==(const FraudModel&, const FraudModel&) = default;

 private:
  double intercept_;
  std::vector<double> coefficients_;
  std::vector<double> means_;
  std::vector<double> stds_;
  double threshold_;
};

enum class Verdict { legit, fraud };

// Strictly inside (0, 1) for every finite input.
double predict_proba(const FraudModel& model, const FeatureVector& x);
// fraud iff p >= threshold.
Verdict classify(const FraudModel& model, const FeatureVector& x);
Verdict classify_probability(double p, double threshold);

struct TrainOptions {
  double learning_rate = 0.1;
  int epochs = 500;
  double l2 = 1e-4;
  double threshold = 0.5;
};

// Full-batch gradient descent on the L2-regularised negative log-likelihood
// over standardized features. Deterministic for fixed inputs, independent of
// the OpenMP thread count. `loss_history`, when given, receives the loss
// before each update.
FraudModel train(const LabeledDataset& data, const TrainOptions& options,
                 std::vector<double>* loss_history = nullptr);

struct Standardization {
  std::vector<double> means;
  std::vector<double> stds;  // population std; constant columns get 1
};
Standardization fit_standardization(const LabeledDataset& data);
kernels::DesignMatrix standardized_design(const LabeledDataset& data,
                                          const Standardization& scaling);

struct ConfusionMatrix {
  std::uint64_t true_positive = 0;
  std::uint64_t false_positive = 0;
  std::uint64_t true_negative = 0;
  std::uint64_t false_negative = 0;

  std::uint64_t total() const {
    return true_positive + false_positive + true_negative + false_negative;
  }
  double precision() const;  // 0 when nothing was flagged
  double recall() const;     // 0 when there are no positives
  double accuracy() const;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct Metrics {
  ConfusionMatrix confusion;
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  std::optional<double> auc;  // absent when one class is missing
};

Metrics evaluate(const FraudModel& model, const LabeledDataset& data);

// Mann-Whitney rank statistic with average ranks for ties.
std::optional<double> auc_rank(std::span<const double> scores, std::span<const int> labels);

// CSV: header "label,x1,...,xk", one row per example.
std::string dataset_to_csv(const LabeledDataset& data);
LabeledDataset dataset_from_csv(std::string_view text);

}  // namespace cardless::fraud
