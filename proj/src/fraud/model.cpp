#include "cardless/fraud/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace cardless::fraud {
namespace {

constexpr std::string_view kModelMagic = "cardless-fraud-model";
constexpr int kModelVersion = 1;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ModelError(ModelError::Kind::format, "not a finite number: '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void check_dimension(const FraudModel& model, const FeatureVector& x) {
  if (x.size() != model.dimension()) {
    throw ModelError(ModelError::Kind::dimension_mismatch,
                     "feature vector has " + std::to_string(x.size()) +
                         " components, model expects " + std::to_string(model.dimension()));
  }
}

}  // namespace

FraudModel::FraudModel(double intercept, std::vector<double> coefficients,
                       std::vector<double> means, std::vector<double> stds,
                       double threshold)
    : intercept_(intercept),
      coefficients_(std::move(coefficients)),
      means_(std::move(means)),
      stds_(std::move(stds)),
      threshold_(threshold) {
  if (means_.size() != coefficients_.size() || stds_.size() != coefficients_.size()) {
    throw ModelError(ModelError::Kind::invalid, "model vectors disagree in length");
  }
  if (!(threshold_ > 0.0 && threshold_ < 1.0)) {
    throw ModelError(ModelError::Kind::invalid, "threshold must lie in (0, 1)");
  }
  for (double s : stds_) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ModelError(ModelError::Kind::invalid, "standardization stds must be positive");
    }
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::isfinite(intercept_) || !std::all_of(coefficients_.begin(), coefficients_.end(), finite) ||
      !std::all_of(means_.begin(), means_.end(), finite)) {
    throw ModelError(ModelError::Kind::invalid, "model parameters must be finite");
  }
}

FraudModel FraudModel::unscaled(double intercept, std::vector<double> coefficients,
                                double threshold) {
  const std::size_t d = coefficients.size();
  return FraudModel(intercept, std::move(coefficients), std::vector<double>(d, 0.0),
                    std::vector<double>(d, 1.0), threshold);
}

double FraudModel::logit(const FeatureVector& x) const {
  check_dimension(*this, x);
  double s = intercept_;
  for (std::size_t i = 0; i < coefficients_.size(); ++i) {
    s += coefficients_[i] * (x[i] - means_[i]) / stds_[i];
  }
  return s;
}

std::string FraudModel::serialize() const {
  std::ostringstream out;
  auto row = [&](std::string_view key, const std::vector<double>& v) {
    out << key;
    for (double x : v) out << ' ' << format_double(x);
    out << '\n';
  };
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "dimension " << dimension() << '\n';
  out << "threshold " << format_double(threshold_) << '\n';
  out << "intercept " << format_double(intercept_) << '\n';
  row("coefficients", coefficients_);
  row("means", means_);
  row("stds", stds_);
  return out.str();
}

FraudModel FraudModel::parse(std::string_view text) {
  std::vector<std::vector<std::string_view>> lines;
  for (auto line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    lines.push_back(split(line, ' '));
  }
  auto expect = [&](std::size_t i, std::string_view key) -> const std::vector<std::string_view>& {
    if (i >= lines.size() || lines[i].empty() || lines[i][0] != key) {
      throw ModelError(ModelError::Kind::format,
                       "model file: expected '" + std::string(key) + "' on record " +
                           std::to_string(i + 1));
    }
    return lines[i];
  };
  const auto& head = expect(0, kModelMagic);
  if (head.size() != 2 || head[1] != std::to_string(kModelVersion)) {
    throw ModelError(ModelError::Kind::format, "model file: unsupported version");
  }
  const auto& dim_line = expect(1, "dimension");
  if (dim_line.size() != 2) throw ModelError(ModelError::Kind::format, "model file: bad dimension");
  std::size_t dim = 0;
  auto res = std::from_chars(dim_line[1].data(), dim_line[1].data() + dim_line[1].size(), dim);
  if (res.ec != std::errc()) throw ModelError(ModelError::Kind::format, "model file: bad dimension");

  auto scalar = [&](std::size_t i, std::string_view key) {
    const auto& l = expect(i, key);
    if (l.size() != 2) throw ModelError(ModelError::Kind::format, "model file: bad " + std::string(key));
    return parse_double(l[1]);
  };
  auto vec = [&](std::size_t i, std::string_view key) {
    const auto& l = expect(i, key);
    if (l.size() != dim + 1) {
      throw ModelError(ModelError::Kind::format,
                       "model file: '" + std::string(key) + "' needs " + std::to_string(dim) + " values");
    }
    std::vector<double> v;
    for (std::size_t k = 1; k < l.size(); ++k) v.push_back(parse_double(l[k]));
    return v;
  };
  const double threshold = scalar(2, "threshold");
  const double intercept = scalar(3, "intercept");
  auto coefficients = vec(4, "coefficients");
  auto means = vec(5, "means");
  auto stds = vec(6, "stds");
  if (lines.size() != 7) throw ModelError(ModelError::Kind::format, "model file: trailing records");
  return FraudModel(intercept, std::move(coefficients), std::move(means), std::move(stds), threshold);
}

double predict_proba(const FraudModel& model, const FeatureVector& x) {
  const double p = kernels::sigmoid(model.logit(x));
  // Rounding saturates at 0 or 1 for |logit| beyond ~37 (upper) and ~745
  // (lower); keep the probability strictly inside the open interval.
  return std::clamp(p, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
}

Verdict classify_probability(double p, double threshold) {
  return p >= threshold ? Verdict::fraud : Verdict::legit;
}

Verdict classify(const FraudModel& model, const FeatureVector& x) {
  return classify_probability(predict_proba(model, x), model.threshold());
}

Standardization fit_standardization(const LabeledDataset& data) {
  if (data.empty()) throw ModelError(ModelError::Kind::empty_dataset, "empty dataset");
  const std::size_t d = data.rows.front().x.size();
  Standardization s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (const auto& row : data.rows) {
    if (row.x.size() != d) {
      throw ModelError(ModelError::Kind::dimension_mismatch, "dataset rows differ in dimension");
    }
    for (std::size_t j = 0; j < d; ++j) s.means[j] += row.x[j];
  }
  const double n = static_cast<double>(data.size());
  for (auto& m : s.means) m /= n;
  for (const auto& row : data.rows) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = row.x[j] - s.means[j];
      s.stds[j] += diff * diff;
    }
  }
  for (auto& v : s.stds) {
    v = std::sqrt(v / n);
    if (!(v > 1e-12)) v = 1.0;
  }
  return s;
}

kernels::DesignMatrix standardized_design(const LabeledDataset& data,
                                          const Standardization& scaling) {
  kernels::DesignMatrix m;
  m.rows = data.size();
  m.cols = scaling.means.size();
  m.values.reserve(m.rows * m.cols);
  for (const auto& row : data.rows) {
    if (row.x.size() != m.cols) {
      throw ModelError(ModelError::Kind::dimension_mismatch, "dataset rows differ in dimension");
    }
    for (std::size_t j = 0; j < m.cols; ++j) {
      m.values.push_back((row.x[j] - scaling.means[j]) / scaling.stds[j]);
    }
  }
  return m;
}

FraudModel train(const LabeledDataset& data, const TrainOptions& options,
                 std::vector<double>* loss_history) {
  if (data.empty()) throw ModelError(ModelError::Kind::empty_dataset, "empty dataset");
  if (!(options.learning_rate > 0.0)) {
    throw ModelError(ModelError::Kind::invalid, "learning rate must be positive");
  }
  if (options.epochs < 0 || options.l2 < 0.0) {
    throw ModelError(ModelError::Kind::invalid, "epochs and l2 must be non-negative");
  }
  std::vector<double> labels;
  labels.reserve(data.size());
  bool has_fraud = false;
  bool has_legit = false;
  for (const auto& row : data.rows) {
    if (row.label != 0 && row.label != 1) {
      throw ModelError(ModelError::Kind::invalid, "labels must be 0 or 1");
    }
    (row.label == 1 ? has_fraud : has_legit) = true;
    labels.push_back(row.label);
  }
  if (!has_fraud || !has_legit) {
    throw ModelError(ModelError::Kind::single_class, "training data contains a single class");
  }

  const Standardization scaling = fit_standardization(data);
  const kernels::DesignMatrix design = standardized_design(data, scaling);
  std::vector<double> beta(design.cols + 1, 0.0);
  std::vector<double> gradient(beta.size(), 0.0);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const double loss =
        kernels::parallel::logistic_loss_gradient(design, labels, beta, options.l2, gradient);
    if (!std::isfinite(loss)) {
      throw ModelError(ModelError::Kind::divergence,
                       "training diverged at epoch " + std::to_string(epoch), epoch);
    }
    if (loss_history) loss_history->push_back(loss);
    for (std::size_t j = 0; j < beta.size(); ++j) beta[j] -= options.learning_rate * gradient[j];
  }
  for (std::size_t j = 0; j < beta.size(); ++j) {
    if (!std::isfinite(beta[j])) {
      throw ModelError(ModelError::Kind::divergence, "training diverged", options.epochs);
    }
  }
  return FraudModel(beta[0], std::vector<double>(beta.begin() + 1, beta.end()), scaling.means,
                    scaling.stds, options.threshold);
}

double ConfusionMatrix::precision() const {
  const auto flagged = true_positive + false_positive;
  return flagged == 0 ? 0.0 : static_cast<double>(true_positive) / static_cast<double>(flagged);
}

double ConfusionMatrix::recall() const {
  const auto positives = true_positive + false_negative;
  return positives == 0 ? 0.0 : static_cast<double>(true_positive) / static_cast<double>(positives);
}

double ConfusionMatrix::accuracy() const {
  const auto n = total();
  return n == 0 ? 0.0 : static_cast<double>(true_positive + true_negative) / static_cast<double>(n);
}

std::optional<double> auc_rank(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc_rank: size mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  std::uint64_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::uint64_t negatives = n - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

Metrics evaluate(const FraudModel& model, const LabeledDataset& data) {
  Metrics m;
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(data.size());
  labels.reserve(data.size());
  for (const auto& row : data.rows) {
    const double p = predict_proba(model, row.x);
    const bool flagged = classify_probability(p, model.threshold()) == Verdict::fraud;
    if (row.label == 1) {
      ++(flagged ? m.confusion.true_positive : m.confusion.false_negative);
    } else {
      ++(flagged ? m.confusion.false_positive : m.confusion.true_negative);
    }
    scores.push_back(p);
    labels.push_back(row.label);
  }
  m.precision = m.confusion.precision();
  m.recall = m.confusion.recall();
  m.accuracy = m.confusion.accuracy();
  m.auc = auc_rank(scores, labels);
  return m;
}

std::string dataset_to_csv(const LabeledDataset& data) {
  std::string out = "label";
  const std::size_t d = data.empty() ? kFeatureCount : data.rows.front().x.size();
  for (std::size_t j = 0; j < d; ++j) out += ",x" + std::to_string(j + 1);
  out += '\n';
  for (const auto& row : data.rows) {
    out += std::to_string(row.label);
    for (double v : row.x.values) out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

LabeledDataset dataset_from_csv(std::string_view text) {
  auto lines = split(text, '\n');
  if (lines.empty() || lines.front().substr(0, 5) != "label") {
    throw ModelError(ModelError::Kind::format, "dataset: missing header");
  }
  std::string_view header = lines.front();
  if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
  const std::size_t d = split(header, ',').size() - 1;
  LabeledDataset data;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != d + 1 || (fields[0] != "0" && fields[0] != "1")) {
      throw ModelError(ModelError::Kind::format, "dataset: malformed line " + std::to_string(i + 1));
    }
    LabeledRow row;
    row.label = fields[0] == "1" ? 1 : 0;
    for (std::size_t j = 1; j < fields.size(); ++j) row.x.values.push_back(parse_double(fields[j]));
    data.rows.push_back(std::move(row));
  }
  return data;
}

}  // namespace cardless::fraud
