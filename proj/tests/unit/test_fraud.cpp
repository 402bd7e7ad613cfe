#include <doctest.h>

#include <cmath>

#include "cardless/common/random.hpp"
#include "cardless/fraud/features.hpp"
#include "cardless/fraud/model.hpp"
#include "oracles.hpp"

using namespace cardless;
using namespace cardless::fraud;

namespace {

constexpr std::int64_t kT0 = 1'000'000;

TransactionRecord row(std::int64_t t, std::int64_t amount, std::string category,
                      Channel channel = Channel::merchant, bool approved = true) {
  return {kT0 + t, amount, std::move(category), channel, approved};
}

LabeledDataset random_dataset(RandomSource& rng, std::size_t n, double shift) {
  std::normal_distribution<double> normal(0.0, 1.0);
  LabeledDataset d;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(rng.uniform(2));
    FeatureVector x;
    for (std::size_t j = 0; j < kFeatureCount; ++j) x.values.push_back(normal(rng) + y * shift);
    d.rows.push_back({x, y});
  }
  return d;
}

ModelError::Kind model_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const ModelError& e) {
    return e.kind();
  }
  FAIL("no ModelError thrown");
  return ModelError::Kind::invalid;
}

}  // namespace

TEST_CASE("features of a three-row history, by hand") {
  // Amounts 1000, 2000, 3000: mean 2000, population sd sqrt(2e6 / 3), so a
  // 4000 candidate has z = 2000 / sqrt(666666.67) = sqrt(6).
  // Rows at +1800 s and +3000 s fall in the hour before +3600 s; +0 does not.
  // Category "c" is new. Ten minutes since the last row. Modal channel is
  // merchant, the candidate is an ATM withdrawal.
  std::vector<TransactionRecord> history = {
      row(0, 1000, "a"), row(1800, 2000, "b"), row(3000, 3000, "a", Channel::atm)};
  auto f = extract_features(history, row(3600, 4000, "c", Channel::atm));
  REQUIRE(f.size() == kFeatureCount);
  CHECK(f[0] == doctest::Approx(std::sqrt(6.0)).epsilon(1e-12));
  CHECK(f[1] == doctest::Approx(std::log10(4001.0)).epsilon(1e-12));
  CHECK(f[2] == 2.0);
  CHECK(f[3] == 1.0);
  CHECK(f[4] == doctest::Approx(std::log10(11.0) / std::log10(1441.0)).epsilon(1e-12));
  CHECK(f[5] == 1.0);

  // Same candidate in a seen category through the modal channel.
  auto g = extract_features(history, row(3600, 2000, "b", Channel::merchant));
  CHECK(g[0] == 0.0);
  CHECK(g[3] == 0.0);
  CHECK(g[5] == 0.0);
}

TEST_CASE("feature base cases") {
  auto empty = extract_features({}, row(0, 500, "x", Channel::transfer));
  CHECK(empty[0] == 0.0);
  CHECK(empty[2] == 0.0);
  CHECK(empty[3] == 1.0);
  CHECK(empty[4] == 1.0);
  CHECK(empty[5] == 1.0);

  // Recency saturates at one day.
  std::vector<TransactionRecord> old = {row(0, 100, "x")};
  CHECK(extract_features(old, row(86400 * 3, 100, "x"))[4] == doctest::Approx(1.0));
  CHECK(extract_features(old, row(0, 100, "x"))[4] == 0.0);

  // A constant history has sd 0, floored at 1.
  std::vector<TransactionRecord> flat = {row(0, 100, "x"), row(60, 100, "x")};
  CHECK(extract_features(flat, row(120, 105, "x"))[0] == 5.0);

  // Declined rows count for velocity and novelty but not for spend statistics.
  std::vector<TransactionRecord> mixed = {row(0, 100, "x"), row(60, 9000, "y", Channel::merchant, false)};
  auto m = extract_features(mixed, row(120, 100, "y"));
  CHECK(m[0] == 0.0);
  CHECK(m[2] == 2.0);
  CHECK(m[3] == 0.0);
}

TEST_CASE("feature ordering errors") {
  std::vector<TransactionRecord> unordered = {row(100, 1, "a"), row(0, 1, "a")};
  CHECK_THROWS_AS(extract_features(unordered, row(200, 1, "a")), OrderingError);
  std::vector<TransactionRecord> later = {row(100, 1, "a")};
  CHECK_THROWS_AS(extract_features(later, row(50, 1, "a")), OrderingError);
}

TEST_CASE("features are finite and flags binary for random histories") {
  SeededRandom rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<TransactionRecord> h;
    std::int64_t t = 0;
    const std::size_t len = rng.uniform(30);
    for (std::size_t i = 0; i < len; ++i) {
      t += static_cast<std::int64_t>(rng.uniform(7200));
      h.push_back(row(t, static_cast<std::int64_t>(rng.uniform(1'000'000)),
                      "c" + std::to_string(rng.uniform(5)), static_cast<Channel>(rng.uniform(3)),
                      rng.uniform(4) != 0));
    }
    auto f = extract_features(h, row(t + static_cast<std::int64_t>(rng.uniform(5000)),
                                     static_cast<std::int64_t>(rng.uniform(1'000'000)),
                                     "c" + std::to_string(rng.uniform(7)),
                                     static_cast<Channel>(rng.uniform(3))));
    for (double v : f.values) REQUIRE(std::isfinite(v));
    REQUIRE((f[3] == 0.0 || f[3] == 1.0));
    REQUIRE((f[5] == 0.0 || f[5] == 1.0));
    REQUIRE(f[4] >= 0.0);
    REQUIRE(f[4] <= 1.0);
  }
}

TEST_CASE("predict_proba") {
  FeatureVector x1{{0.5}};
  CHECK(predict_proba(FraudModel::unscaled(0.0, {0.0}), x1) == 0.5);
  CHECK(predict_proba(FraudModel::unscaled(20.0, {0.0}), x1) > 0.9999999);
  CHECK(predict_proba(FraudModel::unscaled(20.0, {0.0}), x1) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-20.0))).epsilon(1e-15));
  CHECK(predict_proba(FraudModel::unscaled(-1.0, {2.0}), x1) == 0.5);
  // Standardization: z = (3 - 1) / 2 = 1, logit = 0.5 + 1.5 = 2.
  FraudModel scaled(0.5, {1.5}, {1.0}, {2.0});
  CHECK(scaled.logit(FeatureVector{{3.0}}) == doctest::Approx(2.0));
  CHECK(model_error([&] { predict_proba(scaled, FeatureVector{{1.0, 2.0}}); }) ==
        ModelError::Kind::dimension_mismatch);
}

TEST_CASE("predict_proba stays strictly inside (0, 1)") {
  for (double logit : {-700.0, -500.0, -40.0, 0.0, 40.0, 500.0, 700.0}) {
    const double p = predict_proba(FraudModel::unscaled(logit, {0.0}), FeatureVector{{0.0}});
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
}

TEST_CASE("classification threshold") {
  CHECK(classify_probability(0.49, 0.5) == Verdict::legit);
  CHECK(classify_probability(0.50, 0.5) == Verdict::fraud);
  CHECK(classify_probability(0.51, 0.5) == Verdict::fraud);
  SeededRandom rng(22);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int i = 0; i < 2000; ++i) {
    auto model = FraudModel::unscaled(normal(rng), {normal(rng), normal(rng)},
                                      0.05 + 0.9 * (rng.uniform(1000) / 1000.0));
    FeatureVector x{{normal(rng), normal(rng)}};
    const bool fraud = predict_proba(model, x) >= model.threshold();
    REQUIRE((classify(model, x) == Verdict::fraud) == fraud);
  }
}

TEST_CASE("probability is monotone in a positively weighted feature") {
  SeededRandom rng(23);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> beta = {normal(rng), normal(rng), normal(rng)};
    const std::size_t j = rng.uniform(3);
    beta[j] = std::abs(beta[j]);
    FraudModel model(normal(rng), beta, {0.0, 1.0, -1.0}, {1.0, 2.0, 0.5});
    FeatureVector x{{normal(rng), normal(rng), normal(rng)}};
    FeatureVector y = x;
    y.values[j] += std::abs(normal(rng));
    REQUIRE(predict_proba(model, y) >= predict_proba(model, x));
  }
}

TEST_CASE("model construction is validated") {
  CHECK(model_error([] { FraudModel(0, {1, 2}, {0}, {1, 1}); }) == ModelError::Kind::invalid);
  CHECK(model_error([] { FraudModel(0, {1}, {0}, {0}); }) == ModelError::Kind::invalid);
  CHECK(model_error([] { FraudModel(0, {1}, {0}, {1}, 1.0); }) == ModelError::Kind::invalid);
  CHECK(model_error([] { FraudModel(0, {1}, {0}, {1}, 0.0); }) == ModelError::Kind::invalid);
  CHECK(model_error([] { FraudModel(NAN, {1}, {0}, {1}); }) == ModelError::Kind::invalid);
}

TEST_CASE("model text round trip is exact") {
  FraudModel m(0.1 + 0.2, {1.0 / 3.0, -2e-17, 12345.678}, {0.5, 1e300, -7.25}, {1.0, 2.0, 1e-300},
               0.37);
  const std::string text = m.serialize();
  CHECK(FraudModel::parse(text) == m);
  CHECK(FraudModel::parse(text).serialize() == text);
  CHECK(model_error([] { FraudModel::parse("garbage"); }) == ModelError::Kind::format);
  CHECK(model_error([&] { FraudModel::parse(text + "extra 1\n"); }) == ModelError::Kind::format);
}

TEST_CASE("gradient at zero has the closed form") {
  SeededRandom rng(24);
  auto data = random_dataset(rng, 50, 0.5);
  auto scaling = fit_standardization(data);
  auto x = standardized_design(data, scaling);
  std::vector<double> labels;
  for (const auto& r : data.rows) labels.push_back(r.label);
  std::vector<double> beta(kFeatureCount + 1, 0.0), grad(kFeatureCount + 1);
  const double loss = kernels::serial::logistic_loss_gradient(x, labels, beta, 1e-4, grad);
  CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  std::vector<double> expect(kFeatureCount + 1, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double w = (0.5 - labels[r]) / static_cast<double>(x.rows);
    expect[0] += w;
    for (std::size_t j = 0; j < x.cols; ++j) expect[j + 1] += w * x.row(r)[j];
  }
  for (std::size_t k = 0; k < expect.size(); ++k) CHECK(grad[k] == doctest::Approx(expect[k]).epsilon(1e-12));
}

TEST_CASE("analytic gradient agrees with central differences") {
  SeededRandom rng(25);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int draw = 0; draw < 20; ++draw) {
    auto data = random_dataset(rng, 30 + rng.uniform(30), 0.7);
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    std::vector<double> labels;
    kernels::DesignMatrix x{data.size(), kFeatureCount, {}};
    for (const auto& r : data.rows) {
      xs.push_back(r.x.values);
      ys.push_back(r.label);
      labels.push_back(r.label);
      x.values.insert(x.values.end(), r.x.values.begin(), r.x.values.end());
    }
    std::vector<double> beta(kFeatureCount + 1);
    for (auto& b : beta) b = normal(rng);
    std::vector<double> grad(beta.size());
    const double l2 = 1e-3;
    const double loss = kernels::serial::logistic_loss_gradient(x, labels, beta, l2, grad);
    std::vector<long double> lbeta(beta.begin(), beta.end());
    CHECK(loss == doctest::Approx(static_cast<double>(oracle::logistic_loss(lbeta, xs, ys, l2))).epsilon(1e-12));
    const auto fd = oracle::fd_gradient(beta, xs, ys, l2, 1e-5);
    for (std::size_t k = 0; k < beta.size(); ++k) {
      const double denom = std::max({std::abs(grad[k]), std::abs(fd[k]), 1e-8});
      REQUIRE(std::abs(grad[k] - fd[k]) / denom < 1e-5);
    }
  }
}

TEST_CASE("training separates two clusters") {
  // Centres at -2 and +2 on the first feature.
  SeededRandom rng(26);
  std::normal_distribution<double> noise(0.0, 0.5);
  LabeledDataset d;
  for (int i = 0; i < 200; ++i) {
    const int y = i % 2;
    d.rows.push_back({FeatureVector{{(y ? 2.0 : -2.0) + noise(rng), noise(rng)}}, y});
  }
  std::vector<double> losses;
  auto model = train(d, {0.1, 500, 1e-4, 0.5}, &losses);
  auto metrics = evaluate(model, d);
  CHECK(metrics.accuracy == 1.0);
  CHECK(metrics.auc.value() == 1.0);
  REQUIRE(losses.size() == 500);
  for (std::size_t i = 1; i < losses.size(); ++i) REQUIRE(losses[i] <= losses[i - 1] + 1e-15);
  CHECK(model.coefficients()[0] > 0.0);
}

TEST_CASE("training is deterministic") {
  SeededRandom rng(27);
  auto d = random_dataset(rng, 3000, 0.8);
  auto a = train(d, {0.3, 200, 1e-4, 0.5});
  auto b = train(d, {0.3, 200, 1e-4, 0.5});
  CHECK(a == b);
  CHECK(a.serialize() == b.serialize());
}

TEST_CASE("training errors") {
  LabeledDataset empty;
  CHECK(model_error([&] { train(empty, {}); }) == ModelError::Kind::empty_dataset);
  LabeledDataset one_class{{{FeatureVector{{1.0}}, 1}, {FeatureVector{{2.0}}, 1}}};
  CHECK(model_error([&] { train(one_class, {}); }) == ModelError::Kind::single_class);
  LabeledDataset ragged{{{FeatureVector{{1.0}}, 0}, {FeatureVector{{2.0, 3.0}}, 1}}};
  CHECK(model_error([&] { train(ragged, {}); }) == ModelError::Kind::dimension_mismatch);
  LabeledDataset ok{{{FeatureVector{{1.0}}, 0}, {FeatureVector{{2.0}}, 1}}};
  CHECK(model_error([&] { train(ok, {0.0, 10, 0.0, 0.5}); }) == ModelError::Kind::invalid);
  try {
    train(ok, {1e308, 50, 1e308, 0.5});
    FAIL("divergence not reported");
  } catch (const ModelError& e) {
    CHECK(e.kind() == ModelError::Kind::divergence);
    REQUIRE(e.epoch().has_value());
    CHECK(*e.epoch() >= 0);
  }
}

TEST_CASE("evaluate and AUC") {
  // Positives 0.9, 0.4; negatives 0.6, 0.2. Pairs won: (0.9,0.6) (0.9,0.2)
  // (0.4,0.2); lost (0.4,0.6). AUC 3/4.
  std::vector<double> s = {0.9, 0.4, 0.6, 0.2};
  std::vector<int> y = {1, 1, 0, 0};
  CHECK(auc_rank(s, y).value() == 0.75);
  CHECK(oracle::pairwise_auc(s, y) == 0.75);

  std::vector<double> constant(4, 0.3);
  CHECK(auc_rank(constant, y).value() == 0.5);
  std::vector<int> one_class = {1, 1, 1, 1};
  CHECK_FALSE(auc_rank(s, one_class).has_value());

  SeededRandom rng(28);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform(60);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.uniform(8)) / 8.0;  // many ties
      labels[i] = static_cast<int>(rng.uniform(2));
    }
    labels[0] = 0;
    labels[1] = 1;
    REQUIRE(auc_rank(scores, labels).value() == doctest::Approx(oracle::pairwise_auc(scores, labels)));
  }

  ConfusionMatrix c{3, 1, 5, 1};
  CHECK(c.precision() == 0.75);
  CHECK(c.recall() == 0.75);
  CHECK(c.accuracy() == 0.8);
  CHECK(ConfusionMatrix{}.precision() == 0.0);
  CHECK(ConfusionMatrix{}.recall() == 0.0);
}

TEST_CASE("dataset CSV round trip") {
  SeededRandom rng(29);
  auto d = random_dataset(rng, 20, 1.0);
  auto back = dataset_from_csv(dataset_to_csv(d));
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back.rows[i].label == d.rows[i].label);
    CHECK(back.rows[i].x == d.rows[i].x);
  }
  CHECK(dataset_to_csv(d).rfind("label,x1,x2,x3,x4,x5,x6\n", 0) == 0);
  CHECK(model_error([] { dataset_from_csv("nope\n1,2\n"); }) == ModelError::Kind::format);
}
