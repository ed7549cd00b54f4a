#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bcirepair/decoders.hpp"
#include "helpers.hpp"

using namespace bcirepair;
using testutil::gaussian_clusters;

namespace {

// Dense Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

// Ridge solution of one output column with an intercept column appended.
std::vector<double> ridge_oracle(const std::vector<Sample>& s, std::size_t out_dim, double ridge) {
  const std::size_t p = s.front().features.size() + 1;
  std::vector<std::vector<double>> g(p, std::vector<double>(p, 0.0));
  std::vector<double> rhs(p, 0.0);
  for (const auto& x : s) {
    Vector xa = x.features;
    xa.push_back(1.0);
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) g[i][j] += xa[i] * xa[j];
      rhs[i] += xa[i] * x.label.coords()[out_dim];
    }
  }
  for (std::size_t i = 0; i < p; ++i) g[i][i] += ridge;
  return solve(g, rhs);
}

std::vector<Sample> linear_data(std::size_t n, std::uint64_t seed, double noise) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    Vector f{g(rng), g(rng), g(rng)};
    const double y0 = 1.5 * f[0] - 0.5 * f[1] + 0.25 * f[2] + 0.3 + noise * g(rng);
    const double y1 = -f[0] + 2.0 * f[2] - 1.0 + noise * g(rng);
    out.push_back(Sample{i, f, Label::continuous({y0, y1})});
  }
  return out;
}

}  // namespace

TEST(Softmax, SeparableClustersReachFullTrainingAccuracy) {
  const auto train = gaussian_clusters({{0, 0}, {6, 6}, {-6, 6}}, 60, 0.7, 1);
  const auto dec = Decoder::softmax(3).fit(train);
  const auto nc = NearestCentroid(3).fit(train);
  std::size_t correct = 0;
  for (const auto& s : train) {
    correct += dec.predict(s.features) == s.label ? 1 : 0;
    EXPECT_EQ(dec.predict(s.features), nc.predict(s.features));
  }
  EXPECT_EQ(correct, train.size());
}

TEST(Softmax, LossNonIncreasing) {
  const auto train = gaussian_clusters({{0, 0}, {1, 1}, {-1, 2}}, 80, 1.0, 2);
  for (double lr : {0.2, 0.5}) {
    SoftmaxClassifier::Hyper h;
    h.learning_rate = lr;
    h.epochs = 400;
    const auto sm = SoftmaxClassifier(3, h).fit(train);
    const auto& loss = sm.loss_history();
    ASSERT_EQ(loss.size(), 401u);
    for (std::size_t i = 1; i < loss.size(); ++i) EXPECT_LE(loss[i], loss[i - 1] + 1e-15) << lr << " " << i;
  }
}

TEST(Softmax, ProbabilitiesOnSimplex) {
  const auto train = gaussian_clusters({{0, 0}, {2, 1}}, 50, 1.0, 3);
  const auto sm = SoftmaxClassifier(2, {}).fit(train);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 200; ++i) {
    const auto p = sm.predict_proba({u(rng), u(rng)});
    double s = 0.0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Softmax, ZeroWeightsTieBreaksToLowestClass) {
  SoftmaxClassifier::Hyper h;
  h.learning_rate = 0.0;
  const auto train = gaussian_clusters({{0, 0}, {2, 1}, {4, 4}}, 5, 1.0, 5);
  const auto sm = SoftmaxClassifier(3, h).fit(train);
  const auto p = sm.predict_proba({3.0, -1.0});
  for (double v : p) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(sm.predict({3.0, -1.0}), Label::discrete(0));
}

TEST(Softmax, DeterministicRefit) {
  const auto train = gaussian_clusters({{0, 0}, {1, 1}}, 40, 1.0, 6);
  const auto a = SoftmaxClassifier(2, {}).fit(train);
  const auto b = SoftmaxClassifier(2, {}).fit(train);
  EXPECT_EQ(a.to_json(), b.to_json());
}

TEST(Softmax, MissingClassRejected) {
  const auto train = gaussian_clusters({{0, 0}, {1, 1}}, 10, 1.0, 7);
  EXPECT_THROW(SoftmaxClassifier(3, {}).fit(train), Error);
}

TEST(Retrain, ConcatWithDuplicatedTrainMatchesPlainFit) {
  const auto train = gaussian_clusters({{0, 0}, {2, 1}, {0, 3}}, 40, 1.0, 8);
  const auto base = Decoder::softmax(3).fit(train);
  const auto again = base.retrain(train, train);
  const auto& a = std::get<SoftmaxClassifier>(base.model());
  const auto& b = std::get<SoftmaxClassifier>(again.model());
  EXPECT_LE((a.weights() - b.weights()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((a.bias() - b.bias()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Retrain, EmptyAcquiredRejected) {
  const auto train = gaussian_clusters({{0, 0}, {2, 1}}, 20, 1.0, 9);
  const auto base = Decoder::softmax(2).fit(train);
  EXPECT_THROW(base.retrain(std::vector<Sample>{}, train), Error);
}

TEST(Retrain, IncrementalWithZeroLearningRateIsIdentity) {
  const auto train = gaussian_clusters({{0, 0}, {2, 1}}, 30, 1.0, 10);
  const auto fitted = Decoder::softmax(2, {}, RetrainMode::Incremental, 10).fit(train);
  auto j = fitted.to_json();
  j["parameters"]["learning_rate"] = 0.0;
  const auto frozen = Decoder::from_json(j);
  const auto more = gaussian_clusters({{5, 5}, {-5, 5}}, 30, 1.0, 11);
  const auto after = frozen.retrain(more, train);
  EXPECT_EQ(std::get<SoftmaxClassifier>(after.model()).weights(), std::get<SoftmaxClassifier>(frozen.model()).weights());
  EXPECT_EQ(std::get<SoftmaxClassifier>(after.model()).bias(), std::get<SoftmaxClassifier>(frozen.model()).bias());
}

TEST(Retrain, IncrementalChangesParametersAndIgnoresBase) {
  const auto train = gaussian_clusters({{0, 0}, {2, 1}}, 30, 1.0, 12);
  const auto fitted = Decoder::softmax(2, {}, RetrainMode::Incremental, 10).fit(train);
  const auto more = gaussian_clusters({{0, 0}, {2, 1}}, 10, 1.0, 13);
  const auto a = fitted.retrain(more, train);
  const auto b = fitted.retrain(more, std::vector<Sample>{});
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_NE(a.to_json(), fitted.to_json());
}

TEST(Retrain, IncrementalNeedsGradientDecoder) {
  EXPECT_THROW(Decoder(NearestCentroid(2), RetrainMode::Incremental), Error);
  EXPECT_THROW(Decoder(WienerCascade(), RetrainMode::Incremental), Error);
}

TEST(NearestCentroidTest, PicksClosest) {
  const NearestCentroid nc(std::vector<Vector>{{0, 0}, {10, 10}});
  EXPECT_EQ(nc.predict({9, 9}), Label::discrete(1));
  EXPECT_EQ(nc.predict({1, 2}), Label::discrete(0));
  EXPECT_THROW(nc.predict({1, 2, 3}), Error);
}

TEST(Wiener, RecoversDoubling) {
  std::vector<Sample> s;
  for (int i = 0; i < 50; ++i) {
    const double x = 0.1 * i - 2.0;
    s.push_back(Sample{static_cast<std::uint64_t>(i), {x}, Label::continuous({2.0 * x, 2.0 * x})});
  }
  WienerCascade::Hyper h;
  h.degree = 1;
  const auto w = WienerCascade(h).fit(s);
  EXPECT_NEAR(w.linear()(0, 0), 2.0, 1e-6);
  EXPECT_NEAR(w.predict({0.77}).coords()[0], 1.54, 1e-6);
}

TEST(Wiener, DegreeOneMatchesNormalEquationsOracle) {
  const auto s = linear_data(40, 14, 0.3);
  WienerCascade::Hyper h;
  h.degree = 1;
  h.ridge = 1e-3;
  const auto w = WienerCascade(h).fit(s);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto beta = ridge_oracle(s, k, h.ridge);
    for (std::size_t j = 0; j < beta.size(); ++j)
      EXPECT_NEAR(w.linear()(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)), beta[j], 1e-6);
    for (const auto& x : s) {
      double pred = beta.back();
      for (std::size_t j = 0; j + 1 < beta.size(); ++j) pred += beta[j] * x.features[j];
      EXPECT_NEAR(w.predict(x.features).coords()[k], pred, 1e-6);
    }
  }
}

TEST(Wiener, CubicStageCapturesNonlinearity) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<Sample> s;
  for (std::size_t i = 0; i < 400; ++i) {
    const double x = u(rng);
    const double y = x + 0.5 * x * x * x;
    s.push_back(Sample{i, {x}, Label::continuous({y, -y})});
  }
  WienerCascade::Hyper lin;
  lin.degree = 1;
  const auto w1 = WienerCascade(lin).fit(s);
  const auto w3 = WienerCascade().fit(s);
  double e1 = 0.0, e3 = 0.0;
  for (const auto& x : s) {
    e1 += std::pow(w1.predict(x.features).coords()[0] - x.label.coords()[0], 2);
    e3 += std::pow(w3.predict(x.features).coords()[0] - x.label.coords()[0], 2);
  }
  EXPECT_LT(e3, 0.05 * e1);
}

TEST(Wiener, NeedsEnoughSamplesForLags) {
  WienerCascade::Hyper h;
  h.lags = 5;
  EXPECT_THROW(WienerCascade(h).fit(linear_data(3, 16, 0.0)), Error);
}

TEST(DecoderJson, RoundTripPreservesPredictions) {
  const auto train = gaussian_clusters({{0, 0}, {2, 1}, {0, 3}}, 30, 1.0, 17);
  const auto dec = Decoder::softmax(3).fit(train);
  const auto back = Decoder::from_json(nlohmann::json::parse(dec.to_json().dump()));
  for (const auto& s : train) EXPECT_EQ(back.predict(s.features), dec.predict(s.features));

  const auto w = Decoder::wiener_cascade().fit(linear_data(50, 18, 0.1));
  const auto wb = Decoder::from_json(nlohmann::json::parse(w.to_json().dump()));
  EXPECT_EQ(wb.predict({0.3, 0.2, 0.1}), w.predict({0.3, 0.2, 0.1}));

  const auto nc = Decoder::nearest_centroid(3).fit(train);
  EXPECT_EQ(Decoder::from_json(nc.to_json()).predict({1, 1}), nc.predict({1, 1}));
}

TEST(AuxClassifier, ThresholdAndLogistic) {
  const auto th = AuxiliaryBinaryClassifier::mean_threshold({1, 2}, 0.0);
  EXPECT_EQ(th.predict({100, 1, 1}), Vigilance::Awake);
  EXPECT_EQ(th.predict({100, -1, 0.5}), Vigilance::Asleep);
  EXPECT_EQ(AuxiliaryBinaryClassifier::constant(Vigilance::Asleep).predict({1.0}), Vigilance::Asleep);

  std::mt19937_64 rng(19);
  std::normal_distribution<double> g(0.0, 0.3);
  std::vector<Sample> s;
  for (std::size_t i = 0; i < 200; ++i) {
    const StateId st = i % 2;
    s.push_back(Sample{i, {0.0, (st == 0 ? 1.0 : -1.0) + g(rng)}, Label::discrete(st)});
  }
  const auto lg = AuxiliaryBinaryClassifier::fit_logistic(s, {1}, {Vigilance::Awake, Vigilance::Asleep});
  std::size_t ok = 0;
  for (const auto& x : s) ok += lg.predict(x.features) == (x.label.state() == 0 ? Vigilance::Awake : Vigilance::Asleep);
  EXPECT_GE(ok, 195u);
}
