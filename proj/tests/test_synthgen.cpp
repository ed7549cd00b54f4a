#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "bcirepair/synthgen.hpp"

using namespace bcirepair;

namespace {

DiscreteScenario motor(std::uint64_t seed) {
  DiscreteScenario sc;
  sc.states = {"Rest", "LeftFist", "RightFist"};
  sc.legality = LegalityMatrix(3);
  sc.legality.forbid(1, 2);
  sc.legality.forbid(2, 1);
  sc.means = {{2, 2}, {3, 2}, {2, 3}};
  sc.noise = 0.1;
  sc.weights = {0.8, 0.1, 0.1};
  sc.dwell = 5;
  sc.length = 2000;
  sc.seed = seed;
  return sc;
}

Stream truth_as_outputs(const Dataset& ds) {
  Stream s;
  for (const auto& x : ds.samples) s.push_back(PredictionRecord{x.index, x.features, x.label, x.label});
  return s;
}

std::vector<StateId> states_of(const Dataset& ds) {
  std::vector<StateId> out;
  for (const auto& x : ds.samples) out.push_back(x.label.state());
  return out;
}

}  // namespace

TEST(GenDiscrete, StationaryMixMatchesWeights) {
  auto sc = motor(3);
  sc.length = 200000;
  const auto s = states_of(gen_discrete(sc).dataset);
  std::vector<double> freq(3, 0.0);
  for (StateId v : s) freq[v] += 1.0 / static_cast<double>(s.size());
  EXPECT_NEAR(freq[0], 0.8, 0.01);
  EXPECT_NEAR(freq[1], 0.1, 0.01);
  EXPECT_NEAR(freq[2], 0.1, 0.01);
}

TEST(GenDiscrete, LatentChainIsLegal) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sc = motor(seed);
    const auto s = states_of(gen_discrete(sc).dataset);
    for (std::size_t t = 1; t < s.size(); ++t) ASSERT_TRUE(sc.legality.legal(s[t - 1], s[t])) << seed << " " << t;
  }
  // asymmetric relation: a one-way cycle
  auto sc = motor(1);
  sc.legality = LegalityMatrix(3);
  sc.legality.forbid(1, 0);
  sc.legality.forbid(2, 1);
  sc.legality.forbid(0, 2);
  const auto s = states_of(gen_discrete(sc).dataset);
  std::set<StateId> seen(s.begin(), s.end());
  EXPECT_EQ(seen.size(), 3u);
  for (std::size_t t = 1; t < s.size(); ++t) ASSERT_TRUE(sc.legality.legal(s[t - 1], s[t])) << t;
}

TEST(GenDiscrete, TruthPassesItsOwnOracles) {
  auto sc = motor(4);
  sc.vigilance = {Vigilance::Awake, Vigilance::Asleep, Vigilance::Asleep};
  sc.aux_features = 2;
  sc.aux_noise = 0.1;
  const auto g = gen_discrete(sc);
  EXPECT_EQ(g.dataset.feature_dim(), 4u);
  OracleConfig c;
  c.state_names = sc.states;
  c.legality = sc.legality;
  c.aux_map = sc.vigilance;
  const auto aux = AuxiliaryBinaryClassifier::mean_threshold({2, 3}, 0.0);
  const auto ev = run_oracles(truth_as_outputs(g.dataset), c,
                              {FaultType::IllegalTransition, FaultType::MultimodalInconsistency}, &aux);
  EXPECT_TRUE(ev.empty());
}

TEST(GenDiscrete, ArtifactsDetectedAtExactPositions) {
  auto sc = motor(5);
  sc.artifact_rate = 0.02;
  sc.artifact_length = 4;
  const auto g = gen_discrete(sc);
  ASSERT_FALSE(g.artifacts.empty());
  std::set<std::size_t> expected(g.artifact_positions.begin(), g.artifact_positions.end());
  std::size_t covered = 0;
  for (const auto& a : g.artifacts) covered += a.length;
  EXPECT_EQ(covered, expected.size());
  OracleConfig c;
  c.activity_lo = 0.5;
  c.activity_hi = 8.0;
  std::set<std::size_t> found;
  for (const auto& e : run_oracles(truth_as_outputs(g.dataset), c, {FaultType::InputArtifact})) found.insert(e.start);
  EXPECT_EQ(found, expected);
}

TEST(GenDiscrete, DeterministicPerSeed) {
  const auto a = gen_discrete(motor(9)).dataset.samples;
  EXPECT_EQ(a, gen_discrete(motor(9)).dataset.samples);
  EXPECT_NE(a, gen_discrete(motor(10)).dataset.samples);
}

TEST(GenDiscrete, RejectsBadScenarios) {
  auto sc = motor(0);
  sc.weights = {1, 0, 1};
  EXPECT_THROW(gen_discrete(sc), Error);
  sc = motor(0);
  sc.legality.forbid(0, 1);
  sc.legality.forbid(0, 2);
  EXPECT_THROW(gen_discrete(sc), Error);
  sc = motor(0);
  sc.aux_features = 1;
  EXPECT_THROW(gen_discrete(sc), Error);
}

TEST(GenContinuous, InBoundsWithBoundedSteps) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ContinuousScenario sc;
    sc.step_sigma = 0.05;
    sc.length = 5000;
    sc.seed = seed;
    const auto ds = gen_continuous(sc);
    ASSERT_EQ(ds.samples.size(), 5000u);
    OracleConfig c;
    c.bounds = sc.bounds;
    c.tau_step = 3.0 * sc.step_sigma + 1e-12;
    const auto ev = run_oracles(truth_as_outputs(ds), c, {FaultType::OutOfBounds, FaultType::RapidMotion});
    EXPECT_TRUE(ev.empty()) << seed;
  }
}

TEST(GenContinuous, IdentityMixingExposesState) {
  ContinuousScenario sc;
  sc.length = 300;
  sc.seed = 2;
  const auto ds = gen_continuous(sc);
  ASSERT_EQ(ds.feature_dim(), 4u);
  EXPECT_EQ(ds.samples[0].features, (Vector{0.5, 0.5, 0.0, 0.0}));
  for (std::size_t t = 1; t < ds.samples.size(); ++t) {
    const auto& f = ds.samples[t].features;
    const auto& prev = ds.samples[t - 1].label.coords();
    EXPECT_EQ(f[0], ds.samples[t].label.coords()[0]);
    EXPECT_EQ(f[1], ds.samples[t].label.coords()[1]);
    EXPECT_NEAR(f[2], f[0] - prev[0], 1e-15);
    EXPECT_NEAR(f[3], f[1] - prev[1], 1e-15);
  }
}

TEST(GenContinuous, DeterministicAndValidated) {
  ContinuousScenario sc;
  sc.seed = 8;
  sc.noise = 0.1;
  sc.mixing = {{1, 0, 2, 0}, {0, 1, 0, 2}, {1, 1, 0, 0}};
  EXPECT_EQ(gen_continuous(sc).samples, gen_continuous(sc).samples);
  EXPECT_EQ(gen_continuous(sc).feature_dim(), 3u);
  sc.mixing = {{1, 0}};
  EXPECT_THROW(gen_continuous(sc), Error);
}

TEST(InjectRandomEvents, RateAndShape) {
  const auto ev = inject_random_events(100000, 0.05, FaultType::TemporalInconsistencyDiscrete, 1);
  // binomial sd is about 69; 4 sd band
  EXPECT_NEAR(static_cast<double>(ev.size()), 5000.0, 280.0);
  for (std::size_t i = 0; i < ev.size(); ++i) {
    EXPECT_EQ(ev[i].start, ev[i].end);
    if (i) EXPECT_LT(ev[i - 1].start, ev[i].start);
  }
  EXPECT_EQ(ev.size(), inject_random_events(100000, 0.05, FaultType::TemporalInconsistencyDiscrete, 1).size());
  EXPECT_TRUE(inject_random_events(1000, 0.0, FaultType::OutOfBounds, 1).empty());
}
