#pragma once

// Seeded synthetic scenarios with known ground truth.
//
// Discrete: a latent task chain that respects a legality relation and has a
// chosen stationary task mix, Gaussian class-conditional features, optional
// auxiliary awake/asleep columns, and injected hypo/hyperactive segments.
// Continuous: a reflecting 2-D random walk observed through a linear mixing
// of [position, velocity] plus noise.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "bcirepair/datamodel.hpp"
#include "bcirepair/decoders.hpp"
#include "bcirepair/error.hpp"
#include "bcirepair/oracles.hpp"
#include "bcirepair/rng.hpp"

namespace bcirepair {

struct DiscreteScenario {
  std::vector<std::string> states;
  LegalityMatrix legality;
  double dwell = 20.0;              // mean number of steps between switch attempts
  std::vector<Vector> means;        // per-state feature means
  double noise = 0.5;               // per-feature Gaussian sigma
  std::vector<double> weights;      // stationary task frequencies (normalized internally)
  double artifact_rate = 0.0;       // per-step probability of starting an artifact segment
  std::size_t artifact_length = 5;
  double hypo_scale = 0.05;         // features multiplied by this inside hypoactive segments
  double hyper_scale = 6.0;         // ... and by this inside hyperactive segments
  std::vector<Vigilance> vigilance;  // per state; enables auxiliary columns when aux_features > 0
  std::size_t aux_features = 0;
  double aux_noise = 0.5;
  std::size_t length = 1000;
  std::uint64_t seed = 0;

  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    const std::size_t n = states.size();
    if (n < 2) out.push_back("scenario needs at least two states");
    if (legality.size() != n) out.push_back("legality matrix does not match the state count");
    if (means.size() != n) out.push_back("scenario needs one feature mean per state");
    for (const auto& m : means)
      if (means.empty() || m.size() != means.front().size() || m.empty()) {
        out.push_back("feature means must share one non-zero dimension");
        break;
      }
    if (weights.size() != n) out.push_back("scenario needs one weight per state");
    for (double w : weights)
      if (!(w > 0.0)) {
        out.push_back("state weights must be positive");
        break;
      }
    if (!(dwell >= 1.0)) out.push_back("dwell must be at least 1");
    if (!(noise >= 0.0)) out.push_back("noise must be non-negative");
    if (artifact_rate < 0.0 || artifact_rate > 1.0) out.push_back("artifact rate must lie in [0, 1]");
    if (aux_features > 0 && vigilance.size() != n) out.push_back("auxiliary columns need a vigilance per state");
    if (length == 0) out.push_back("scenario length must be positive");
    if (legality.size() == n && n >= 2) {
      for (std::size_t s = 0; s < n; ++s)
        if (!legality.legal(s, s)) out.push_back("self-transitions must be legal");
      // every state must reach every other one
      for (std::size_t from = 0; from < n; ++from) {
        std::vector<bool> seen(n, false);
        std::vector<std::size_t> todo{from};
        seen[from] = true;
        while (!todo.empty()) {
          const std::size_t u = todo.back();
          todo.pop_back();
          for (std::size_t v = 0; v < n; ++v)
            if (!seen[v] && legality.legal(u, v)) {
              seen[v] = true;
              todo.push_back(v);
            }
        }
        for (std::size_t v = 0; v < n; ++v)
          if (!seen[v]) {
            out.push_back("state " + states[v] + " is unreachable from " + states[from]);
            from = n;
            break;
          }
      }
    }
    return out;
  }
};

struct ArtifactSegment {
  std::size_t start = 0;
  std::size_t length = 0;
  bool hyper = false;
};

struct GeneratedDiscrete {
  Dataset dataset;
  std::vector<ArtifactSegment> artifacts;
  std::vector<std::size_t> artifact_positions;  // sample positions inside any artifact segment
};

/// Latent task sequence. For a symmetric legality relation a Metropolis
/// chain (uniform proposals over legal neighbours) makes `weights` the exact
/// stationary distribution; otherwise the next state is drawn among legal
/// successors in proportion to `weights`.
inline std::vector<StateId> latent_task_chain(const DiscreteScenario& sc, Engine& rng) {
  const std::size_t n = sc.states.size();
  std::vector<double> w = sc.weights;
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  std::vector<std::vector<StateId>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && sc.legality.legal(i, j)) nbrs[i].push_back(j);
  const bool metropolis = sc.legality.symmetric();

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::discrete_distribution<StateId> initial(w.begin(), w.end());
  std::vector<StateId> seq;
  seq.reserve(sc.length);
  StateId cur = initial(rng);
  for (std::size_t t = 0; t < sc.length; ++t) {
    seq.push_back(cur);
    if (unit(rng) >= 1.0 / sc.dwell || nbrs[cur].empty()) continue;
    if (metropolis) {
      const auto& nb = nbrs[cur];
      const StateId prop = nb[std::uniform_int_distribution<std::size_t>(0, nb.size() - 1)(rng)];
      const double accept = (w[prop] * static_cast<double>(nb.size())) /
                            (w[cur] * static_cast<double>(nbrs[prop].size()));
      if (unit(rng) < accept) cur = prop;
    } else {
      std::vector<double> pw;
      for (StateId j : nbrs[cur]) pw.push_back(w[j]);
      cur = nbrs[cur][std::discrete_distribution<std::size_t>(pw.begin(), pw.end())(rng)];
    }
  }
  return seq;
}

inline GeneratedDiscrete gen_discrete(const DiscreteScenario& sc) {
  if (const auto p = sc.problems(); !p.empty()) throw Error("invalid discrete scenario: " + p.front());
  Engine rng = make_engine(sc.seed, streams::kGenerate);
  const auto latent = latent_task_chain(sc, rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t dim = sc.means.front().size();

  GeneratedDiscrete out;
  out.dataset.kind = LabelKind::Discrete;
  out.dataset.states = sc.states;
  out.dataset.samples.reserve(sc.length);
  std::size_t artifact_left = 0;
  bool hyper = false;
  for (std::size_t t = 0; t < sc.length; ++t) {
    if (artifact_left == 0 && sc.artifact_rate > 0.0 && unit(rng) < sc.artifact_rate) {
      artifact_left = std::min(sc.artifact_length, sc.length - t);
      hyper = unit(rng) < 0.5;
      out.artifacts.push_back({t, artifact_left, hyper});
    }
    const StateId s = latent[t];
    Vector f(dim + sc.aux_features);
    for (std::size_t j = 0; j < dim; ++j) f[j] = sc.means[s][j] + sc.noise * gauss(rng);
    if (artifact_left > 0) {
      for (std::size_t j = 0; j < dim; ++j) f[j] *= hyper ? sc.hyper_scale : sc.hypo_scale;
      out.artifact_positions.push_back(t);
      --artifact_left;
    }
    for (std::size_t j = 0; j < sc.aux_features; ++j)
      f[dim + j] = (sc.vigilance[s] == Vigilance::Awake ? 1.0 : -1.0) + sc.aux_noise * gauss(rng);
    out.dataset.samples.push_back(Sample{t, std::move(f), Label::discrete(s)});
  }
  return out;
}

struct ContinuousScenario {
  Box bounds{{0.0, 1.0}, {0.0, 1.0}};
  double step_sigma = 0.01;
  double momentum = 0.8;             // correlation of consecutive increments
  std::vector<Vector> mixing;        // rows: features, columns: [x, y, vx, vy]; empty -> identity
  double noise = 0.0;
  double offset = 0.0;               // added to every feature
  std::size_t length = 1000;
  std::uint64_t seed = 0;

  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (bounds.size() != 2) out.push_back("continuous scenario needs 2-D bounds");
    for (const auto& b : bounds)
      if (!(b.lo < b.hi)) out.push_back("bounds need lo < hi");
    if (!(step_sigma > 0.0)) out.push_back("step sigma must be positive");
    if (momentum < 0.0 || momentum >= 1.0) out.push_back("momentum must lie in [0, 1)");
    if (!(noise >= 0.0)) out.push_back("noise must be non-negative");
    for (const auto& row : mixing)
      if (row.size() != 4) {
        out.push_back("mixing rows need 4 entries (x, y, vx, vy)");
        break;
      }
    if (length == 0) out.push_back("scenario length must be positive");
    return out;
  }
};

namespace detail {
inline double reflect(double x, const Interval& b, double& increment) {
  const double width = b.hi - b.lo;
  for (int guard = 0; guard < 8 && (x < b.lo || x > b.hi); ++guard) {
    x = x < b.lo ? 2.0 * b.lo - x : 2.0 * b.hi - x;
    increment = -increment;
  }
  // pathological jumps larger than the box collapse onto the interval
  if (x < b.lo || x > b.hi) x = b.lo + std::fmod(std::fabs(x - b.lo), width);
  return x;
}
}  // namespace detail

/// Reflecting random walk with AR(1) increments clipped to 3 sigma, so
/// consecutive positions are at most 3 * step_sigma apart.
inline Dataset gen_continuous(const ContinuousScenario& sc) {
  if (const auto p = sc.problems(); !p.empty()) throw Error("invalid continuous scenario: " + p.front());
  Engine rng = make_engine(sc.seed, streams::kGenerate);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vector> mix = sc.mixing;
  if (mix.empty()) mix = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};

  Dataset ds;
  ds.kind = LabelKind::Continuous;
  ds.label_dim = 2;
  ds.samples.reserve(sc.length);
  Vector pos{0.5 * (sc.bounds[0].lo + sc.bounds[0].hi), 0.5 * (sc.bounds[1].lo + sc.bounds[1].hi)};
  Vector inc{0.0, 0.0};
  const double innov = std::sqrt(1.0 - sc.momentum * sc.momentum);
  const double cap = 3.0 * sc.step_sigma;
  for (std::size_t t = 0; t < sc.length; ++t) {
    Vector vel{0.0, 0.0};
    if (t > 0) {
      for (std::size_t d = 0; d < 2; ++d) inc[d] = sc.momentum * inc[d] + innov * sc.step_sigma * gauss(rng);
      const double len = std::hypot(inc[0], inc[1]);
      if (len > cap)
        for (double& v : inc) v *= cap / len;
      const Vector before = pos;
      for (std::size_t d = 0; d < 2; ++d) pos[d] = detail::reflect(pos[d] + inc[d], sc.bounds[d], inc[d]);
      vel = {pos[0] - before[0], pos[1] - before[1]};
    }
    const double state[4] = {pos[0], pos[1], vel[0], vel[1]};
    Vector f(mix.size());
    for (std::size_t r = 0; r < mix.size(); ++r) {
      double acc = sc.offset;
      for (std::size_t c = 0; c < 4; ++c) acc += mix[r][c] * state[c];
      f[r] = acc + sc.noise * gauss(rng);
    }
    ds.samples.push_back(Sample{t, std::move(f), Label::continuous(pos)});
  }
  return ds;
}

/// Single-execution events of `type` at independently chosen positions, each
/// position firing with probability `rate`. Used as a null model for
/// localization: the events carry no information about any slice.
inline std::vector<FaultEvent> inject_random_events(std::size_t stream_length, double rate, FaultType type,
                                                    std::uint64_t seed) {
  Engine rng = make_engine(seed, streams::kInject);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<FaultEvent> out;
  for (std::size_t t = 0; t < stream_length; ++t)
    if (unit(rng) < rate) out.push_back(FaultEvent{type, t, t, "injected", "null-model injection"});
  return out;
}

}  // namespace bcirepair
