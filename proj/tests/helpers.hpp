#pragma once

#include <random>
#include <vector>

#include "bcirepair/datamodel.hpp"
#include "bcirepair/oracles.hpp"

namespace testutil {

using namespace bcirepair;

inline Stream discrete_stream(const std::vector<StateId>& outputs, const std::vector<StateId>& truth = {}) {
  Stream s;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    PredictionRecord r{i, {0.0}, Label::discrete(outputs[i]), std::nullopt};
    if (!truth.empty()) r.truth = Label::discrete(truth[i]);
    s.push_back(r);
  }
  return s;
}

inline Stream continuous_stream(const std::vector<Vector>& outputs, const std::vector<Vector>& truth = {}) {
  Stream s;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    PredictionRecord r{i, {0.0}, Label::continuous(outputs[i]), std::nullopt};
    if (!truth.empty()) r.truth = Label::continuous(truth[i]);
    s.push_back(r);
  }
  return s;
}

inline std::vector<Sample> discrete_samples(const std::vector<Vector>& features, const std::vector<StateId>& labels) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < features.size(); ++i) out.push_back(Sample{i, features[i], Label::discrete(labels[i])});
  return out;
}

// Two Gaussian clusters per class around the given centers.
inline std::vector<Sample> gaussian_clusters(const std::vector<Vector>& centers, std::size_t per_class, double sigma,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<Sample> out;
  std::uint64_t idx = 0;
  for (std::size_t k = 0; k < per_class; ++k)
    for (std::size_t c = 0; c < centers.size(); ++c) {
      Vector f = centers[c];
      for (double& v : f) v += g(rng);
      out.push_back(Sample{idx++, f, Label::discrete(c)});
    }
  return out;
}

}  // namespace testutil
