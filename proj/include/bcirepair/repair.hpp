#pragma once

// Acquisition strategies and decoder retraining.

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bcirepair/datamodel.hpp"
#include "bcirepair/decoders.hpp"
#include "bcirepair/error.hpp"
#include "bcirepair/heuristics.hpp"
#include "bcirepair/localization.hpp"
#include "bcirepair/oracles.hpp"
#include "bcirepair/rng.hpp"
#include "bcirepair/slicing.hpp"

namespace bcirepair {

enum class AcquisitionStrategy { FaultBased, Natural, CorrectedOnly, FaultBasedNoHeuristics };

inline const char* to_string(AcquisitionStrategy s) {
  switch (s) {
    case AcquisitionStrategy::FaultBased: return "fault_based";
    case AcquisitionStrategy::Natural: return "natural";
    case AcquisitionStrategy::CorrectedOnly: return "corrected_only";
    case AcquisitionStrategy::FaultBasedNoHeuristics: return "fault_based_no_heuristics";
  }
  return "unknown";
}

inline AcquisitionStrategy parse_strategy(const std::string& s) {
  for (auto v : {AcquisitionStrategy::FaultBased, AcquisitionStrategy::Natural, AcquisitionStrategy::CorrectedOnly,
                 AcquisitionStrategy::FaultBasedNoHeuristics})
    if (s == to_string(v)) return v;
  throw Error("unknown acquisition strategy '" + s + "'");
}

struct AcquisitionPlan {
  AcquisitionStrategy strategy = AcquisitionStrategy::Natural;
  std::size_t n = 500;
  std::uint64_t seed = 0;
  double epsilon_floor = 0.0;
  std::optional<FaultType> fault_type;           // per-type distribution; pooled when empty
  std::optional<TaskDistribution> distribution;  // overrides the computed distribution
};

/// Per-task sample counts: largest-remainder allocation of min(n, available)
/// by `probabilities`, then demand a bucket cannot meet is handed to buckets
/// with spare samples in proportion to their spare counts.
inline std::vector<std::size_t> allocate_by_distribution(std::span<const std::size_t> available,
                                                         std::span<const double> probabilities, std::size_t n) {
  if (available.size() != probabilities.size()) throw Error("allocation needs one probability per bucket");
  const std::size_t total_available = std::accumulate(available.begin(), available.end(), std::size_t{0});
  const std::size_t target = std::min(n, total_available);
  std::vector<std::size_t> counts(available.size(), 0);
  if (target == 0) return counts;

  const double mass = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
  if (mass > 0.0) {
    const auto alloc = largest_remainder(target, probabilities);
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] = std::min(alloc[i], available[i]);
  }
  std::size_t placed = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  while (placed < target) {
    std::vector<double> spare(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) spare[i] = static_cast<double>(available[i] - counts[i]);
    const auto extra = largest_remainder(target - placed, spare);
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const std::size_t add = std::min(extra[i], available[i] - counts[i]);
      counts[i] += add;
      placed += add;
    }
  }
  return counts;
}

namespace detail {
inline std::vector<Sample> gather_sorted(std::span<const Sample> pool, std::vector<std::size_t> picks) {
  std::sort(picks.begin(), picks.end());
  std::vector<Sample> out;
  out.reserve(picks.size());
  for (std::size_t p : picks) out.push_back(pool[p]);
  return out;
}
}  // namespace detail

/// Samples the acquisition pool so that task frequencies follow
/// `distribution`. `tasks[i]` is the ground-truth task of pool sample i.
/// The result is in pool order.
inline std::vector<Sample> sample_by_distribution(std::span<const Sample> pool, std::span<const std::string> tasks,
                                                  const TaskDistribution& distribution, std::size_t n,
                                                  std::uint64_t seed) {
  if (pool.empty()) throw Error("acquisition set is empty");
  if (tasks.size() != pool.size()) throw Error("need one task label per acquisition sample");
  std::vector<std::string> names = distribution.tasks;
  for (const auto& t : tasks)
    if (std::find(names.begin(), names.end(), t) == names.end()) names.push_back(t);
  std::vector<std::vector<std::size_t>> buckets(names.size());
  for (std::size_t i = 0; i < tasks.size(); ++i)
    buckets[static_cast<std::size_t>(std::find(names.begin(), names.end(), tasks[i]) - names.begin())].push_back(i);
  std::vector<std::size_t> available;
  std::vector<double> probs;
  for (std::size_t b = 0; b < names.size(); ++b) {
    available.push_back(buckets[b].size());
    probs.push_back(distribution[names[b]]);
  }
  const auto counts = allocate_by_distribution(available, probs, n);

  Engine rng = make_engine(seed, streams::kAcquire);
  std::vector<std::size_t> picks;
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    auto& bucket = buckets[b];
    std::shuffle(bucket.begin(), bucket.end(), rng);
    picks.insert(picks.end(), bucket.begin(), bucket.begin() + static_cast<std::ptrdiff_t>(counts[b]));
  }
  return detail::gather_sorted(pool, std::move(picks));
}

/// Uniform sample without replacement of min(n, |pool|) samples, in pool order.
inline std::vector<Sample> sample_natural(std::span<const Sample> pool, std::size_t n, std::uint64_t seed) {
  if (pool.empty()) throw Error("acquisition set is empty");
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Engine rng = make_engine(seed, streams::kAcquire);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(n, pool.size()));
  return detail::gather_sorted(pool, std::move(idx));
}

/// One training sample per correction: the execution's input labeled with
/// the corrected output.
inline std::vector<Sample> corrected_only_dataset(std::span<const PredictionRecord> stream,
                                                  std::span<const CorrectionRecord> corrections) {
  if (corrections.empty()) throw Error("no corrections available; the corrected-only ablation is inapplicable");
  std::vector<Sample> out;
  out.reserve(corrections.size());
  for (const CorrectionRecord& c : corrections) {
    if (c.index >= stream.size()) throw Error("correction references a position outside the stream");
    out.push_back(Sample{stream[c.index].index, stream[c.index].input, c.corrected});
  }
  return out;
}

/// Everything the fault-based strategies learned from the observation stream.
struct LocalizationArtifacts {
  const Stream* raw = nullptr;        // baseline predictions on the observation set
  const Stream* corrected = nullptr;  // after corrective heuristics
  std::span<const FaultEvent> events;
  std::span<const CorrectionRecord> corrections;
  const SliceFamily* task_family = nullptr;  // output family that defines tasks
};

struct RepairOutcome {
  Decoder decoder;
  AcquisitionStrategy requested = AcquisitionStrategy::Natural;
  AcquisitionStrategy used = AcquisitionStrategy::Natural;
  std::vector<Sample> acquired;
  std::optional<TaskDistribution> distribution;
  std::vector<std::string> warnings;
};

/// Task distribution over fault-covered executions of `stream` (corrected
/// stream for the standard method, raw stream for the no-heuristics ablation).
inline std::optional<TaskDistribution> distribution_from_stream(const Stream& stream,
                                                                std::span<const FaultEvent> events,
                                                                const SliceFamily& family, const AcquisitionPlan& plan) {
  std::vector<FaultEvent> selected =
      plan.fault_type ? events_of_type(events, *plan.fault_type) : std::vector<FaultEvent>(events.begin(), events.end());
  if (selected.empty()) return std::nullopt;
  const SliceFamily fams[] = {family};
  const auto labels = family_labels(assign_slices(stream, fams), family.id);
  const auto rows = family.labels();
  return fault_task_distribution(selected, labels, rows, plan.epsilon_floor);
}

inline RepairOutcome execute_repair(const Decoder& baseline, const AcquisitionPlan& plan, std::span<const Sample> train,
                                    std::span<const Sample> acquire, const LocalizationArtifacts& art) {
  if (plan.n == 0) throw Error("acquisition plan needs n > 0");
  RepairOutcome out{baseline, plan.strategy, plan.strategy, {}, std::nullopt, {}};

  switch (plan.strategy) {
    case AcquisitionStrategy::CorrectedOnly: {
      if (art.raw == nullptr) throw Error("corrected-only retraining needs the observation stream");
      out.acquired = corrected_only_dataset(*art.raw, art.corrections);
      out.decoder = baseline.retrain(out.acquired, train);
      return out;
    }
    case AcquisitionStrategy::FaultBased:
    case AcquisitionStrategy::FaultBasedNoHeuristics: {
      if (art.task_family == nullptr) throw Error("fault-based acquisition needs a task slice family");
      std::optional<TaskDistribution> dist = plan.distribution;
      if (!dist) {
        const Stream* s = plan.strategy == AcquisitionStrategy::FaultBased ? art.corrected : art.raw;
        if (s == nullptr) throw Error("fault-based acquisition needs the observation stream");
        dist = distribution_from_stream(*s, art.events, *art.task_family, plan);
      }
      if (dist) {
        const auto tasks = truth_tasks(acquire, *art.task_family);
        out.acquired = sample_by_distribution(acquire, tasks, *dist, plan.n, plan.seed);
        out.distribution = std::move(dist);
        break;
      }
      out.warnings.push_back(std::string(to_string(plan.strategy)) +
                             ": no faults observed, falling back to natural acquisition");
      out.used = AcquisitionStrategy::Natural;
      out.acquired = sample_natural(acquire, plan.n, plan.seed);
      break;
    }
    case AcquisitionStrategy::Natural: out.acquired = sample_natural(acquire, plan.n, plan.seed); break;
  }
  out.decoder = baseline.retrain(out.acquired, train);
  return out;
}

}  // namespace bcirepair
