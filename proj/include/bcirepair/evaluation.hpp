#pragma once

// Metrics and the multi-trial experiment runner:
// split -> fit baseline -> observe (oracles, corrections, slicing, localization)
// -> repair per strategy -> evaluate baseline and repaired decoders on the test part.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bcirepair/datamodel.hpp"
#include "bcirepair/decoders.hpp"
#include "bcirepair/error.hpp"
#include "bcirepair/heuristics.hpp"
#include "bcirepair/localization.hpp"
#include "bcirepair/oracles.hpp"
#include "bcirepair/repair.hpp"
#include "bcirepair/slicing.hpp"
#include "bcirepair/stats.hpp"

namespace bcirepair {

// ---------------------------------------------------------------------------
// Metrics

/// Summed event count across types per prediction; co-occurring events are
/// not deduplicated.
inline double fault_frequency(std::span<const FaultEvent> events, std::size_t stream_length) {
  if (stream_length == 0) throw Error("fault frequency of an empty stream is undefined");
  return static_cast<double>(events.size()) / static_cast<double>(stream_length);
}

inline bool is_misprediction(const PredictionRecord& r, double delta_err) {
  if (!r.truth) throw Error("missing ground truth at stream index " + std::to_string(r.index));
  if (r.output.is_discrete()) return r.output.state() != r.truth->state();
  return euclidean(r.output.coords(), r.truth->coords()) > delta_err;
}

/// Fraction of events whose range covers at least one misprediction; nullopt
/// when there are no events.
inline std::optional<double> oracle_precision(std::span<const FaultEvent> events,
                                              std::span<const PredictionRecord> stream, double delta_err) {
  if (events.empty()) return std::nullopt;
  std::size_t hits = 0;
  for (const FaultEvent& e : events) {
    if (e.end >= stream.size()) throw Error("event outside the stream");
    bool hit = false;
    for (std::size_t t = e.start; t <= e.end && !hit; ++t) hit = is_misprediction(stream[t], delta_err);
    hits += hit ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(events.size());
}

/// Accuracy for discrete streams, mean squared error (over time and
/// dimensions) for continuous ones.
inline double performance(std::span<const PredictionRecord> stream) {
  if (stream.empty()) throw Error("performance of an empty stream is undefined");
  const LabelKind kind = stream.front().output.kind();
  double acc = 0.0;
  for (const PredictionRecord& r : stream) {
    if (!r.truth) throw Error("missing ground truth at stream index " + std::to_string(r.index));
    if (r.output.kind() != kind || r.truth->kind() != kind) throw Error("stream mixes discrete and continuous labels");
    if (kind == LabelKind::Discrete) {
      acc += r.output.state() == r.truth->state() ? 1.0 : 0.0;
    } else {
      const auto& a = r.output.coords();
      const auto& b = r.truth->coords();
      if (a.size() != b.size()) throw Error("prediction and truth dimensions differ");
      double s = 0.0;
      for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
      acc += s / static_cast<double>(a.size());
    }
  }
  return acc / static_cast<double>(stream.size());
}

inline const char* performance_metric(LabelKind kind) { return kind == LabelKind::Discrete ? "accuracy" : "mse"; }

struct Efficacy {
  double before = 0.0;
  double after = 0.0;
};

inline Efficacy heuristic_efficacy(std::span<const PredictionRecord> raw, std::span<const PredictionRecord> corrected) {
  if (raw.size() != corrected.size()) throw Error("raw and corrected streams differ in length");
  return {performance(raw), performance(corrected)};
}

struct TTestResult {
  double t = 0.0;
  double p_value = 1.0;
  double mean_difference = 0.0;
  std::size_t df = 0;
};

/// Two-sided paired t-test on a[i] - b[i]. Zero-variance differences give
/// p = 1 when the mean difference is zero and p = 0 otherwise.
inline TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("paired t-test needs equally long samples");
  if (a.size() < 2) throw Error("paired t-test needs at least two pairs");
  const double n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
  TTestResult r;
  r.mean_difference = mean;
  r.df = a.size() - 1;
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) {
    r.t = mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), mean);
    r.p_value = mean == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t = mean / (sd / std::sqrt(n));
  r.p_value = student_t_two_sided(r.t, static_cast<double>(r.df));
  return r;
}

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

inline Summary summarize(std::span<const double> v) {
  Summary s;
  s.n = v.size();
  if (v.empty()) return s;
  double acc = 0.0;
  for (double x : v) acc += x;
  s.mean = acc / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Experiment configuration

struct DecoderSpec {
  std::string type = "softmax";  // softmax | nearest_centroid | wiener_cascade
  SoftmaxClassifier::Hyper softmax;
  WienerCascade::Hyper wiener;
  RetrainMode retrain_mode = RetrainMode::Concat;
  int incremental_epochs = 10;
};

struct AuxSpec {
  std::string mode = "logistic";  // logistic | threshold
  std::vector<std::size_t> columns;
  double threshold = 0.0;
};

struct ExperimentConfig {
  Dataset dataset;
  std::array<double, 4> ratio{6, 2, 1, 1};
  SplitMode split_mode = SplitMode::Contiguous;
  double discard_fraction = 0.0;
  std::map<StateId, double> train_keep;  // per-state keep probability inside the training part

  DecoderSpec decoder;
  OracleConfig oracles;
  FaultTypeSet enabled;
  HeuristicConfig heuristics;
  std::optional<AuxSpec> aux;

  std::vector<SliceFamily> families;
  std::string task_family;

  std::vector<AcquisitionStrategy> strategies{AcquisitionStrategy::FaultBased, AcquisitionStrategy::Natural};
  std::size_t n = 500;
  double epsilon_floor = 0.0;
  std::optional<FaultType> distribution_type;  // pooled over all types when empty

  std::size_t trials = 10;
  std::uint64_t seed = 0;
  std::optional<double> delta_err;  // continuous precision tolerance; tau_step / 2 when empty
  std::size_t parallel_trials = 1;
  bool keep_sidecars = false;       // retain events/corrections/slices in trial reports
};

inline Decoder make_decoder(const DecoderSpec& spec, const Dataset& ds) {
  if (spec.type == "softmax") {
    if (ds.kind != LabelKind::Discrete) throw Error("softmax decoder needs a discrete dataset");
    return Decoder::softmax(ds.states.size(), spec.softmax, spec.retrain_mode, spec.incremental_epochs);
  }
  if (spec.type == "nearest_centroid") {
    if (ds.kind != LabelKind::Discrete) throw Error("nearest-centroid decoder needs a discrete dataset");
    return Decoder(NearestCentroid(ds.states.size()), spec.retrain_mode, spec.incremental_epochs);
  }
  if (spec.type == "wiener_cascade") {
    if (ds.kind != LabelKind::Continuous) throw Error("Wiener cascade needs a continuous dataset");
    return Decoder(WienerCascade(spec.wiener), spec.retrain_mode, spec.incremental_epochs);
  }
  throw Error("unknown decoder type '" + spec.type + "'");
}

// ---------------------------------------------------------------------------
// Reports

struct EvalResult {
  std::size_t length = 0;
  std::map<FaultType, std::size_t> fault_counts;  // every enabled type, zero included
  std::size_t summed_faults = 0;
  double fault_frequency = 0.0;
  double performance = 0.0;
};

struct StrategyResult {
  AcquisitionStrategy requested = AcquisitionStrategy::Natural;
  AcquisitionStrategy used = AcquisitionStrategy::Natural;
  std::optional<std::string> error;
  std::size_t acquired = 0;
  std::vector<std::uint64_t> acquired_indices;
  std::optional<TaskDistribution> distribution;
  std::vector<std::string> warnings;
  EvalResult test;
};

struct TrialReport {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::optional<std::string> error;
  std::array<std::size_t, 4> split_sizes{};
  std::size_t train_size = 0;  // after thinning
  std::string metric;

  EvalResult observe;
  std::map<FaultType, std::optional<double>> precision;
  Efficacy efficacy;
  std::size_t corrections = 0;
  LocalizationReport localization;

  EvalResult baseline;
  std::map<AcquisitionStrategy, StrategyResult> strategies;

  // sidecars (observation stream of this trial), kept when requested
  std::vector<FaultEvent> observe_events;
  std::vector<CorrectionRecord> correction_records;
  std::vector<SliceAssignment> slices;
};

struct ExperimentReport {
  std::vector<TrialReport> trials;
  nlohmann::json config_summary;
  nlohmann::json aggregates;
  nlohmann::json significance;
};

inline EvalResult evaluate_stream(const Stream& stream, const ExperimentConfig& cfg,
                                  const AuxiliaryBinaryClassifier* aux, std::vector<FaultEvent>* events_out = nullptr) {
  EvalResult r;
  r.length = stream.size();
  const auto events = run_oracles(stream, cfg.oracles, cfg.enabled, aux);
  for (FaultType t : cfg.enabled) r.fault_counts[t] = 0;
  for (const FaultEvent& e : events) ++r.fault_counts[e.type];
  for (const auto& [t, c] : r.fault_counts) r.summed_faults += c;
  r.fault_frequency = fault_frequency(events, stream.size());
  r.performance = performance(stream);
  if (events_out) *events_out = events;
  return r;
}

inline TrialReport run_trial(const ExperimentConfig& cfg, std::size_t trial_index) {
  TrialReport rep;
  rep.trial = trial_index;
  rep.seed = cfg.seed + trial_index;
  rep.metric = performance_metric(cfg.dataset.kind);
  try {
    std::vector<Sample> samples = cfg.dataset.samples;
    if (cfg.decoder.type == "wiener_cascade" && cfg.decoder.wiener.lags > 0)
      samples = embed_lags(samples, cfg.decoder.wiener.lags);
    if (cfg.discard_fraction > 0.0) samples = discard_block(samples, cfg.discard_fraction, rep.seed);
    const DatasetSplit split = split_dataset(samples, cfg.ratio, rep.seed, cfg.split_mode);
    rep.split_sizes = {split.train.size(), split.observe.size(), split.acquire.size(), split.test.size()};
    std::vector<Sample> train = split.train;
    if (!cfg.train_keep.empty()) train = thin_states(train, cfg.train_keep, rep.seed);
    rep.train_size = train.size();

    const Decoder baseline = make_decoder(cfg.decoder, cfg.dataset).fit(train);

    std::optional<AuxiliaryBinaryClassifier> aux;
    if (cfg.aux) {
      if (cfg.aux->mode == "threshold") {
        aux = AuxiliaryBinaryClassifier::mean_threshold(cfg.aux->columns, cfg.aux->threshold);
      } else {
        aux = AuxiliaryBinaryClassifier::fit_logistic(train, cfg.aux->columns, cfg.oracles.aux_map);
      }
    }
    const AuxiliaryBinaryClassifier* auxp = aux ? &*aux : nullptr;

    // Observation: simulated regular usage.
    const Stream observe = make_stream(split.observe, baseline);
    std::vector<FaultEvent> events;
    rep.observe = evaluate_stream(observe, cfg, auxp, &events);
    const double delta_err = cfg.delta_err.value_or(cfg.oracles.tau_step / 2.0);
    for (FaultType t : cfg.enabled) rep.precision[t] = oracle_precision(events_of_type(events, t), observe, delta_err);
    const CorrectedStream corrected = apply_corrections(observe, events, cfg.oracles, cfg.enabled, cfg.heuristics, auxp);
    rep.corrections = corrected.records.size();
    rep.efficacy = heuristic_efficacy(observe, corrected.stream);

    const auto slices = assign_slices(corrected.stream, cfg.families);
    std::vector<FamilyLabels> fams;
    for (const SliceFamily& f : cfg.families) fams.push_back({f.id, f.labels()});
    const std::vector<FaultType> types(cfg.enabled.begin(), cfg.enabled.end());
    rep.localization = localize(events, slices, fams, types, observe.size(), cfg.task_family, cfg.epsilon_floor);

    if (cfg.keep_sidecars) {
      rep.observe_events = events;
      rep.correction_records = corrected.records;
      rep.slices = slices;
    }

    // Test-set evaluation of the baseline and each repaired decoder.
    rep.baseline = evaluate_stream(make_stream(split.test, baseline), cfg, auxp);

    const SliceFamily* task_family = nullptr;
    for (const SliceFamily& f : cfg.families)
      if (f.id == cfg.task_family) task_family = &f;
    LocalizationArtifacts art{&observe, &corrected.stream, events, corrected.records, task_family};
    for (AcquisitionStrategy s : cfg.strategies) {
      StrategyResult sr;
      sr.requested = s;
      sr.used = s;
      try {
        AcquisitionPlan plan{s, cfg.n, rep.seed, cfg.epsilon_floor, cfg.distribution_type, std::nullopt};
        RepairOutcome outcome = execute_repair(baseline, plan, train, split.acquire, art);
        sr.used = outcome.used;
        sr.acquired = outcome.acquired.size();
        for (const Sample& a : outcome.acquired) sr.acquired_indices.push_back(a.index);
        sr.distribution = std::move(outcome.distribution);
        sr.warnings = std::move(outcome.warnings);
        sr.test = evaluate_stream(make_stream(split.test, outcome.decoder), cfg, auxp);
      } catch (const std::exception& ex) {
        sr.error = ex.what();
      }
      rep.strategies.emplace(s, std::move(sr));
    }
  } catch (const std::exception& ex) {
    rep.error = ex.what();
  }
  return rep;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const EvalResult& r) {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [t, c] : r.fault_counts) counts[to_string(t)] = c;
  return {{"length", r.length},
          {"fault_counts", counts},
          {"summed_faults", r.summed_faults},
          {"fault_frequency", r.fault_frequency},
          {"performance", r.performance}};
}

inline nlohmann::json to_json(const TrialReport& r) {
  nlohmann::json j;
  j["trial"] = r.trial;
  j["seed"] = r.seed;
  if (r.error) {
    j["error"] = *r.error;
    return j;
  }
  j["split_sizes"] = {{"train", r.split_sizes[0]}, {"observe", r.split_sizes[1]}, {"acquire", r.split_sizes[2]},
                      {"test", r.split_sizes[3]}};
  j["train_size_after_thinning"] = r.train_size;
  j["metric"] = r.metric;
  nlohmann::json precision = nlohmann::json::object();
  for (const auto& [t, p] : r.precision) precision[to_string(t)] = p ? nlohmann::json(*p) : nlohmann::json("n/a");
  j["observe"] = to_json(r.observe);
  j["observe"]["oracle_precision"] = precision;
  j["observe"]["corrections"] = r.corrections;
  j["observe"]["heuristic_efficacy"] = {{"before", r.efficacy.before}, {"after", r.efficacy.after}};
  j["observe"]["localization"] = to_json(r.localization);
  j["baseline"] = to_json(r.baseline);
  nlohmann::json strategies = nlohmann::json::object();
  for (const auto& [s, sr] : r.strategies) {
    nlohmann::json sj;
    sj["used_strategy"] = to_string(sr.used);
    if (sr.error) {
      sj["error"] = *sr.error;
    } else {
      sj["acquired"] = sr.acquired;
      sj["distribution"] = sr.distribution ? to_json(*sr.distribution) : nlohmann::json(nullptr);
      sj["warnings"] = sr.warnings;
      sj["test"] = to_json(sr.test);
      sj["delta_summed_faults"] =
          static_cast<double>(sr.test.summed_faults) - static_cast<double>(r.baseline.summed_faults);
      sj["delta_performance"] = sr.test.performance - r.baseline.performance;
    }
    strategies[to_string(s)] = sj;
  }
  j["strategies"] = strategies;
  return j;
}

inline nlohmann::json to_json(const Summary& s) { return {{"mean", s.mean}, {"sd", s.sd}, {"n", s.n}}; }

inline nlohmann::json to_json(const TTestResult& t) {
  return {{"t", std::isfinite(t.t) ? nlohmann::json(t.t) : nlohmann::json(t.t > 0 ? "inf" : "-inf")},
          {"df", t.df},
          {"p_value", t.p_value},
          {"mean_difference", t.mean_difference},
          {"significant", t.p_value < 0.05}};
}

inline nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : r.trials) trials.push_back(to_json(t));
  return {{"config", r.config_summary}, {"trials", trials}, {"aggregates", r.aggregates},
          {"significance", r.significance}};
}

/// Per-trial metric series of the baseline ("baseline") or a strategy, over
/// trials where it succeeded.
struct MetricSeries {
  std::vector<double> summed_faults, fault_frequency, performance;
  std::vector<std::size_t> trial_ids;
};

inline MetricSeries baseline_series(std::span<const TrialReport> trials) {
  MetricSeries m;
  for (const auto& t : trials) {
    if (t.error) continue;
    m.summed_faults.push_back(static_cast<double>(t.baseline.summed_faults));
    m.fault_frequency.push_back(t.baseline.fault_frequency);
    m.performance.push_back(t.baseline.performance);
    m.trial_ids.push_back(t.trial);
  }
  return m;
}

inline MetricSeries strategy_series(std::span<const TrialReport> trials, AcquisitionStrategy s) {
  MetricSeries m;
  for (const auto& t : trials) {
    if (t.error) continue;
    auto it = t.strategies.find(s);
    if (it == t.strategies.end() || it->second.error) continue;
    m.summed_faults.push_back(static_cast<double>(it->second.test.summed_faults));
    m.fault_frequency.push_back(it->second.test.fault_frequency);
    m.performance.push_back(it->second.test.performance);
    m.trial_ids.push_back(t.trial);
  }
  return m;
}

namespace detail {
// Restricts two series to the trials they share.
inline std::pair<std::vector<double>, std::vector<double>> paired(const MetricSeries& a, const std::vector<double>& av,
                                                                  const MetricSeries& b, const std::vector<double>& bv) {
  std::pair<std::vector<double>, std::vector<double>> out;
  for (std::size_t i = 0; i < a.trial_ids.size(); ++i) {
    auto it = std::find(b.trial_ids.begin(), b.trial_ids.end(), a.trial_ids[i]);
    if (it == b.trial_ids.end()) continue;
    out.first.push_back(av[i]);
    out.second.push_back(bv[static_cast<std::size_t>(it - b.trial_ids.begin())]);
  }
  return out;
}

inline nlohmann::json compare(const MetricSeries& a, const MetricSeries& b) {
  nlohmann::json j = nlohmann::json::object();
  const auto add = [&](const char* name, const std::vector<double>& av, const std::vector<double>& bv) {
    const auto [x, y] = paired(a, av, b, bv);
    if (x.size() < 2) {
      j[name] = "n/a";
      return;
    }
    j[name] = to_json(paired_t_test(x, y));
  };
  add("summed_faults", a.summed_faults, b.summed_faults);
  add("performance", a.performance, b.performance);
  return j;
}

inline nlohmann::json series_summary(const MetricSeries& m) {
  return {{"summed_faults", to_json(summarize(m.summed_faults))},
          {"fault_frequency", to_json(summarize(m.fault_frequency))},
          {"performance", to_json(summarize(m.performance))},
          {"trials", m.trial_ids.size()}};
}
}  // namespace detail

inline nlohmann::json config_summary(const ExperimentConfig& cfg) {
  nlohmann::json strategies = nlohmann::json::array();
  for (auto s : cfg.strategies) strategies.push_back(to_string(s));
  nlohmann::json enabled = nlohmann::json::array();
  for (auto t : cfg.enabled) enabled.push_back(to_string(t));
  return {{"seed", cfg.seed},
          {"trials", cfg.trials},
          {"ratio", cfg.ratio},
          {"split_mode", cfg.split_mode == SplitMode::Contiguous ? "contiguous" : "shuffled"},
          {"dataset_kind", to_string(cfg.dataset.kind)},
          {"dataset_size", cfg.dataset.samples.size()},
          {"decoder", cfg.decoder.type},
          {"retrain_mode", to_string(cfg.decoder.retrain_mode)},
          {"acquisition_n", cfg.n},
          {"epsilon_floor", cfg.epsilon_floor},
          {"strategies", strategies},
          {"enabled_oracles", enabled},
          {"oracle_window", cfg.oracles.window},
          {"flicker_k", cfg.oracles.flicker_k}};
}

inline ExperimentReport run_trials(const ExperimentConfig& cfg) {
  if (cfg.trials == 0) throw ConfigError("trial count must be positive");
  if (cfg.n == 0) throw ConfigError("acquisition size n must be positive");
  ExperimentReport rep;
  rep.trials.resize(cfg.trials);
  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.parallel_trials, cfg.trials));
  if (workers == 1) {
    for (std::size_t i = 0; i < cfg.trials; ++i) rep.trials[i] = run_trial(cfg, i);
  } else {
    std::mutex mu;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        while (true) {
          std::size_t i = 0;
          {
            std::lock_guard lock(mu);
            if (next >= cfg.trials) return;
            i = next++;
          }
          rep.trials[i] = run_trial(cfg, i);
        }
      });
    for (auto& th : pool) th.join();
  }

  rep.config_summary = config_summary(cfg);
  const MetricSeries base = baseline_series(rep.trials);
  nlohmann::json agg;
  agg["baseline"] = detail::series_summary(base);
  nlohmann::json sig = nlohmann::json::object();
  std::map<AcquisitionStrategy, MetricSeries> series;
  for (auto s : cfg.strategies) {
    series[s] = strategy_series(rep.trials, s);
    agg[to_string(s)] = detail::series_summary(series[s]);
    sig[std::string(to_string(s)) + "_vs_baseline"] = detail::compare(series[s], base);
  }
  for (std::size_t i = 0; i < cfg.strategies.size(); ++i)
    for (std::size_t k = i + 1; k < cfg.strategies.size(); ++k) {
      const auto a = cfg.strategies[i];
      const auto b = cfg.strategies[k];
      sig[std::string(to_string(a)) + "_vs_" + to_string(b)] = detail::compare(series[a], series[b]);
    }
  std::size_t failed = 0;
  for (const auto& t : rep.trials) failed += t.error ? 1 : 0;
  agg["failed_trials"] = failed;
  rep.aggregates = agg;
  rep.significance = sig;
  return rep;
}

}  // namespace bcirepair
