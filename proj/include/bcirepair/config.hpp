#pragma once

// Run configuration: one JSON document describing data source, decoder,
// oracles, slices, heuristics, acquisition and trial settings. Parsing
// collects every problem before failing so a config can be fixed in one pass.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bcirepair/datamodel.hpp"
#include "bcirepair/decoders.hpp"
#include "bcirepair/error.hpp"
#include "bcirepair/evaluation.hpp"
#include "bcirepair/oracles.hpp"
#include "bcirepair/repair.hpp"
#include "bcirepair/slicing.hpp"
#include "bcirepair/synthgen.hpp"

namespace bcirepair {

struct CsvSource {
  std::string path;
  LabelKind kind = LabelKind::Discrete;
  std::vector<std::string> states;
};

using DataSource = std::variant<DiscreteScenario, ContinuousScenario, CsvSource>;

struct RunConfig {
  DataSource source;
  ExperimentConfig experiment;  // dataset filled by load_dataset
  std::string output_dir = "out";
  bool write_sidecars = true;
  nlohmann::json raw;  // the parsed document, echoed into manifests

  LabelKind kind() const {
    if (std::holds_alternative<DiscreteScenario>(source)) return LabelKind::Discrete;
    if (std::holds_alternative<ContinuousScenario>(source)) return LabelKind::Continuous;
    return std::get<CsvSource>(source).kind;
  }
  const std::vector<std::string>& states() const {
    static const std::vector<std::string> none;
    if (const auto* d = std::get_if<DiscreteScenario>(&source)) return d->states;
    if (const auto* c = std::get_if<CsvSource>(&source)) return c->states;
    return none;
  }
};

namespace detail {

class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  bool object(const nlohmann::json& j, const std::string& path) {
    if (j.is_object()) return true;
    fail(path, "expected an object");
    return false;
  }

  void allow(const nlohmann::json& j, const std::string& path, std::initializer_list<const char*> keys) {
    if (!j.is_object()) return;
    for (const auto& [k, v] : j.items()) {
      bool known = false;
      for (const char* a : keys) known = known || k == a;
      if (!known) fail(join(path, k), "unknown key");
    }
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  template <class T>
  std::optional<T> as(const nlohmann::json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (v.is_boolean()) return v.get<bool>();
      fail(path, "expected a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (v.is_string()) return v.get<std::string>();
      fail(path, "expected a string");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (v.is_number()) return v.get<T>();
      fail(path, "expected a number");
    } else if constexpr (std::is_unsigned_v<T>) {
      // programmatically built documents store small integers as signed
      if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0))
        return static_cast<T>(v.get<std::uint64_t>());
      fail(path, "expected a non-negative integer");
    } else if constexpr (std::is_integral_v<T>) {
      if (v.is_number_integer()) return v.get<T>();
      fail(path, "expected an integer");
    } else {
      static_assert(sizeof(T) == 0, "unsupported config value type");
    }
    return std::nullopt;
  }

  template <class T>
  std::optional<T> get(const nlohmann::json& obj, const std::string& path, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
    return as<T>(obj.at(key), join(path, key));
  }

  template <class T>
  std::optional<T> need(const nlohmann::json& obj, const std::string& path, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) {
      fail(join(path, key), "required");
      return std::nullopt;
    }
    return as<T>(obj.at(key), join(path, key));
  }

  template <class T>
  void read(const nlohmann::json& obj, const std::string& path, const char* key, T& out) {
    if (auto v = get<T>(obj, path, key)) out = *v;
  }

  std::optional<std::vector<double>> numbers(const nlohmann::json& v, const std::string& path) {
    if (!v.is_array()) {
      fail(path, "expected an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto x = as<double>(v[i], path + "[" + std::to_string(i) + "]");
      if (!x) return std::nullopt;
      out.push_back(*x);
    }
    return out;
  }

  std::optional<std::vector<std::string>> strings(const nlohmann::json& v, const std::string& path) {
    if (!v.is_array()) {
      fail(path, "expected an array of strings");
      return std::nullopt;
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto x = as<std::string>(v[i], path + "[" + std::to_string(i) + "]");
      if (!x) return std::nullopt;
      out.push_back(*x);
    }
    return out;
  }

  // [[lo, hi], ...]
  std::optional<Box> box(const nlohmann::json& v, const std::string& path) {
    if (!v.is_array()) {
      fail(path, "expected an array of [lo, hi] pairs");
      return std::nullopt;
    }
    Box out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      auto pair = numbers(v[i], p);
      if (!pair) return std::nullopt;
      if (pair->size() != 2) {
        fail(p, "expected [lo, hi]");
        return std::nullopt;
      }
      if (!((*pair)[0] < (*pair)[1])) fail(p, "needs lo < hi");
      out.push_back({(*pair)[0], (*pair)[1]});
    }
    return out;
  }

  std::optional<StateId> state(const std::vector<std::string>& states, const nlohmann::json& v,
                               const std::string& path) {
    auto name = as<std::string>(v, path);
    if (!name) return std::nullopt;
    for (std::size_t i = 0; i < states.size(); ++i)
      if (states[i] == *name) return i;
    fail(path, "'" + *name + "' is not a declared state");
    return std::nullopt;
  }

  // [["A", "B"], ...] -> legality matrix with those transitions forbidden.
  LegalityMatrix legality(const std::vector<std::string>& states, const nlohmann::json* pairs,
                          const std::string& path) {
    LegalityMatrix m = LegalityMatrix::all_legal(states.size());
    if (pairs == nullptr) return m;
    if (!pairs->is_array()) {
      fail(path, "expected an array of [from, to] pairs");
      return m;
    }
    for (std::size_t i = 0; i < pairs->size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      const auto& pr = (*pairs)[i];
      if (!pr.is_array() || pr.size() != 2) {
        fail(p, "expected [from, to]");
        continue;
      }
      auto a = state(states, pr[0], p + "[0]");
      auto b = state(states, pr[1], p + "[1]");
      if (!a || !b) continue;
      if (*a == *b) {
        fail(p, "self-transitions cannot be forbidden");
        continue;
      }
      m.forbid(*a, *b);
    }
    return m;
  }

  // {"State": "awake" | "asleep", ...} -> per-state vigilance, all states required.
  std::vector<Vigilance> vigilance_map(const std::vector<std::string>& states, const nlohmann::json& v,
                                       const std::string& path) {
    std::vector<Vigilance> out(states.size(), Vigilance::Awake);
    if (!object(v, path)) return {};
    std::vector<bool> seen(states.size(), false);
    for (const auto& [k, val] : v.items()) {
      auto s = state(states, nlohmann::json(k), join(path, k));
      auto word = as<std::string>(val, join(path, k));
      if (!s || !word) continue;
      if (*word != "awake" && *word != "asleep") {
        fail(join(path, k), "expected \"awake\" or \"asleep\"");
        continue;
      }
      out[*s] = parse_vigilance(*word);
      seen[*s] = true;
    }
    for (std::size_t i = 0; i < states.size(); ++i)
      if (!seen[i]) fail(path, "state '" + states[i] + "' has no vigilance entry");
    return out;
  }
};

inline DiscreteScenario parse_discrete_scenario(Reader& r, const nlohmann::json& j, const std::string& path,
                                                std::uint64_t master_seed) {
  DiscreteScenario sc;
  sc.seed = master_seed;
  if (!r.object(j, path)) return sc;
  r.allow(j, path,
          {"states", "illegal_transitions", "dwell", "means", "noise", "weights", "artifact_rate", "artifact_length",
           "hypo_scale", "hyper_scale", "vigilance", "aux_features", "aux_noise", "length", "seed"});
  if (j.contains("states"))
    if (auto s = r.strings(j.at("states"), Reader::join(path, "states"))) sc.states = *s;
  if (!j.contains("states")) r.fail(Reader::join(path, "states"), "required");
  std::set<std::string> unique(sc.states.begin(), sc.states.end());
  if (unique.size() != sc.states.size()) r.fail(Reader::join(path, "states"), "state names must be unique");
  sc.legality = r.legality(sc.states, j.contains("illegal_transitions") ? &j.at("illegal_transitions") : nullptr,
                           Reader::join(path, "illegal_transitions"));
  r.read(j, path, "dwell", sc.dwell);
  if (j.contains("means")) {
    const auto& m = j.at("means");
    if (!m.is_array()) r.fail(Reader::join(path, "means"), "expected one feature-mean array per state");
    else
      for (std::size_t i = 0; i < m.size(); ++i)
        if (auto v = r.numbers(m[i], Reader::join(path, "means") + "[" + std::to_string(i) + "]")) sc.means.push_back(*v);
  } else {
    r.fail(Reader::join(path, "means"), "required");
  }
  r.read(j, path, "noise", sc.noise);
  if (j.contains("weights")) {
    if (auto w = r.numbers(j.at("weights"), Reader::join(path, "weights"))) sc.weights = *w;
  } else {
    sc.weights.assign(sc.states.size(), 1.0);
  }
  r.read(j, path, "artifact_rate", sc.artifact_rate);
  r.read(j, path, "artifact_length", sc.artifact_length);
  r.read(j, path, "hypo_scale", sc.hypo_scale);
  r.read(j, path, "hyper_scale", sc.hyper_scale);
  r.read(j, path, "aux_features", sc.aux_features);
  r.read(j, path, "aux_noise", sc.aux_noise);
  if (j.contains("vigilance")) sc.vigilance = r.vigilance_map(sc.states, j.at("vigilance"), Reader::join(path, "vigilance"));
  r.read(j, path, "length", sc.length);
  r.read(j, path, "seed", sc.seed);
  for (const auto& p : sc.problems()) r.fail(path, p);
  return sc;
}

inline ContinuousScenario parse_continuous_scenario(Reader& r, const nlohmann::json& j, const std::string& path,
                                                    std::uint64_t master_seed) {
  ContinuousScenario sc;
  sc.seed = master_seed;
  if (!r.object(j, path)) return sc;
  r.allow(j, path, {"bounds", "step_sigma", "momentum", "mixing", "noise", "offset", "length", "seed"});
  if (j.contains("bounds"))
    if (auto b = r.box(j.at("bounds"), Reader::join(path, "bounds"))) sc.bounds = *b;
  r.read(j, path, "step_sigma", sc.step_sigma);
  r.read(j, path, "momentum", sc.momentum);
  if (j.contains("mixing")) {
    const auto& m = j.at("mixing");
    if (!m.is_array()) r.fail(Reader::join(path, "mixing"), "expected an array of rows");
    else
      for (std::size_t i = 0; i < m.size(); ++i)
        if (auto v = r.numbers(m[i], Reader::join(path, "mixing") + "[" + std::to_string(i) + "]"))
          sc.mixing.push_back(*v);
  }
  r.read(j, path, "noise", sc.noise);
  r.read(j, path, "offset", sc.offset);
  r.read(j, path, "length", sc.length);
  r.read(j, path, "seed", sc.seed);
  for (const auto& p : sc.problems()) r.fail(path, p);
  return sc;
}

inline std::optional<LabelKind> parse_kind(Reader& r, const nlohmann::json& j, const std::string& path) {
  auto k = r.need<std::string>(j, path, "kind");
  if (!k) return std::nullopt;
  if (*k == "discrete") return LabelKind::Discrete;
  if (*k == "continuous") return LabelKind::Continuous;
  r.fail(Reader::join(path, "kind"), "expected \"discrete\" or \"continuous\"");
  return std::nullopt;
}

inline DataSource parse_source(Reader& r, const nlohmann::json& j, std::uint64_t seed) {
  const std::string path = "dataset";
  if (!r.object(j, path)) return DiscreteScenario{};
  const auto source = r.need<std::string>(j, path, "source");
  const auto kind = parse_kind(r, j, path);
  if (source && *source == "synthetic") {
    r.allow(j, path, {"source", "kind", "scenario"});
    if (!j.contains("scenario")) {
      r.fail("dataset.scenario", "required for synthetic data");
      return DiscreteScenario{};
    }
    if (kind == LabelKind::Continuous) return parse_continuous_scenario(r, j.at("scenario"), "dataset.scenario", seed);
    return parse_discrete_scenario(r, j.at("scenario"), "dataset.scenario", seed);
  }
  if (source && *source == "csv") {
    r.allow(j, path, {"source", "kind", "path", "states"});
    CsvSource csv;
    csv.kind = kind.value_or(LabelKind::Discrete);
    if (auto p = r.need<std::string>(j, path, "path")) csv.path = *p;
    if (j.contains("states")) {
      if (auto s = r.strings(j.at("states"), "dataset.states")) csv.states = *s;
    } else if (csv.kind == LabelKind::Discrete) {
      r.fail("dataset.states", "required for discrete CSV data");
    }
    return csv;
  }
  if (source) r.fail("dataset.source", "expected \"synthetic\" or \"csv\"");
  return DiscreteScenario{};
}

inline void parse_split(Reader& r, const nlohmann::json& j, const std::vector<std::string>& states,
                        ExperimentConfig& cfg) {
  const std::string path = "split";
  if (!r.object(j, path)) return;
  r.allow(j, path, {"ratio", "mode", "discard_fraction", "train_keep"});
  if (j.contains("ratio")) {
    if (auto v = r.numbers(j.at("ratio"), "split.ratio")) {
      if (v->size() != 4) r.fail("split.ratio", "expected four parts (train, observe, acquire, test)");
      else
        for (std::size_t i = 0; i < 4; ++i) cfg.ratio[i] = (*v)[i];
    }
  }
  for (std::size_t i = 0; i < 4; ++i)
    if (cfg.ratio[i] < 0.0) r.fail("split.ratio", "parts must be non-negative");
  if (!(cfg.ratio[0] > 0.0 && cfg.ratio[1] > 0.0 && cfg.ratio[3] > 0.0))
    r.fail("split.ratio", "train, observe and test parts must be positive");
  if (auto m = r.get<std::string>(j, path, "mode")) {
    if (*m == "contiguous") cfg.split_mode = SplitMode::Contiguous;
    else if (*m == "shuffled") cfg.split_mode = SplitMode::Shuffled;
    else r.fail("split.mode", "expected \"contiguous\" or \"shuffled\"");
  }
  r.read(j, path, "discard_fraction", cfg.discard_fraction);
  if (cfg.discard_fraction < 0.0 || cfg.discard_fraction >= 1.0) r.fail("split.discard_fraction", "must lie in [0, 1)");
  if (j.contains("train_keep") && r.object(j.at("train_keep"), "split.train_keep")) {
    for (const auto& [k, v] : j.at("train_keep").items()) {
      const std::string p = "split.train_keep." + k;
      auto s = r.state(states, nlohmann::json(k), p);
      auto keep = r.as<double>(v, p);
      if (!s || !keep) continue;
      if (*keep < 0.0 || *keep > 1.0) r.fail(p, "keep probability must lie in [0, 1]");
      cfg.train_keep[*s] = *keep;
    }
  }
}

inline void parse_decoder(Reader& r, const nlohmann::json& j, LabelKind kind, ExperimentConfig& cfg) {
  const std::string path = "decoder";
  DecoderSpec& d = cfg.decoder;
  d.type = kind == LabelKind::Discrete ? "softmax" : "wiener_cascade";
  if (!r.object(j, path)) return;
  r.allow(j, path,
          {"type", "learning_rate", "epochs", "l2", "lags", "degree", "ridge", "retrain_mode", "incremental_epochs"});
  r.read(j, path, "type", d.type);
  if (d.type != "softmax" && d.type != "nearest_centroid" && d.type != "wiener_cascade")
    r.fail("decoder.type", "expected softmax, nearest_centroid or wiener_cascade");
  else if ((d.type == "wiener_cascade") != (kind == LabelKind::Continuous))
    r.fail("decoder.type", "'" + d.type + "' does not match the " + to_string(kind) + " dataset");
  r.read(j, path, "learning_rate", d.softmax.learning_rate);
  r.read(j, path, "epochs", d.softmax.epochs);
  r.read(j, path, "l2", d.softmax.l2);
  r.read(j, path, "lags", d.wiener.lags);
  r.read(j, path, "degree", d.wiener.degree);
  r.read(j, path, "ridge", d.wiener.ridge);
  if (!(d.softmax.learning_rate > 0.0)) r.fail("decoder.learning_rate", "must be positive");
  if (d.softmax.epochs < 1) r.fail("decoder.epochs", "must be at least 1");
  if (d.softmax.l2 < 0.0) r.fail("decoder.l2", "must be non-negative");
  if (d.wiener.degree < 1) r.fail("decoder.degree", "must be at least 1");
  if (d.wiener.ridge < 0.0) r.fail("decoder.ridge", "must be non-negative");
  if (auto m = r.get<std::string>(j, path, "retrain_mode")) {
    if (*m == "concat") d.retrain_mode = RetrainMode::Concat;
    else if (*m == "incremental") d.retrain_mode = RetrainMode::Incremental;
    else r.fail("decoder.retrain_mode", "expected \"concat\" or \"incremental\"");
  }
  if (d.retrain_mode == RetrainMode::Incremental && d.type != "softmax")
    r.fail("decoder.retrain_mode", "incremental retraining needs the softmax decoder");
  r.read(j, path, "incremental_epochs", d.incremental_epochs);
  if (d.incremental_epochs < 1) r.fail("decoder.incremental_epochs", "must be at least 1");
}

inline FaultTypeSet default_oracles(LabelKind kind) {
  if (kind == LabelKind::Discrete) return {FaultType::IllegalTransition, FaultType::TemporalInconsistencyDiscrete};
  return {FaultType::TemporalInconsistencyContinuous, FaultType::RapidMotion, FaultType::OutOfBounds};
}

inline void parse_oracles(Reader& r, const nlohmann::json& j, LabelKind kind, const std::vector<std::string>& states,
                          ExperimentConfig& cfg) {
  const std::string path = "oracles";
  OracleConfig& o = cfg.oracles;
  o.state_names = states;
  cfg.enabled = default_oracles(kind);
  if (kind == LabelKind::Discrete) o.legality = LegalityMatrix::all_legal(states.size());
  if (!r.object(j, path)) return;
  r.allow(j, path,
          {"enabled", "window", "flicker_k", "tau_tv", "tau_step", "illegal_transitions", "bounds", "aux_map",
           "activity", "aux_classifier", "delta_err"});
  if (j.contains("enabled")) {
    if (auto names = r.strings(j.at("enabled"), "oracles.enabled")) {
      cfg.enabled.clear();
      for (const auto& n : *names) {
        try {
          const FaultType t = parse_fault_type(n);
          const auto k = applies_to(t);
          if (k && *k != kind) r.fail("oracles.enabled", "'" + n + "' does not apply to " + to_string(kind) + " outputs");
          cfg.enabled.insert(t);
        } catch (const Error& e) {
          r.fail("oracles.enabled", e.what());
        }
      }
    }
  }
  r.read(j, path, "window", o.window);
  r.read(j, path, "flicker_k", o.flicker_k);
  r.read(j, path, "tau_tv", o.tau_tv);
  r.read(j, path, "tau_step", o.tau_step);
  if (kind == LabelKind::Discrete)
    o.legality = r.legality(states, j.contains("illegal_transitions") ? &j.at("illegal_transitions") : nullptr,
                            "oracles.illegal_transitions");
  else if (j.contains("illegal_transitions"))
    r.fail("oracles.illegal_transitions", "only applies to discrete outputs");
  if (j.contains("bounds"))
    if (auto b = r.box(j.at("bounds"), "oracles.bounds")) o.bounds = *b;
  if (j.contains("aux_map")) o.aux_map = r.vigilance_map(states, j.at("aux_map"), "oracles.aux_map");
  if (j.contains("activity") && r.object(j.at("activity"), "oracles.activity")) {
    r.allow(j.at("activity"), "oracles.activity", {"lo", "hi"});
    if (auto lo = r.need<double>(j.at("activity"), "oracles.activity", "lo")) o.activity_lo = *lo;
    if (auto hi = r.need<double>(j.at("activity"), "oracles.activity", "hi")) o.activity_hi = *hi;
  }
  if (j.contains("aux_classifier") && r.object(j.at("aux_classifier"), "oracles.aux_classifier")) {
    const auto& a = j.at("aux_classifier");
    const std::string ap = "oracles.aux_classifier";
    r.allow(a, ap, {"mode", "columns", "threshold"});
    AuxSpec spec;
    r.read(a, ap, "mode", spec.mode);
    if (spec.mode != "logistic" && spec.mode != "threshold") r.fail(ap + ".mode", "expected logistic or threshold");
    if (a.contains("columns") && a.at("columns").is_array()) {
      for (std::size_t i = 0; i < a.at("columns").size(); ++i)
        if (auto c = r.as<std::size_t>(a.at("columns")[i], ap + ".columns[" + std::to_string(i) + "]"))
          spec.columns.push_back(*c);
    } else {
      r.fail(ap + ".columns", "required array of feature columns");
    }
    if (spec.columns.empty()) r.fail(ap + ".columns", "needs at least one column");
    r.read(a, ap, "threshold", spec.threshold);
    if (spec.mode == "logistic" && o.aux_map.empty()) r.fail(ap, "logistic mode needs oracles.aux_map to label training data");
    cfg.aux = spec;
  }
  if (auto d = r.get<double>(j, path, "delta_err")) cfg.delta_err = *d;
  for (const auto& p : o.problems()) r.fail(path, p);
  if (cfg.enabled.count(FaultType::MultimodalInconsistency) && (o.aux_map.empty() || !cfg.aux))
    r.fail(path, "multimodal_inconsistency needs aux_map and aux_classifier");
  if (cfg.enabled.count(FaultType::OutOfBounds) && o.bounds.empty()) r.fail(path, "out_of_bounds needs bounds");
  if (cfg.enabled.count(FaultType::InputArtifact) && !(std::isfinite(o.activity_lo) && std::isfinite(o.activity_hi)))
    r.fail(path, "input_artifact needs activity thresholds");
}

inline void parse_heuristics(Reader& r, const nlohmann::json& j, const std::vector<std::string>& states,
                             ExperimentConfig& cfg) {
  if (!r.object(j, "heuristics")) return;
  r.allow(j, "heuristics", {"wake_state", "default_sleep_state"});
  if (j.contains("wake_state")) cfg.heuristics.wake_state = r.state(states, j.at("wake_state"), "heuristics.wake_state");
  if (j.contains("default_sleep_state"))
    cfg.heuristics.default_sleep_state = r.state(states, j.at("default_sleep_state"), "heuristics.default_sleep_state");
}

inline void parse_slices(Reader& r, const nlohmann::json* j, LabelKind kind, const std::vector<std::string>& states,
                         const ExperimentConfig& base, std::vector<SliceFamily>& out) {
  if (j == nullptr) {
    // default: task slices of the output
    SliceFamily f;
    if (kind == LabelKind::Discrete) {
      f.id = "task";
      f.function = SliceFunction::Task;
      f.task_names = states;
    } else {
      f.id = "direction";
      f.function = SliceFunction::Direction;
      f.epsilon_speed = base.oracles.tau_step / 10.0;
    }
    out.push_back(std::move(f));
    return;
  }
  if (!j->is_array()) {
    r.fail("slices", "expected an array of slice families");
    return;
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j->size(); ++i) {
    const std::string p = "slices[" + std::to_string(i) + "]";
    const auto& s = (*j)[i];
    if (!r.object(s, p)) continue;
    r.allow(s, p, {"id", "function", "bins", "epsilon_speed", "bounds", "lo", "hi"});
    SliceFamily f;
    auto id = r.need<std::string>(s, p, "id");
    auto fn = r.need<std::string>(s, p, "function");
    if (!id || !fn) continue;
    f.id = *id;
    if (!ids.insert(f.id).second) r.fail(p + ".id", "duplicate family id '" + f.id + "'");
    try {
      f.function = parse_slice_function(*fn);
    } catch (const Error& e) {
      r.fail(p + ".function", e.what());
      continue;
    }
    const bool output_task = f.function == SliceFunction::Task;
    const bool continuous_fn = f.function == SliceFunction::Direction || f.function == SliceFunction::Quadrant;
    if (output_task && kind != LabelKind::Discrete) r.fail(p + ".function", "task slices need discrete outputs");
    if (continuous_fn && kind != LabelKind::Continuous) r.fail(p + ".function", *fn + " slices need continuous outputs");
    f.task_names = states;
    r.read(s, p, "bins", f.direction_bins);
    f.epsilon_speed = base.oracles.tau_step / 10.0;
    r.read(s, p, "epsilon_speed", f.epsilon_speed);
    if (s.contains("bounds")) {
      if (auto b = r.box(s.at("bounds"), p + ".bounds")) f.bounds = *b;
    } else {
      f.bounds = base.oracles.bounds;
    }
    if (f.function == SliceFunction::Activity) {
      f.activity_lo = base.oracles.activity_lo;
      f.activity_hi = base.oracles.activity_hi;
    }
    r.read(s, p, "lo", f.activity_lo);
    r.read(s, p, "hi", f.activity_hi);
    try {
      f.validate();
    } catch (const Error& e) {
      r.fail(p, e.what());
      continue;
    }
    out.push_back(std::move(f));
  }
}

inline void parse_acquisition(Reader& r, const nlohmann::json& j, ExperimentConfig& cfg) {
  const std::string path = "acquisition";
  if (!r.object(j, path)) return;
  r.allow(j, path, {"strategies", "n", "epsilon_floor", "fault_type"});
  if (j.contains("strategies")) {
    if (auto names = r.strings(j.at("strategies"), "acquisition.strategies")) {
      cfg.strategies.clear();
      for (const auto& n : *names) {
        try {
          const auto s = parse_strategy(n);
          if (std::find(cfg.strategies.begin(), cfg.strategies.end(), s) != cfg.strategies.end())
            r.fail("acquisition.strategies", "duplicate strategy '" + n + "'");
          else cfg.strategies.push_back(s);
        } catch (const Error& e) {
          r.fail("acquisition.strategies", e.what());
        }
      }
      if (cfg.strategies.empty()) r.fail("acquisition.strategies", "needs at least one strategy");
    }
  }
  r.read(j, path, "n", cfg.n);
  if (cfg.n == 0) r.fail("acquisition.n", "must be positive");
  r.read(j, path, "epsilon_floor", cfg.epsilon_floor);
  if (cfg.epsilon_floor < 0.0 || cfg.epsilon_floor >= 1.0) r.fail("acquisition.epsilon_floor", "must lie in [0, 1)");
  if (auto t = r.get<std::string>(j, path, "fault_type")) {
    try {
      cfg.distribution_type = parse_fault_type(*t);
    } catch (const Error& e) {
      r.fail("acquisition.fault_type", e.what());
    }
  }
}

}  // namespace detail

/// Parses and validates a run configuration; throws ConfigError listing every
/// problem found.
inline RunConfig parse_run_config(const nlohmann::json& j) {
  detail::Reader r;
  RunConfig rc;
  rc.raw = j;
  if (!r.object(j, "config")) throw ConfigError("config: expected a JSON object");
  r.allow(j, "", {"seed", "trials", "parallel_trials", "output_dir", "write_sidecars", "dataset", "split", "decoder",
                  "oracles", "heuristics", "slices", "task_family", "acquisition"});
  ExperimentConfig& cfg = rc.experiment;
  r.read(j, "", "seed", cfg.seed);
  r.read(j, "", "trials", cfg.trials);
  if (cfg.trials == 0) r.fail("trials", "must be positive");
  r.read(j, "", "parallel_trials", cfg.parallel_trials);
  if (cfg.parallel_trials == 0) r.fail("parallel_trials", "must be positive");
  r.read(j, "", "output_dir", rc.output_dir);
  r.read(j, "", "write_sidecars", rc.write_sidecars);

  if (j.contains("dataset")) rc.source = detail::parse_source(r, j.at("dataset"), cfg.seed);
  else r.fail("dataset", "required");
  const LabelKind kind = rc.kind();
  const std::vector<std::string> states = rc.states();

  const nlohmann::json empty = nlohmann::json::object();
  const auto section = [&](const char* key) -> const nlohmann::json& { return j.contains(key) ? j.at(key) : empty; };
  detail::parse_split(r, section("split"), states, cfg);
  detail::parse_decoder(r, section("decoder"), kind, cfg);
  detail::parse_oracles(r, section("oracles"), kind, states, cfg);
  detail::parse_heuristics(r, section("heuristics"), states, cfg);
  detail::parse_slices(r, j.contains("slices") ? &j.at("slices") : nullptr, kind, states, cfg, cfg.families);
  detail::parse_acquisition(r, section("acquisition"), cfg);

  if (auto tf = r.get<std::string>(j, "", "task_family")) {
    cfg.task_family = *tf;
  } else {
    for (const auto& f : cfg.families)
      if (f.kind() == SliceKind::Output) {
        cfg.task_family = f.id;
        break;
      }
  }
  const auto tf = std::find_if(cfg.families.begin(), cfg.families.end(),
                               [&](const SliceFamily& f) { return f.id == cfg.task_family; });
  const bool fault_based = std::any_of(cfg.strategies.begin(), cfg.strategies.end(), [](AcquisitionStrategy s) {
    return s == AcquisitionStrategy::FaultBased || s == AcquisitionStrategy::FaultBasedNoHeuristics;
  });
  if (!cfg.task_family.empty() && tf == cfg.families.end())
    r.fail("task_family", "'" + cfg.task_family + "' is not a configured slice family");
  else if (tf != cfg.families.end() && tf->kind() != SliceKind::Output)
    r.fail("task_family", "must be an output slice family");
  else if (cfg.task_family.empty() && fault_based)
    r.fail("task_family", "fault-based acquisition needs an output slice family");

  if (!r.errors.empty()) {
    std::string msg = "invalid configuration (" + std::to_string(r.errors.size()) + " problem" +
                      (r.errors.size() == 1 ? "" : "s") + "):";
    for (const auto& e : r.errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

/// Materializes the configured data source into rc.experiment.dataset.
inline void load_dataset(RunConfig& rc) {
  Dataset ds;
  if (const auto* d = std::get_if<DiscreteScenario>(&rc.source)) {
    ds = gen_discrete(*d).dataset;
  } else if (const auto* c = std::get_if<ContinuousScenario>(&rc.source)) {
    ds = gen_continuous(*c);
  } else {
    const auto& csv = std::get<CsvSource>(rc.source);
    ds = read_csv_file(csv.path, csv.states);
    if (ds.kind != csv.kind)
      throw ConfigError("dataset '" + csv.path + "' holds " + to_string(ds.kind) + " labels, config says " +
                        to_string(csv.kind));
  }
  ds.validate();
  if (ds.samples.empty()) throw Error("dataset is empty");
  if (rc.experiment.aux)
    for (std::size_t c : rc.experiment.aux->columns)
      if (c >= ds.feature_dim())
        throw ConfigError("oracles.aux_classifier.columns: column " + std::to_string(c) + " exceeds the feature width " +
                          std::to_string(ds.feature_dim()));
  if (ds.kind == LabelKind::Continuous) {
    const std::size_t dim = ds.label_dim;
    if (!rc.experiment.oracles.bounds.empty() && rc.experiment.oracles.bounds.size() != dim)
      throw ConfigError("oracles.bounds: dimension does not match the " + std::to_string(dim) + "-D labels");
  }
  rc.experiment.dataset = std::move(ds);
}

}  // namespace bcirepair
