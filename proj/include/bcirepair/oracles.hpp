#pragma once

// Stateful partial test oracles over a prediction stream.
//
// Every oracle looks only at the current execution and a bounded history of
// raw decoder outputs, so detection is causal: an event's end index is the
// execution at which it fired. Events carry stream positions (execution
// ordinals), not dataset indices.

#include <array>
#include <cmath>
#include <cstddef>
#include <deque>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcirepair/datamodel.hpp"
#include "bcirepair/decoders.hpp"
#include "bcirepair/error.hpp"

namespace bcirepair {

enum class FaultType {
  IllegalTransition,
  TemporalInconsistencyDiscrete,
  TemporalInconsistencyContinuous,
  RapidMotion,
  OutOfBounds,
  MultimodalInconsistency,
  InputArtifact,
};

inline constexpr std::array<FaultType, 7> kAllFaultTypes{
    FaultType::IllegalTransition,   FaultType::TemporalInconsistencyDiscrete,
    FaultType::TemporalInconsistencyContinuous, FaultType::RapidMotion,
    FaultType::OutOfBounds,         FaultType::MultimodalInconsistency,
    FaultType::InputArtifact,
};

using FaultTypeSet = std::set<FaultType>;

inline const char* to_string(FaultType t) {
  switch (t) {
    case FaultType::IllegalTransition: return "illegal_transition";
    case FaultType::TemporalInconsistencyDiscrete: return "temporal_inconsistency_discrete";
    case FaultType::TemporalInconsistencyContinuous: return "temporal_inconsistency_continuous";
    case FaultType::RapidMotion: return "rapid_motion";
    case FaultType::OutOfBounds: return "out_of_bounds";
    case FaultType::MultimodalInconsistency: return "multimodal_inconsistency";
    case FaultType::InputArtifact: return "input_artifact";
  }
  return "unknown";
}

inline FaultType parse_fault_type(const std::string& s) {
  for (FaultType t : kAllFaultTypes)
    if (s == to_string(t)) return t;
  throw Error("unknown fault type '" + s + "'");
}

enum class FaultCategory { InputValidation, TemporalValidation, Consistency, DomainKnowledge };

inline const char* to_string(FaultCategory c) {
  switch (c) {
    case FaultCategory::InputValidation: return "input_validation";
    case FaultCategory::TemporalValidation: return "temporal_validation";
    case FaultCategory::Consistency: return "consistency";
    case FaultCategory::DomainKnowledge: return "domain_knowledge";
  }
  return "unknown";
}

inline FaultCategory category(FaultType t) {
  switch (t) {
    case FaultType::InputArtifact: return FaultCategory::InputValidation;
    case FaultType::MultimodalInconsistency: return FaultCategory::Consistency;
    case FaultType::OutOfBounds: return FaultCategory::DomainKnowledge;
    case FaultType::IllegalTransition:
    case FaultType::TemporalInconsistencyDiscrete:
    case FaultType::TemporalInconsistencyContinuous:
    case FaultType::RapidMotion: return FaultCategory::TemporalValidation;
  }
  throw Error("unknown fault type");
}

/// Output kind a fault type inspects; nullopt for input-only oracles.
inline std::optional<LabelKind> applies_to(FaultType t) {
  switch (t) {
    case FaultType::IllegalTransition:
    case FaultType::TemporalInconsistencyDiscrete:
    case FaultType::MultimodalInconsistency: return LabelKind::Discrete;
    case FaultType::TemporalInconsistencyContinuous:
    case FaultType::RapidMotion:
    case FaultType::OutOfBounds: return LabelKind::Continuous;
    case FaultType::InputArtifact: return std::nullopt;
  }
  return std::nullopt;
}

struct FaultEvent {
  FaultType type = FaultType::IllegalTransition;
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // inclusive; the execution at which the oracle fired
  std::string oracle_id;
  std::string detail;

  friend bool operator==(const FaultEvent&, const FaultEvent&) = default;
};

/// Boolean transition relation over a finite state set, row = from, column = to.
class LegalityMatrix {
 public:
  LegalityMatrix() = default;
  explicit LegalityMatrix(std::size_t n) : n_(n), allowed_(n * n, 1) {}

  static LegalityMatrix all_legal(std::size_t n) { return LegalityMatrix(n); }

  std::size_t size() const { return n_; }
  bool legal(StateId from, StateId to) const {
    if (from >= n_ || to >= n_) throw Error("state id outside the state set");
    return allowed_[from * n_ + to] != 0;
  }
  void set(StateId from, StateId to, bool allowed) {
    if (from >= n_ || to >= n_) throw Error("state id outside the state set");
    allowed_[from * n_ + to] = allowed ? 1 : 0;
  }
  void forbid(StateId from, StateId to) { set(from, to, false); }
  bool symmetric() const {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        if (legal(i, j) != legal(j, i)) return false;
    return true;
  }

 private:
  std::size_t n_ = 0;
  std::vector<unsigned char> allowed_;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};
using Box = std::vector<Interval>;

struct OracleConfig {
  std::vector<std::string> state_names;  // discrete streams only; sizes the state set
  LegalityMatrix legality;
  std::size_t window = 10;
  std::size_t flicker_k = 4;
  double tau_tv = 1.0;
  double tau_step = 1.0;
  Box bounds;
  std::vector<Vigilance> aux_map;  // per state
  double activity_lo = -std::numeric_limits<double>::infinity();
  double activity_hi = std::numeric_limits<double>::infinity();

  std::string state_name(StateId s) const {
    return s < state_names.size() ? state_names[s] : "state#" + std::to_string(s);
  }

  /// Returns every violated invariant (empty when valid).
  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (window < 2) out.push_back("oracle window must be at least 2");
    if (flicker_k < 2) out.push_back("flicker threshold k must be at least 2");
    if (!(tau_tv > 0.0)) out.push_back("tau_tv must be positive");
    if (!(tau_step > 0.0)) out.push_back("tau_step must be positive");
    for (std::size_t d = 0; d < bounds.size(); ++d)
      if (!(bounds[d].lo < bounds[d].hi)) out.push_back("bounds of dimension " + std::to_string(d) + " need lo < hi");
    if (!(activity_lo < activity_hi)) out.push_back("activity thresholds need low < high");
    if (legality.size() != 0) {
      if (!state_names.empty() && legality.size() != state_names.size())
        out.push_back("legality matrix size does not match the state set");
      for (std::size_t s = 0; s < legality.size(); ++s)
        if (!legality.legal(s, s)) out.push_back("self-transition of " + state_name(s) + " must be legal");
    }
    if (!aux_map.empty() && !state_names.empty() && aux_map.size() != state_names.size())
      out.push_back("aux_map must assign awake/asleep to every state");
    return out;
  }

  void validate() const {
    const auto p = problems();
    if (!p.empty()) throw Error("invalid oracle configuration: " + p.front());
  }
};

// ---------------------------------------------------------------------------
// Single-step oracles. `t` is the stream position of the current execution.

inline std::optional<FaultEvent> illegal_transition_step(StateId prev, StateId cur, const LegalityMatrix& legality,
                                                         std::size_t t, const OracleConfig* names = nullptr) {
  if (prev >= legality.size() || cur >= legality.size()) throw Error("label outside the state set");
  if (legality.legal(prev, cur)) return std::nullopt;
  const auto name = [&](StateId s) { return names ? names->state_name(s) : std::to_string(s); };
  return FaultEvent{FaultType::IllegalTransition, t == 0 ? 0 : t - 1, t, "illegal_transition",
                    name(prev) + " -> " + name(cur)};
}

inline std::size_t count_changes(std::span<const StateId> window) {
  std::size_t n = 0;
  for (std::size_t i = 1; i < window.size(); ++i) n += window[i] != window[i - 1] ? 1 : 0;
  return n;
}

/// `window` holds the most recent predictions, oldest first, ending at t.
inline std::optional<FaultEvent> temporal_inconsistency_discrete_step(std::span<const StateId> window,
                                                                      std::size_t w, std::size_t k, std::size_t t) {
  if (window.size() < w) return std::nullopt;
  const auto recent = window.subspan(window.size() - w);
  const std::size_t changes = count_changes(recent);
  if (changes < k) return std::nullopt;
  return FaultEvent{FaultType::TemporalInconsistencyDiscrete, t + 1 - w, t, "temporal_inconsistency_discrete",
                    std::to_string(changes) + " state changes within " + std::to_string(w) + " executions"};
}

inline double euclidean(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw Error("dimension mismatch between consecutive outputs");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline double total_variation(std::span<const Vector> window) {
  double tv = 0.0;
  for (std::size_t i = 1; i < window.size(); ++i) tv += euclidean(window[i], window[i - 1]);
  return tv;
}

inline std::optional<FaultEvent> temporal_inconsistency_continuous_step(std::span<const Vector> window,
                                                                        std::size_t w, double tau_tv, std::size_t t) {
  if (window.size() < w) return std::nullopt;
  const double tv = total_variation(window.subspan(window.size() - w));
  if (!(tv > tau_tv)) return std::nullopt;
  return FaultEvent{FaultType::TemporalInconsistencyContinuous, t + 1 - w, t, "temporal_inconsistency_continuous",
                    "total variation " + format_double(tv) + " > " + format_double(tau_tv)};
}

inline std::optional<FaultEvent> rapid_motion_step(const Vector& prev, const Vector& cur, double tau_step,
                                                   std::size_t t) {
  const double d = euclidean(cur, prev);
  if (!(d > tau_step)) return std::nullopt;
  return FaultEvent{FaultType::RapidMotion, t == 0 ? 0 : t - 1, t, "rapid_motion",
                    "step " + format_double(d) + " > " + format_double(tau_step)};
}

inline bool in_bounds(const Vector& x, const Box& bounds) {
  if (x.size() != bounds.size()) throw Error("output dimension does not match bounds");
  for (std::size_t d = 0; d < x.size(); ++d)
    if (x[d] < bounds[d].lo || x[d] > bounds[d].hi) return false;
  return true;
}

inline std::optional<FaultEvent> out_of_bounds_step(const Vector& cur, const Box& bounds, std::size_t t) {
  if (in_bounds(cur, bounds)) return std::nullopt;
  std::string detail;
  for (std::size_t d = 0; d < cur.size(); ++d)
    if (cur[d] < bounds[d].lo || cur[d] > bounds[d].hi) {
      if (!detail.empty()) detail += "; ";
      detail += "dim " + std::to_string(d) + " = " + format_double(cur[d]) + " outside [" +
                format_double(bounds[d].lo) + ", " + format_double(bounds[d].hi) + "]";
    }
  return FaultEvent{FaultType::OutOfBounds, t, t, "out_of_bounds", detail};
}

inline Vigilance mapped_vigilance(StateId s, const std::vector<Vigilance>& aux_map) {
  if (s >= aux_map.size()) throw Error("state " + std::to_string(s) + " has no awake/asleep mapping");
  return aux_map[s];
}

inline std::optional<FaultEvent> multimodal_inconsistency_step(StateId decoded, const Vector& aux_input,
                                                               const AuxiliaryBinaryClassifier& aux,
                                                               const std::vector<Vigilance>& aux_map, std::size_t t) {
  const Vigilance expected = mapped_vigilance(decoded, aux_map);
  const Vigilance verdict = aux.predict(aux_input);
  if (expected == verdict) return std::nullopt;
  return FaultEvent{FaultType::MultimodalInconsistency, t, t, "multimodal_inconsistency",
                    std::string("decoded state is ") + to_string(expected) + ", auxiliary classifier says " +
                        to_string(verdict)};
}

inline double mean_of(const Vector& x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline std::optional<FaultEvent> input_artifact_step(const Vector& features, double lo, double hi, std::size_t t) {
  const double m = mean_of(features);
  if (m < lo)
    return FaultEvent{FaultType::InputArtifact, t, t, "input_artifact",
                      "hypoactivity: mean " + format_double(m) + " < " + format_double(lo)};
  if (m > hi)
    return FaultEvent{FaultType::InputArtifact, t, t, "input_artifact",
                      "hyperactivity: mean " + format_double(m) + " > " + format_double(hi)};
  return std::nullopt;
}

// ---------------------------------------------------------------------------

/// Runs the enabled oracles one execution at a time. Single-owner state; one
/// engine per stream.
class OracleEngine {
 public:
  OracleEngine(OracleConfig config, FaultTypeSet enabled, const AuxiliaryBinaryClassifier* aux = nullptr)
      : cfg_(std::move(config)), enabled_(std::move(enabled)), aux_(aux) {
    cfg_.validate();
    if (on(FaultType::MultimodalInconsistency) && (aux_ == nullptr || cfg_.aux_map.empty()))
      throw Error("multimodal oracle needs an auxiliary classifier and an aux_map");
    if (on(FaultType::IllegalTransition) && cfg_.legality.size() == 0)
      throw Error("illegal-transition oracle needs a legality matrix");
    if (on(FaultType::OutOfBounds) && cfg_.bounds.empty()) throw Error("out-of-bounds oracle needs bounds");
  }

  const OracleConfig& config() const { return cfg_; }
  std::size_t position() const { return t_; }

  /// Feeds the next execution and returns the events firing at it, in
  /// FaultType order.
  std::vector<FaultEvent> observe(const PredictionRecord& rec) {
    if (t_ > 0 && rec.index <= last_index_)
      throw Error("stream out of order at position " + std::to_string(t_) + " (index " + std::to_string(rec.index) +
                  " after " + std::to_string(last_index_) + ")");
    std::vector<FaultEvent> out;
    const auto emit = [&](std::optional<FaultEvent> e) {
      if (e) out.push_back(std::move(*e));
    };
    const std::size_t t = t_;

    for (FaultType type : enabled_) {
      const auto kind = applies_to(type);
      if (kind && *kind != rec.output.kind())
        throw Error(std::string(to_string(type)) + " oracle cannot check " + to_string(rec.output.kind()) +
                    " outputs");
    }

    if (rec.output.is_discrete()) {
      const StateId cur = rec.output.state();
      if (!cfg_.state_names.empty() && cur >= cfg_.state_names.size())
        throw Error("output state outside the state set at position " + std::to_string(t));
      if (on(FaultType::IllegalTransition) && prev_state_)
        emit(illegal_transition_step(*prev_state_, cur, cfg_.legality, t, &cfg_));
      if (!states_.empty() && states_.back() != cur) ++changes_;
      states_.push_back(cur);
      if (states_.size() > cfg_.window) {
        if (states_[0] != states_[1]) --changes_;
        states_.pop_front();
      }
      if (on(FaultType::TemporalInconsistencyDiscrete) && states_.size() == cfg_.window &&
          changes_ >= cfg_.flicker_k)
        out.push_back(FaultEvent{FaultType::TemporalInconsistencyDiscrete, t + 1 - cfg_.window, t,
                                 "temporal_inconsistency_discrete",
                                 std::to_string(changes_) + " state changes within " + std::to_string(cfg_.window) +
                                     " executions"});
      if (on(FaultType::MultimodalInconsistency))
        emit(multimodal_inconsistency_step(cur, rec.input, *aux_, cfg_.aux_map, t));
      prev_state_ = cur;
    } else {
      const Vector& cur = rec.output.coords();
      if (on(FaultType::TemporalInconsistencyContinuous)) {
        if (!coords_.empty()) steps_.push_back(euclidean(cur, coords_.back()));
        if (steps_.size() + 1 > cfg_.window) steps_.pop_front();
        if (steps_.size() + 1 == cfg_.window) {
          double tv = 0.0;
          for (double s : steps_) tv += s;
          if (tv > cfg_.tau_tv)
            out.push_back(FaultEvent{FaultType::TemporalInconsistencyContinuous, t + 1 - cfg_.window, t,
                                     "temporal_inconsistency_continuous",
                                     "total variation " + format_double(tv) + " > " + format_double(cfg_.tau_tv)});
        }
      }
      if (on(FaultType::RapidMotion) && !coords_.empty()) emit(rapid_motion_step(coords_.back(), cur, cfg_.tau_step, t));
      if (on(FaultType::OutOfBounds)) emit(out_of_bounds_step(cur, cfg_.bounds, t));
      coords_.clear();
      coords_.push_back(cur);
    }
    if (on(FaultType::InputArtifact)) emit(input_artifact_step(rec.input, cfg_.activity_lo, cfg_.activity_hi, t));

    std::stable_sort(out.begin(), out.end(), [](const FaultEvent& a, const FaultEvent& b) { return a.type < b.type; });
    last_index_ = rec.index;
    ++t_;
    return out;
  }

 private:
  bool on(FaultType t) const { return enabled_.count(t) != 0; }

  OracleConfig cfg_;
  FaultTypeSet enabled_;
  const AuxiliaryBinaryClassifier* aux_ = nullptr;
  std::size_t t_ = 0;
  std::uint64_t last_index_ = 0;
  std::optional<StateId> prev_state_;
  std::deque<StateId> states_;  // last `window` discrete outputs
  std::size_t changes_ = 0;     // adjacent changes inside states_
  std::vector<Vector> coords_;  // previous continuous output (at most one)
  std::deque<double> steps_;    // step lengths inside the current window
};

/// Runs the enabled oracles over a whole stream; events ordered by end index.
inline std::vector<FaultEvent> run_oracles(std::span<const PredictionRecord> stream, const OracleConfig& config,
                                           const FaultTypeSet& enabled,
                                           const AuxiliaryBinaryClassifier* aux = nullptr) {
  OracleEngine engine(config, enabled, aux);
  std::vector<FaultEvent> events;
  for (const PredictionRecord& rec : stream) {
    auto step = engine.observe(rec);
    events.insert(events.end(), std::make_move_iterator(step.begin()), std::make_move_iterator(step.end()));
  }
  return events;
}

inline std::vector<FaultEvent> events_of_type(std::span<const FaultEvent> events, FaultType type) {
  std::vector<FaultEvent> out;
  for (const FaultEvent& e : events)
    if (e.type == type) out.push_back(e);
  return out;
}

// ---------------------------------------------------------------------------
// JSON lines: {"type":..., "start":..., "end":..., "oracle_id":..., "detail":...}

inline nlohmann::json to_json(const FaultEvent& e) {
  return {{"type", to_string(e.type)}, {"start", e.start}, {"end", e.end}, {"oracle_id", e.oracle_id},
          {"detail", e.detail}};
}

inline FaultEvent fault_event_from_json(const nlohmann::json& j) {
  FaultEvent e;
  e.type = parse_fault_type(j.at("type").get<std::string>());
  e.start = j.at("start").get<std::size_t>();
  e.end = j.at("end").get<std::size_t>();
  e.oracle_id = j.value("oracle_id", std::string(to_string(e.type)));
  e.detail = j.value("detail", std::string());
  if (e.start > e.end) throw Error("event start exceeds end");
  return e;
}

inline void write_events_jsonl(std::ostream& os, std::span<const FaultEvent> events) {
  for (const FaultEvent& e : events) os << to_json(e).dump() << '\n';
}

inline std::vector<FaultEvent> read_events_jsonl(std::istream& is) {
  std::vector<FaultEvent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(fault_event_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& ex) {
      throw Error("events line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

}  // namespace bcirepair
