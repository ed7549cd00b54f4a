#pragma once

// Corrective heuristics: replace flagged implausible outputs with plausible
// ones. They only touch flagged executions and read previously corrected
// values, so a stream is corrected front to back.
//
// Detection-only families: total-variation inconsistency and input artifacts
// have no heuristic; their executions keep the raw output.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcirepair/datamodel.hpp"
#include "bcirepair/decoders.hpp"
#include "bcirepair/error.hpp"
#include "bcirepair/oracles.hpp"

namespace bcirepair {

struct HeuristicConfig {
  std::optional<StateId> wake_state;          // target when the auxiliary classifier says awake
  std::optional<StateId> default_sleep_state;  // fallback when it says asleep
};

struct CorrectionRecord {
  std::size_t index = 0;  // stream position
  Label original;
  Label corrected;
  FaultType fault_type = FaultType::IllegalTransition;  // first heuristic applied, by precedence
  bool propagated = false;  // flagged because the previous execution was corrected, not by an event

  friend bool operator==(const CorrectionRecord&, const CorrectionRecord&) = default;
};

struct CorrectedStream {
  Stream stream;
  std::vector<CorrectionRecord> records;
};

/// Heuristic order when several fault types flag the same execution.
inline constexpr std::array<FaultType, 5> kCorrectionPrecedence{
    FaultType::OutOfBounds, FaultType::IllegalTransition, FaultType::MultimodalInconsistency,
    FaultType::RapidMotion, FaultType::TemporalInconsistencyDiscrete};

inline Label correct_illegal_transition(const Label& prev_corrected, const Label& /*cur*/,
                                        const LegalityMatrix& /*legality*/) {
  return prev_corrected;
}

/// Modal state of the window; ties go to the tied state seen most recently.
inline StateId correct_flicker(std::span<const StateId> window) {
  if (window.empty()) throw Error("flicker correction needs a non-empty window");
  std::map<StateId, std::pair<std::size_t, std::size_t>> stats;  // state -> (count, last position)
  for (std::size_t i = 0; i < window.size(); ++i) {
    auto& s = stats[window[i]];
    ++s.first;
    s.second = i;
  }
  auto best = stats.begin();
  for (auto it = stats.begin(); it != stats.end(); ++it) {
    const auto& [count, last] = it->second;
    if (count > best->second.first || (count == best->second.first && last > best->second.second)) best = it;
  }
  return best->first;
}

inline Vector correct_out_of_bounds(const Vector& cur, const Box& bounds) {
  if (cur.size() != bounds.size()) throw Error("output dimension does not match bounds");
  Vector out(cur.size());
  for (std::size_t d = 0; d < cur.size(); ++d) out[d] = std::clamp(cur[d], bounds[d].lo, bounds[d].hi);
  return out;
}

/// Moves from prev_corrected towards cur by exactly tau_step.
inline Vector correct_rapid_motion(const Vector& prev_corrected, const Vector& cur, double tau_step) {
  const double dist = euclidean(cur, prev_corrected);
  if (!(dist > tau_step)) throw Error("rapid-motion correction applies only to steps longer than tau_step");
  double scale = tau_step / dist;
  Vector out(cur.size());
  for (int guard = 0; guard < 64; ++guard) {
    for (std::size_t d = 0; d < cur.size(); ++d) out[d] = prev_corrected[d] + scale * (cur[d] - prev_corrected[d]);
    if (!(euclidean(out, prev_corrected) > tau_step)) break;
    // rounding can leave the step a hair above tau; shrink by growing amounts
    scale *= 1.0 - std::ldexp(std::numeric_limits<double>::epsilon(), guard);
  }
  return out;
}

inline StateId correct_multimodal(StateId /*decoded*/, Vigilance aux_verdict, std::optional<StateId> prev_corrected,
                                  const std::vector<Vigilance>& aux_map, const HeuristicConfig& cfg) {
  if (aux_verdict == Vigilance::Awake) {
    if (!cfg.wake_state) throw Error("multimodal correction needs a wake state");
    return *cfg.wake_state;
  }
  if (prev_corrected && mapped_vigilance(*prev_corrected, aux_map) == Vigilance::Asleep) return *prev_corrected;
  if (!cfg.default_sleep_state) throw Error("multimodal correction needs a default sleep state");
  return *cfg.default_sleep_state;
}

/// Applies the heuristics for `events` (as produced by run_oracles with
/// `enabled` on this stream). Corrections happen at each event's end index.
/// When a correction changes execution t-1, execution t is re-checked against
/// the corrected predecessor for the pairwise families (illegal transition,
/// rapid motion) and corrected too if it now violates them; such records are
/// marked `propagated`. Records are emitted only for outputs that changed.
inline CorrectedStream apply_corrections(std::span<const PredictionRecord> stream, std::span<const FaultEvent> events,
                                         const OracleConfig& oc, const FaultTypeSet& enabled,
                                         const HeuristicConfig& hc = {},
                                         const AuxiliaryBinaryClassifier* aux = nullptr) {
  const std::size_t n = stream.size();
  std::vector<FaultTypeSet> flags(n);
  for (const FaultEvent& e : events) {
    if (e.end >= n || e.start > e.end)
      throw Error("event [" + std::to_string(e.start) + ", " + std::to_string(e.end) + "] outside a stream of length " +
                  std::to_string(n));
    flags[e.end].insert(e.type);
  }
  const auto on = [&](FaultType t) { return enabled.count(t) != 0; };

  CorrectedStream out;
  out.stream.assign(stream.begin(), stream.end());
  std::vector<bool> changed(n, false);

  for (std::size_t t = 0; t < n; ++t) {
    const PredictionRecord& raw = stream[t];
    FaultTypeSet fl = flags[t];
    bool propagated = false;
    const Label* prev = t > 0 ? &out.stream[t - 1].output : nullptr;
    Label v = raw.output;

    if (prev != nullptr && changed[t - 1]) {
      if (v.is_discrete() && on(FaultType::IllegalTransition) && !oc.legality.legal(prev->state(), v.state()) &&
          !fl.count(FaultType::IllegalTransition)) {
        fl.insert(FaultType::IllegalTransition);
        propagated = fl.size() == 1;
      }
      if (!v.is_discrete() && on(FaultType::RapidMotion) && euclidean(v.coords(), prev->coords()) > oc.tau_step &&
          !fl.count(FaultType::RapidMotion)) {
        fl.insert(FaultType::RapidMotion);
        propagated = fl.size() == 1;
      }
    }
    if (fl.empty()) continue;

    std::optional<FaultType> first;
    const auto applied = [&](FaultType type) {
      if (!first) first = type;
    };
    const auto aux_verdict = [&]() { return aux->predict(raw.input); };

    for (FaultType type : kCorrectionPrecedence) {
      if (!fl.count(type)) continue;
      switch (type) {
        case FaultType::OutOfBounds:
          if (!in_bounds(v.coords(), oc.bounds)) {
            v = Label::continuous(correct_out_of_bounds(v.coords(), oc.bounds));
            applied(type);
          }
          break;
        case FaultType::IllegalTransition:
          if (prev != nullptr && !oc.legality.legal(prev->state(), v.state())) {
            v = correct_illegal_transition(*prev, v, oc.legality);
            applied(type);
          }
          break;
        case FaultType::MultimodalInconsistency: {
          if (aux == nullptr) throw Error("multimodal correction needs the auxiliary classifier");
          const Vigilance verdict = aux_verdict();
          if (mapped_vigilance(v.state(), oc.aux_map) != verdict) {
            const std::optional<StateId> p = prev ? std::optional<StateId>(prev->state()) : std::nullopt;
            v = Label::discrete(correct_multimodal(v.state(), verdict, p, oc.aux_map, hc));
            applied(type);
          }
          break;
        }
        case FaultType::RapidMotion:
          if (prev != nullptr && euclidean(v.coords(), prev->coords()) > oc.tau_step) {
            v = Label::continuous(correct_rapid_motion(prev->coords(), v.coords(), oc.tau_step));
            applied(type);
          }
          break;
        case FaultType::TemporalInconsistencyDiscrete: {
          std::vector<StateId> window;
          const std::size_t from = t + 1 >= oc.window ? t + 1 - oc.window : 0;
          for (std::size_t i = from; i < t; ++i) window.push_back(out.stream[i].output.state());
          window.push_back(v.state());
          const StateId mode = correct_flicker(window);
          if (mode != v.state()) {
            v = Label::discrete(mode);
            applied(type);
          }
          break;
        }
        default: break;
      }
    }

    // Later heuristics must not leave an earlier, guaranteed violation behind,
    // even when they restored the raw value.
    {
      if (v.is_discrete()) {
        if (on(FaultType::MultimodalInconsistency) && aux != nullptr) {
          const Vigilance verdict = aux_verdict();
          if (mapped_vigilance(v.state(), oc.aux_map) != verdict) {
            const std::optional<StateId> p = prev ? std::optional<StateId>(prev->state()) : std::nullopt;
            v = Label::discrete(correct_multimodal(v.state(), verdict, p, oc.aux_map, hc));
          }
        }
        if (on(FaultType::IllegalTransition) && prev != nullptr && !oc.legality.legal(prev->state(), v.state()))
          v = *prev;
      } else if (on(FaultType::OutOfBounds) && !in_bounds(v.coords(), oc.bounds)) {
        v = Label::continuous(correct_out_of_bounds(v.coords(), oc.bounds));
      }
    }

    if (v != raw.output) {
      out.records.push_back(CorrectionRecord{t, raw.output, v, first.value_or(*fl.begin()), propagated});
      out.stream[t].output = std::move(v);
      changed[t] = true;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON lines

inline nlohmann::json label_to_json(const Label& l, std::span<const std::string> states = {}) {
  if (l.is_discrete()) {
    if (l.state() < states.size()) return states[l.state()];
    return l.state();
  }
  return l.coords();
}

inline nlohmann::json to_json(const CorrectionRecord& r, std::span<const std::string> states = {}) {
  return {{"index", r.index},
          {"original", label_to_json(r.original, states)},
          {"corrected", label_to_json(r.corrected, states)},
          {"fault_type", to_string(r.fault_type)},
          {"propagated", r.propagated}};
}

inline void write_corrections_jsonl(std::ostream& os, std::span<const CorrectionRecord> records,
                                    std::span<const std::string> states = {}) {
  for (const CorrectionRecord& r : records) os << to_json(r, states).dump() << '\n';
}

}  // namespace bcirepair
