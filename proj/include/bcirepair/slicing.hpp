#pragma once

// Slice functions: every execution maps to exactly one label per family.
// Output families read the supplied (raw or corrected) outputs; input
// families read the raw inputs.

#include <cmath>
#include <cstddef>
#include <istream>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bcirepair/datamodel.hpp"
#include "bcirepair/error.hpp"
#include "bcirepair/oracles.hpp"

namespace bcirepair {

enum class SliceKind { Input, Output };
enum class SliceFunction { Task, Direction, Quadrant, Activity };

inline const char* to_string(SliceFunction f) {
  switch (f) {
    case SliceFunction::Task: return "task";
    case SliceFunction::Direction: return "direction";
    case SliceFunction::Quadrant: return "quadrant";
    case SliceFunction::Activity: return "activity";
  }
  return "unknown";
}

inline SliceFunction parse_slice_function(const std::string& s) {
  for (SliceFunction f : {SliceFunction::Task, SliceFunction::Direction, SliceFunction::Quadrant, SliceFunction::Activity})
    if (s == to_string(f)) return f;
  throw Error("unknown slice function '" + s + "'");
}

struct SliceFamily {
  std::string id;
  SliceFunction function = SliceFunction::Task;
  std::vector<std::string> task_names;  // Task: the state set
  int direction_bins = 8;               // Direction: 8 or 4
  double epsilon_speed = 0.1;           // Direction: below this step length -> Stationary
  Box bounds;                           // Quadrant
  double activity_lo = 0.0;             // Activity
  double activity_hi = 1.0;

  SliceKind kind() const { return function == SliceFunction::Activity ? SliceKind::Input : SliceKind::Output; }

  std::vector<std::string> labels() const {
    switch (function) {
      case SliceFunction::Task: return task_names;
      case SliceFunction::Direction:
        if (direction_bins == 4) return {"E", "N", "W", "S", "Stationary"};
        return {"E", "NE", "N", "NW", "W", "SW", "S", "SE", "Stationary"};
      case SliceFunction::Quadrant: return {"NE", "NW", "SW", "SE"};
      case SliceFunction::Activity: return {"Hypo", "Normal", "Hyper"};
    }
    return {};
  }

  void validate() const {
    if (id.empty()) throw Error("slice family needs an id");
    if (function == SliceFunction::Task && task_names.empty()) throw Error("task slice family needs the state set");
    if (function == SliceFunction::Direction && direction_bins != 8 && direction_bins != 4)
      throw Error("direction slices support 8 or 4 bins");
    if (function == SliceFunction::Direction && !(epsilon_speed >= 0.0))
      throw Error("direction slices need a non-negative epsilon_speed");
    if (function == SliceFunction::Quadrant && bounds.size() != 2) throw Error("quadrant slices need 2-D bounds");
    if (function == SliceFunction::Activity && !(activity_lo < activity_hi))
      throw Error("activity slices need low < high");
  }
};

struct SliceAssignment {
  std::size_t index = 0;  // stream position
  std::string family;
  std::string label;

  friend bool operator==(const SliceAssignment&, const SliceAssignment&) = default;
};

// ---------------------------------------------------------------------------

inline const std::string& slice_discrete_output(StateId state, std::span<const std::string> tasks) {
  if (state >= tasks.size()) throw Error("unknown class id " + std::to_string(state));
  return tasks[state];
}

/// Compass bin of the step prev -> cur. Bins are centred on multiples of
/// 360/bins degrees and half-open on the upper side.
inline std::string slice_direction(const Vector& prev, const Vector& cur, double epsilon_speed, int bins = 8) {
  if (prev.size() != 2 || cur.size() != 2) throw Error("direction slices need 2-D outputs");
  const double dx = cur[0] - prev[0];
  const double dy = cur[1] - prev[1];
  if (std::hypot(dx, dy) < epsilon_speed || (dx == 0.0 && dy == 0.0)) return "Stationary";
  double deg = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 360.0;
  const double width = 360.0 / bins;
  const auto bin = static_cast<int>(std::floor((deg + width / 2.0) / width)) % bins;
  static const char* k8[] = {"E", "NE", "N", "NW", "W", "SW", "S", "SE"};
  static const char* k4[] = {"E", "N", "W", "S"};
  return bins == 4 ? k4[bin] : k8[bin];
}

/// Quadrant relative to the centre of `bounds`; midline points go to the
/// upper/right side.
inline std::string slice_quadrant(const Vector& cur, const Box& bounds) {
  if (cur.size() != 2 || bounds.size() != 2) throw Error("quadrant slices need 2-D outputs and bounds");
  const bool east = cur[0] >= 0.5 * (bounds[0].lo + bounds[0].hi);
  const bool north = cur[1] >= 0.5 * (bounds[1].lo + bounds[1].hi);
  if (north) return east ? "NE" : "NW";
  return east ? "SE" : "SW";
}

inline std::string slice_input_activity(const Vector& features, double lo, double hi) {
  const double m = mean_of(features);
  if (m < lo) return "Hypo";
  if (m > hi) return "Hyper";
  return "Normal";
}

inline std::vector<SliceAssignment> assign_slices(std::span<const PredictionRecord> stream,
                                                  std::span<const SliceFamily> families) {
  for (const SliceFamily& f : families) f.validate();
  std::vector<SliceAssignment> out;
  out.reserve(stream.size() * families.size());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    const PredictionRecord& rec = stream[t];
    for (const SliceFamily& f : families) {
      std::string label;
      switch (f.function) {
        case SliceFunction::Task: label = slice_discrete_output(rec.output.state(), f.task_names); break;
        case SliceFunction::Direction:
          label = t == 0 ? "Stationary"
                         : slice_direction(stream[t - 1].output.coords(), rec.output.coords(), f.epsilon_speed,
                                           f.direction_bins);
          break;
        case SliceFunction::Quadrant: label = slice_quadrant(rec.output.coords(), f.bounds); break;
        case SliceFunction::Activity: label = slice_input_activity(rec.input, f.activity_lo, f.activity_hi); break;
      }
      out.push_back(SliceAssignment{t, f.id, std::move(label)});
    }
  }
  return out;
}

/// Labels of one family, in stream order.
inline std::vector<std::string> family_labels(std::span<const SliceAssignment> assignments, const std::string& family) {
  std::vector<std::string> out;
  for (const SliceAssignment& a : assignments)
    if (a.family == family) {
      if (a.index != out.size())
        throw Error("slice assignments for family '" + family + "' do not cover every execution in order");
      out.push_back(a.label);
    }
  return out;
}

/// Task label of each labeled sample, derived from its ground truth with the
/// family's output slice function. Direction uses the previous sample in
/// sequence order; the first sample is Stationary.
inline std::vector<std::string> truth_tasks(std::span<const Sample> samples, const SliceFamily& f) {
  if (f.kind() != SliceKind::Output) throw Error("task labels need an output slice family");
  std::vector<std::string> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Label& l = samples[i].label;
    switch (f.function) {
      case SliceFunction::Task: out.push_back(slice_discrete_output(l.state(), f.task_names)); break;
      case SliceFunction::Direction:
        out.push_back(i == 0 ? std::string("Stationary")
                             : slice_direction(samples[i - 1].label.coords(), l.coords(), f.epsilon_speed,
                                               f.direction_bins));
        break;
      case SliceFunction::Quadrant: out.push_back(slice_quadrant(l.coords(), f.bounds)); break;
      case SliceFunction::Activity: break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV: index,family,label

inline void write_slices_csv(std::ostream& os, std::span<const SliceAssignment> assignments) {
  os << "index,family,label\n";
  for (const SliceAssignment& a : assignments) os << a.index << ',' << a.family << ',' << a.label << '\n';
}

inline std::vector<SliceAssignment> read_slices_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("slices line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "index,family,label") throw Error("slices line 1: header must be 'index,family,label'");
  std::vector<SliceAssignment> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 3) throw Error("slices line " + std::to_string(lineno) + ": expected 3 columns");
    std::size_t idx = 0;
    const auto res = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), idx);
    if (res.ec != std::errc() || res.ptr != cells[0].data() + cells[0].size())
      throw Error("slices line " + std::to_string(lineno) + ": bad index '" + std::string(cells[0]) + "'");
    if (cells[1].empty() || cells[2].empty())
      throw Error("slices line " + std::to_string(lineno) + ": empty family or label");
    out.push_back(SliceAssignment{idx, std::string(cells[1]), std::string(cells[2])});
  }
  return out;
}

}  // namespace bcirepair
