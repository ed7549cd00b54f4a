#pragma once

// Fault/slice coincidence tables, Pearson chi-square independence tests, and
// the fault-based task distribution that steers acquisition.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcirepair/error.hpp"
#include "bcirepair/oracles.hpp"
#include "bcirepair/slicing.hpp"
#include "bcirepair/stats.hpp"

namespace bcirepair {

/// Executions covered by at least one event range.
inline std::vector<bool> fault_coverage(std::span<const FaultEvent> events, std::size_t stream_length) {
  std::vector<int> diff(stream_length + 1, 0);
  for (const FaultEvent& e : events) {
    if (e.start > e.end || e.end >= stream_length)
      throw Error("event [" + std::to_string(e.start) + ", " + std::to_string(e.end) +
                  "] outside a stream of length " + std::to_string(stream_length));
    ++diff[e.start];
    --diff[e.end + 1];
  }
  std::vector<bool> covered(stream_length);
  int running = 0;
  for (std::size_t t = 0; t < stream_length; ++t) {
    running += diff[t];
    covered[t] = running > 0;
  }
  return covered;
}

struct ContingencyTable {
  std::vector<std::string> rows;
  std::vector<std::array<std::size_t, 2>> counts;  // {fault-present, fault-absent}

  std::size_t total() const {
    std::size_t s = 0;
    for (const auto& r : counts) s += r[0] + r[1];
    return s;
  }
};

/// Cross-tabulates fault presence against one family's labels. `labels[t]` is
/// the slice label of execution t; `row_order` lists the family's labels
/// (labels not listed are appended in order of appearance).
inline ContingencyTable build_contingency(std::span<const FaultEvent> events, std::span<const std::string> labels,
                                          std::size_t stream_length, std::span<const std::string> row_order = {}) {
  if (labels.size() != stream_length)
    throw Error("slice labels cover " + std::to_string(labels.size()) + " executions, stream has " +
                std::to_string(stream_length));
  const auto covered = fault_coverage(events, stream_length);
  ContingencyTable table;
  table.rows.assign(row_order.begin(), row_order.end());
  std::map<std::string, std::size_t> row_of;
  for (std::size_t r = 0; r < table.rows.size(); ++r) row_of.emplace(table.rows[r], r);
  table.counts.assign(table.rows.size(), {0, 0});
  for (std::size_t t = 0; t < stream_length; ++t) {
    auto it = row_of.find(labels[t]);
    if (it == row_of.end()) {
      it = row_of.emplace(labels[t], table.rows.size()).first;
      table.rows.push_back(labels[t]);
      table.counts.push_back({0, 0});
    }
    ++table.counts[it->second][covered[t] ? 0 : 1];
  }
  return table;
}

struct IndependenceResult {
  bool testable = false;
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  std::string reason;  // why the table is untestable
};

/// Pearson chi-square test of independence without continuity correction.
/// Rows and columns with a zero marginal are dropped first; fewer than two
/// remaining rows or columns make the table untestable.
inline IndependenceResult chi_squared_test(const ContingencyTable& table) {
  IndependenceResult res;
  const double grand = static_cast<double>(table.total());
  if (!(grand > 0.0)) {
    res.reason = "empty table";
    return res;
  }
  std::vector<double> row_tot;
  std::vector<std::array<double, 2>> kept;
  std::array<double, 2> col_tot{0.0, 0.0};
  for (const auto& r : table.counts) {
    const double s = static_cast<double>(r[0] + r[1]);
    if (s == 0.0) continue;
    row_tot.push_back(s);
    kept.push_back({static_cast<double>(r[0]), static_cast<double>(r[1])});
    col_tot[0] += static_cast<double>(r[0]);
    col_tot[1] += static_cast<double>(r[1]);
  }
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < 2; ++c)
    if (col_tot[c] > 0.0) cols.push_back(c);
  if (kept.size() < 2 || cols.size() < 2) {
    res.reason = kept.size() < 2 ? "fewer than two non-empty slice rows" : "fault present in all or none of the executions";
    return res;
  }
  double chi2 = 0.0;
  for (std::size_t r = 0; r < kept.size(); ++r)
    for (std::size_t c : cols) {
      const double expected = row_tot[r] * col_tot[c] / grand;
      const double diff = kept[r][c] - expected;
      chi2 += diff * diff / expected;
    }
  res.testable = true;
  res.statistic = chi2;
  res.df = static_cast<int>((kept.size() - 1) * (cols.size() - 1));
  res.p_value = chi_square_survival(chi2, res.df);
  return res;
}

// ---------------------------------------------------------------------------

struct TaskDistribution {
  std::vector<std::string> tasks;
  std::vector<double> probabilities;

  double operator[](const std::string& task) const {
    auto it = std::find(tasks.begin(), tasks.end(), task);
    return it == tasks.end() ? 0.0 : probabilities[static_cast<std::size_t>(it - tasks.begin())];
  }
};

/// Raises every probability to at least `floor`, scaling the remaining mass
/// proportionally so the result still sums to one.
inline std::vector<double> apply_probability_floor(std::vector<double> p, double floor) {
  if (floor <= 0.0) return p;
  if (floor * static_cast<double>(p.size()) > 1.0) throw Error("probability floor too large for the task count");
  std::vector<bool> pinned(p.size(), false);
  for (bool changed = true; changed;) {
    changed = false;
    double free_mass = 1.0;
    double free_sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (pinned[i]) free_mass -= floor;
      else free_sum += p[i];
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (pinned[i]) {
        p[i] = floor;
      } else {
        p[i] = free_sum > 0.0 ? p[i] * free_mass / free_sum : 0.0;
      }
    }
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!pinned[i] && p[i] < floor) {
        pinned[i] = true;
        changed = true;
      }
  }
  return p;
}

/// Normalized task counts over fault-covered executions. `task_labels[t]` is
/// the task of execution t (from corrected outputs for the standard method).
inline TaskDistribution fault_task_distribution(std::span<const FaultEvent> events,
                                                std::span<const std::string> task_labels,
                                                std::span<const std::string> tasks, double floor = 0.0) {
  const auto covered = fault_coverage(events, task_labels.size());
  TaskDistribution dist;
  dist.tasks.assign(tasks.begin(), tasks.end());
  std::vector<double> counts(tasks.size(), 0.0);
  double total = 0.0;
  for (std::size_t t = 0; t < task_labels.size(); ++t) {
    if (!covered[t]) continue;
    auto it = std::find(dist.tasks.begin(), dist.tasks.end(), task_labels[t]);
    if (it == dist.tasks.end()) {
      dist.tasks.push_back(task_labels[t]);
      counts.push_back(0.0);
      it = dist.tasks.end() - 1;
    }
    counts[static_cast<std::size_t>(it - dist.tasks.begin())] += 1.0;
    total += 1.0;
  }
  if (total == 0.0) throw Error("no fault-covered executions; the fault-based task distribution is undefined");
  for (double& c : counts) c /= total;
  dist.probabilities = apply_probability_floor(std::move(counts), floor);
  return dist;
}

// ---------------------------------------------------------------------------

struct LocalizationEntry {
  FaultType fault_type = FaultType::IllegalTransition;
  std::string family;
  ContingencyTable table;
  IndependenceResult result;
};

struct LocalizationReport {
  std::vector<LocalizationEntry> entries;
  std::optional<TaskDistribution> pooled;               // all fault types combined
  std::map<FaultType, TaskDistribution> per_type;       // types with at least one covered execution
};

struct FamilyLabels {
  std::string id;
  std::vector<std::string> row_order;
};

/// One table and test per (fault type, family). When `task_family` is set,
/// also computes the pooled and per-type task distributions from that
/// family's labels.
inline LocalizationReport localize(std::span<const FaultEvent> events, std::span<const SliceAssignment> assignments,
                                   std::span<const FamilyLabels> families, std::span<const FaultType> types,
                                   std::size_t stream_length, const std::string& task_family = {},
                                   double floor = 0.0) {
  LocalizationReport rep;
  for (FaultType type : types) {
    const auto ev = events_of_type(events, type);
    for (const FamilyLabels& fam : families) {
      const auto labels = family_labels(assignments, fam.id);
      LocalizationEntry entry{type, fam.id, build_contingency(ev, labels, stream_length, fam.row_order), {}};
      entry.result = chi_squared_test(entry.table);
      rep.entries.push_back(std::move(entry));
    }
  }
  if (!task_family.empty()) {
    const auto it = std::find_if(families.begin(), families.end(), [&](const auto& f) { return f.id == task_family; });
    if (it == families.end()) throw Error("task family '" + task_family + "' is not among the slice families");
    const auto labels = family_labels(assignments, task_family);
    if (!events.empty()) rep.pooled = fault_task_distribution(events, labels, it->row_order, floor);
    for (FaultType type : types) {
      const auto ev = events_of_type(events, type);
      if (!ev.empty()) rep.per_type.emplace(type, fault_task_distribution(ev, labels, it->row_order, floor));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const TaskDistribution& d) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < d.tasks.size(); ++i) j[d.tasks[i]] = d.probabilities[i];
  return j;
}

inline nlohmann::json to_json(const IndependenceResult& r) {
  if (!r.testable) return {{"testable", false}, {"reason", r.reason}};
  return {{"testable", true}, {"chi2", r.statistic}, {"df", r.df}, {"p_value", r.p_value}};
}

inline nlohmann::json to_json(const LocalizationEntry& e) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < e.table.rows.size(); ++r)
    rows.push_back({{"label", e.table.rows[r]}, {"fault_present", e.table.counts[r][0]},
                    {"fault_absent", e.table.counts[r][1]}});
  return {{"fault_type", to_string(e.fault_type)}, {"family", e.family}, {"table", rows}, {"test", to_json(e.result)}};
}

inline nlohmann::json to_json(const LocalizationReport& rep) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : rep.entries) entries.push_back(to_json(e));
  nlohmann::json per_type = nlohmann::json::object();
  for (const auto& [t, d] : rep.per_type) per_type[to_string(t)] = to_json(d);
  return {{"entries", entries},
          {"task_distribution",
           {{"pooled", rep.pooled ? to_json(*rep.pooled) : nlohmann::json(nullptr)}, {"per_type", per_type}}}};
}

}  // namespace bcirepair
