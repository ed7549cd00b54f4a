#pragma once

// Labeled samples, four-way dataset splitting and prediction streams.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "bcirepair/error.hpp"
#include "bcirepair/rng.hpp"

namespace bcirepair {

using Vector = std::vector<double>;
using StateId = std::size_t;

enum class LabelKind { Discrete, Continuous };

inline const char* to_string(LabelKind kind) {
  return kind == LabelKind::Discrete ? "discrete" : "continuous";
}

/// Either a class id into the dataset's state set or a coordinate vector.
class Label {
 public:
  Label() : value_(StateId{0}) {}

  static Label discrete(StateId state) { return Label(state); }
  static Label continuous(Vector coords) { return Label(std::move(coords)); }

  LabelKind kind() const {
    return std::holds_alternative<StateId>(value_) ? LabelKind::Discrete : LabelKind::Continuous;
  }
  bool is_discrete() const { return kind() == LabelKind::Discrete; }

  StateId state() const {
    if (!is_discrete()) throw Error("label is continuous, not a discrete state");
    return std::get<StateId>(value_);
  }
  const Vector& coords() const {
    if (is_discrete()) throw Error("label is a discrete state, not a coordinate vector");
    return std::get<Vector>(value_);
  }

  friend bool operator==(const Label&, const Label&) = default;

 private:
  explicit Label(StateId s) : value_(s) {}
  explicit Label(Vector v) : value_(std::move(v)) {}

  std::variant<StateId, Vector> value_;
};

struct Sample {
  std::uint64_t index = 0;
  Vector features;
  Label label;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// A labeled dataset. Discrete datasets declare their state set; `label_dim` is
/// the coordinate dimension for continuous datasets (0 for discrete).
struct Dataset {
  LabelKind kind = LabelKind::Discrete;
  std::vector<std::string> states;
  std::size_t label_dim = 0;
  std::vector<Sample> samples;

  std::size_t feature_dim() const { return samples.empty() ? 0 : samples.front().features.size(); }

  StateId state_id(std::string_view name) const {
    auto it = std::find(states.begin(), states.end(), name);
    if (it == states.end()) throw Error("unknown state '" + std::string(name) + "'");
    return static_cast<StateId>(it - states.begin());
  }

  // Checks the per-dataset invariants: constant feature width, strictly
  // increasing indices and labels inside the declared domain.
  void validate() const {
    const std::size_t width = feature_dim();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Sample& s = samples[i];
      if (s.features.size() != width)
        throw Error("sample " + std::to_string(s.index) + " has " + std::to_string(s.features.size()) +
                    " features, expected " + std::to_string(width));
      if (i > 0 && s.index <= samples[i - 1].index)
        throw Error("sample indices must be strictly increasing (at position " + std::to_string(i) + ")");
      if (s.label.kind() != kind) throw Error("sample " + std::to_string(s.index) + " has a label of the wrong kind");
      if (kind == LabelKind::Discrete && s.label.state() >= states.size())
        throw Error("sample " + std::to_string(s.index) + " has a state outside the declared set");
      if (kind == LabelKind::Continuous && s.label.coords().size() != label_dim)
        throw Error("sample " + std::to_string(s.index) + " has a label of the wrong dimension");
    }
  }
};

// ---------------------------------------------------------------------------
// Splitting

enum class SplitMode { Contiguous, Shuffled };

struct DatasetSplit {
  std::vector<Sample> train;
  std::vector<Sample> observe;
  std::vector<Sample> acquire;
  std::vector<Sample> test;
  std::uint64_t seed = 0;
};

/// Largest-remainder apportionment of `total` items over non-negative weights.
/// Ties on the remainder go to the lower position.
inline std::vector<std::size_t> largest_remainder(std::size_t total, std::span<const double> weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (weights.empty() || !(sum > 0.0)) throw Error("apportionment needs weights with a positive sum");
  std::vector<std::size_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw Error("apportionment weights must be non-negative");
    const double exact = static_cast<double>(total) * weights[i] / sum;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[remainders[k % remainders.size()].second];
  return counts;
}

/// Splits samples into train/observe/acquire/test by `ratio`. Contiguous mode
/// rotates the start of the block sequence by a seeded offset; shuffled mode
/// permutes the order of the four blocks along the timeline. Each part keeps
/// the original index order. Train, observe and test must be non-empty.
inline DatasetSplit split_dataset(std::span<const Sample> samples, const std::array<double, 4>& ratio,
                                  std::uint64_t seed, SplitMode mode = SplitMode::Contiguous) {
  if (samples.empty()) throw Error("cannot split an empty dataset");
  const auto sizes = largest_remainder(samples.size(), ratio);
  static constexpr std::array<const char*, 4> kNames{"train", "observe", "acquire", "test"};
  for (std::size_t p : {0u, 1u, 3u})
    if (sizes[p] == 0) throw Error(std::string("split ratio leaves the ") + kNames[p] + " part empty");

  Engine rng = make_engine(seed, streams::kSplit);
  const std::size_t n = samples.size();
  std::array<std::size_t, 4> order{0, 1, 2, 3};
  std::size_t offset = 0;
  if (mode == SplitMode::Contiguous) {
    offset = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  } else {
    std::shuffle(order.begin(), order.end(), rng);
  }

  DatasetSplit split;
  split.seed = seed;
  std::array<std::vector<Sample>*, 4> parts{&split.train, &split.observe, &split.acquire, &split.test};
  std::size_t cursor = offset;
  for (std::size_t part : order) {
    auto& dst = *parts[part];
    dst.reserve(sizes[part]);
    for (std::size_t k = 0; k < sizes[part]; ++k) dst.push_back(samples[(cursor + k) % n]);
    cursor += sizes[part];
    std::sort(dst.begin(), dst.end(), [](const Sample& a, const Sample& b) { return a.index < b.index; });
  }
  return split;
}

/// Drops a seeded contiguous block holding `fraction` of the samples.
inline std::vector<Sample> discard_block(std::span<const Sample> samples, double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0) throw Error("discard fraction must lie in [0, 1)");
  const auto drop = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(samples.size())));
  if (drop == 0) return {samples.begin(), samples.end()};
  Engine rng = make_engine(seed, streams::kDiscard);
  const std::size_t start = std::uniform_int_distribution<std::size_t>(0, samples.size() - drop)(rng);
  std::vector<Sample> kept(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(start));
  kept.insert(kept.end(), samples.begin() + static_cast<std::ptrdiff_t>(start + drop), samples.end());
  return kept;
}

/// Keeps each sample of a listed state with the given probability; other
/// samples pass through. Used to underrepresent tasks in a training part.
inline std::vector<Sample> thin_states(std::span<const Sample> samples, const std::map<StateId, double>& keep,
                                       std::uint64_t seed) {
  Engine rng = make_engine(seed, streams::kThin);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Sample> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) {
    auto it = s.label.is_discrete() ? keep.find(s.label.state()) : keep.end();
    const double u = unit(rng);
    if (it == keep.end() || u < it->second) out.push_back(s);
  }
  return out;
}

/// Replaces each sample's features with the concatenation of the previous
/// `lags` feature vectors and its own (oldest first). The first samples are
/// padded by repeating the first feature vector.
inline std::vector<Sample> embed_lags(std::span<const Sample> samples, std::size_t lags) {
  std::vector<Sample> out(samples.begin(), samples.end());
  if (lags == 0) return out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Vector f;
    f.reserve(samples[i].features.size() * (lags + 1));
    for (std::size_t back = lags + 1; back-- > 0;) {
      const std::size_t src = i >= back ? i - back : 0;
      f.insert(f.end(), samples[src].features.begin(), samples[src].features.end());
    }
    out[i].features = std::move(f);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prediction streams

/// One decoder execution. `index` is the dataset index of the input sample;
/// position in the stream is the execution ordinal used by oracles.
struct PredictionRecord {
  std::uint64_t index = 0;
  Vector input;
  Label output;
  std::optional<Label> truth;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

using Stream = std::vector<PredictionRecord>;

template <class D>
concept Predictor = requires(const D& d, const Vector& x) {
  { d.predict(x) } -> std::convertible_to<Label>;
  { d.input_dim() } -> std::convertible_to<std::size_t>;
};

template <Predictor D>
Stream make_stream(std::span<const Sample> part, const D& decoder) {
  Stream out;
  out.reserve(part.size());
  for (const Sample& s : part) {
    if (s.features.size() != decoder.input_dim())
      throw Error("feature dimension mismatch at sample index " + std::to_string(s.index) + ": got " +
                  std::to_string(s.features.size()) + ", decoder expects " + std::to_string(decoder.input_dim()));
    out.push_back(PredictionRecord{s.index, s.features, decoder.predict(s.features), s.label});
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV format: index,f0..fK,label  or  index,f0..fK,label_x,label_y

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, std::size_t line) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw Error("line " + std::to_string(line) + ": cannot parse number '" + std::string(text) + "'");
  return v;
}

namespace detail {
inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}
}  // namespace detail

inline void write_csv(std::ostream& os, const Dataset& ds) {
  os << "index";
  for (std::size_t f = 0; f < ds.feature_dim(); ++f) os << ",f" << f;
  if (ds.kind == LabelKind::Discrete) {
    os << ",label\n";
  } else {
    if (ds.label_dim != 2) throw Error("CSV format supports 2-D continuous labels only");
    os << ",label_x,label_y\n";
  }
  for (const Sample& s : ds.samples) {
    os << s.index;
    for (double v : s.features) os << ',' << format_double(v);
    if (ds.kind == LabelKind::Discrete) {
      os << ',' << ds.states.at(s.label.state());
    } else {
      for (double v : s.label.coords()) os << ',' << format_double(v);
    }
    os << '\n';
  }
}

/// Parses the CSV dataset format. For discrete data `states` fixes the state
/// order; when empty, the sorted set of labels seen in the file is used.
inline Dataset read_csv(std::istream& is, std::vector<std::string> states = {}) {
  std::string line;
  if (!std::getline(is, line)) throw Error("line 1: missing CSV header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);
  if (header.empty() || header[0] != "index") throw Error("line 1: first column must be 'index'");
  std::size_t nfeat = 0;
  while (1 + nfeat < header.size() && header[1 + nfeat] == "f" + std::to_string(nfeat)) ++nfeat;
  if (nfeat == 0) throw Error("line 1: expected feature columns f0..fK");
  const auto rest = std::span(header).subspan(1 + nfeat);

  Dataset ds;
  if (rest.size() == 1 && rest[0] == "label") {
    ds.kind = LabelKind::Discrete;
  } else if (rest.size() == 2 && rest[0] == "label_x" && rest[1] == "label_y") {
    ds.kind = LabelKind::Continuous;
    ds.label_dim = 2;
  } else {
    throw Error("line 1: label columns must be 'label' or 'label_x,label_y'");
  }

  std::vector<std::string> raw_labels;
  std::vector<std::size_t> label_lines;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw Error("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " columns, got " +
                  std::to_string(cells.size()));
    Sample s;
    std::uint64_t idx = 0;
    auto res = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), idx);
    if (res.ec != std::errc() || res.ptr != cells[0].data() + cells[0].size())
      throw Error("line " + std::to_string(lineno) + ": bad index '" + std::string(cells[0]) + "'");
    s.index = idx;
    for (std::size_t f = 0; f < nfeat; ++f) s.features.push_back(parse_double(cells[1 + f], lineno));
    if (ds.kind == LabelKind::Discrete) {
      raw_labels.emplace_back(cells[1 + nfeat]);
      label_lines.push_back(lineno);
    } else {
      s.label = Label::continuous({parse_double(cells[1 + nfeat], lineno), parse_double(cells[2 + nfeat], lineno)});
    }
    ds.samples.push_back(std::move(s));
  }
  if (ds.kind == LabelKind::Discrete) {
    if (states.empty()) {
      states = raw_labels;
      std::sort(states.begin(), states.end());
      states.erase(std::unique(states.begin(), states.end()), states.end());
    }
    ds.states = std::move(states);
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
      auto it = std::find(ds.states.begin(), ds.states.end(), raw_labels[i]);
      if (it == ds.states.end())
        throw Error("line " + std::to_string(label_lines[i]) + ": label '" + raw_labels[i] + "' is not a declared state");
      ds.samples[i].label = Label::discrete(static_cast<StateId>(it - ds.states.begin()));
    }
  }
  ds.validate();
  return ds;
}

inline Dataset read_csv_file(const std::string& path, std::vector<std::string> states = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset '" + path + "'");
  return read_csv(in, std::move(states));
}

}  // namespace bcirepair
