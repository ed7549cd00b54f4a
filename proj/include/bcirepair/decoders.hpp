#pragma once

// Reference decoders behind one value-typed Decoder interface:
//   SoftmaxClassifier  discrete, full-batch gradient descent (supports incremental retraining)
//   NearestCentroid    discrete, closed form
//   WienerCascade      continuous, ridge linear stage followed by a per-output polynomial
// plus the AuxiliaryBinaryClassifier consulted by the multimodal oracle.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bcirepair/datamodel.hpp"
#include "bcirepair/error.hpp"

namespace bcirepair {

using json = nlohmann::json;

enum class RetrainMode { Incremental, Concat };

inline const char* to_string(RetrainMode m) { return m == RetrainMode::Incremental ? "incremental" : "concat"; }

inline RetrainMode parse_retrain_mode(const std::string& s) {
  if (s == "incremental") return RetrainMode::Incremental;
  if (s == "concat") return RetrainMode::Concat;
  throw Error("unknown retrain mode '" + s + "'");
}

namespace detail {

inline Eigen::MatrixXd feature_matrix(std::span<const Sample> samples) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  const auto f = static_cast<Eigen::Index>(samples.front().features.size());
  Eigen::MatrixXd x(n, f);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& feat = samples[static_cast<std::size_t>(i)].features;
    if (static_cast<Eigen::Index>(feat.size()) != f)
      throw Error("feature dimension mismatch at sample index " + std::to_string(samples[i].index));
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(feat.data(), f);
  }
  return x;
}

inline std::vector<double> flatten(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

inline Eigen::MatrixXd unflatten(const std::vector<double>& v, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(v.size()) != rows * cols) throw Error("parameter array has the wrong length");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
  return m;
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline void check_dim(const Vector& x, std::size_t expected) {
  if (x.size() != expected)
    throw Error("feature dimension mismatch: got " + std::to_string(x.size()) + ", expected " +
                std::to_string(expected));
}

// Counts samples per class and rejects classes without any sample.
inline void require_all_classes(std::span<const Sample> samples, std::size_t num_classes) {
  std::vector<std::size_t> seen(num_classes, 0);
  for (const Sample& s : samples) {
    const StateId c = s.label.state();
    if (c >= num_classes) throw Error("label outside the declared state set at sample " + std::to_string(s.index));
    ++seen[c];
  }
  for (std::size_t c = 0; c < num_classes; ++c)
    if (seen[c] == 0) throw Error("training data has no sample of class " + std::to_string(c));
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Multinomial logistic regression over z-scored features. Standardization
/// statistics are frozen at the first fit and reused by incremental epochs.
class SoftmaxClassifier {
 public:
  struct Hyper {
    double learning_rate = 0.2;
    int epochs = 300;
    double l2 = 1e-4;
  };

  SoftmaxClassifier() = default;
  SoftmaxClassifier(std::size_t num_classes, Hyper hyper) : classes_(num_classes), hyper_(hyper) {
    if (num_classes < 2) throw Error("softmax classifier needs at least two classes");
  }

  std::size_t num_classes() const { return classes_; }
  std::size_t input_dim() const { return static_cast<std::size_t>(mean_.size()); }
  bool fitted() const { return fitted_; }
  const Hyper& hyper() const { return hyper_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& bias() const { return bias_; }
  /// Mean cross-entropy plus L2 penalty before each epoch and after the last one.
  const std::vector<double>& loss_history() const { return loss_history_; }

  SoftmaxClassifier fit(std::span<const Sample> samples) const {
    if (samples.empty()) throw Error("cannot fit on an empty training set");
    detail::require_all_classes(samples, classes_);
    SoftmaxClassifier out = *this;
    const Eigen::MatrixXd x = detail::feature_matrix(samples);
    out.mean_ = x.colwise().mean().transpose();
    out.scale_ = ((x.rowwise() - out.mean_.transpose()).array().square().colwise().mean().sqrt()).transpose();
    for (Eigen::Index j = 0; j < out.scale_.size(); ++j)
      if (!(out.scale_(j) > 1e-12)) out.scale_(j) = 1.0;
    out.weights_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes_), x.cols());
    out.bias_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes_));
    out.loss_history_.clear();
    out.descend(samples, x, hyper_.epochs);
    out.fitted_ = true;
    return out;
  }

  /// Continues gradient descent from the current parameters on `samples` only.
  SoftmaxClassifier train_more(std::span<const Sample> samples, int epochs) const {
    if (!fitted_) throw Error("incremental training needs a fitted classifier");
    if (samples.empty()) throw Error("incremental training needs at least one sample");
    SoftmaxClassifier out = *this;
    out.loss_history_.clear();
    out.descend(samples, detail::feature_matrix(samples), epochs);
    return out;
  }

  Vector predict_proba(const Vector& x) const {
    if (!fitted_) throw Error("classifier is not fitted");
    detail::check_dim(x, input_dim());
    const Eigen::VectorXd z = (detail::to_eigen(x) - mean_).cwiseQuotient(scale_);
    Eigen::VectorXd s = weights_ * z + bias_;
    s.array() -= s.maxCoeff();
    s = s.array().exp();
    s /= s.sum();
    return detail::to_std(s);
  }

  Label predict(const Vector& x) const {
    const Vector p = predict_proba(x);
    // std::max_element returns the first maximum, i.e. the lowest class id on ties.
    return Label::discrete(static_cast<StateId>(std::max_element(p.begin(), p.end()) - p.begin()));
  }

  json to_json() const {
    return {{"num_classes", classes_},
            {"learning_rate", hyper_.learning_rate},
            {"epochs", hyper_.epochs},
            {"l2", hyper_.l2},
            {"input_dim", input_dim()},
            {"mean", detail::to_std(mean_)},
            {"scale", detail::to_std(scale_)},
            {"weights", detail::flatten(weights_)},
            {"bias", detail::to_std(bias_)}};
  }

  static SoftmaxClassifier from_json(const json& j) {
    SoftmaxClassifier c(j.at("num_classes").get<std::size_t>(),
                        Hyper{j.at("learning_rate").get<double>(), j.at("epochs").get<int>(), j.at("l2").get<double>()});
    const auto dim = j.at("input_dim").get<Eigen::Index>();
    if (dim > 0) {
      c.mean_ = detail::to_eigen(j.at("mean").get<std::vector<double>>());
      c.scale_ = detail::to_eigen(j.at("scale").get<std::vector<double>>());
      c.weights_ = detail::unflatten(j.at("weights").get<std::vector<double>>(), static_cast<Eigen::Index>(c.classes_), dim);
      c.bias_ = detail::to_eigen(j.at("bias").get<std::vector<double>>());
      c.fitted_ = true;
    }
    return c;
  }

 private:
  double loss(const Eigen::MatrixXd& z, const std::vector<StateId>& y) const {
    Eigen::MatrixXd s = (z * weights_.transpose()).rowwise() + bias_.transpose();
    double total = 0.0;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const double m = s.row(i).maxCoeff();
      const double lse = m + std::log((s.row(i).array() - m).exp().sum());
      total += lse - s(i, static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)]));
    }
    return total / static_cast<double>(s.rows()) + 0.5 * hyper_.l2 * weights_.squaredNorm();
  }

  void descend(std::span<const Sample> samples, const Eigen::MatrixXd& x, int epochs) {
    const Eigen::MatrixXd z = (x.rowwise() - mean_.transpose()).array().rowwise() / scale_.transpose().array();
    std::vector<StateId> y;
    y.reserve(samples.size());
    for (const Sample& s : samples) y.push_back(s.label.state());
    const double n = static_cast<double>(samples.size());
    for (int e = 0; e < epochs; ++e) {
      loss_history_.push_back(loss(z, y));
      Eigen::MatrixXd p = (z * weights_.transpose()).rowwise() + bias_.transpose();
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        p.row(i).array() -= p.row(i).maxCoeff();
        p.row(i) = p.row(i).array().exp();
        p.row(i) /= p.row(i).sum();
        p(i, static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)])) -= 1.0;
      }
      const Eigen::MatrixXd grad_w = p.transpose() * z / n + hyper_.l2 * weights_;
      const Eigen::VectorXd grad_b = p.colwise().sum().transpose() / n;
      weights_ -= hyper_.learning_rate * grad_w;
      bias_ -= hyper_.learning_rate * grad_b;
    }
    loss_history_.push_back(loss(z, y));
  }

  std::size_t classes_ = 0;
  Hyper hyper_;
  bool fitted_ = false;
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
  std::vector<double> loss_history_;
};

// ---------------------------------------------------------------------------

class NearestCentroid {
 public:
  NearestCentroid() = default;
  explicit NearestCentroid(std::size_t num_classes) : classes_(num_classes) {}
  NearestCentroid(std::vector<Vector> centroids) : classes_(centroids.size()), centroids_(std::move(centroids)) {}

  std::size_t num_classes() const { return classes_; }
  std::size_t input_dim() const { return centroids_.empty() ? 0 : centroids_.front().size(); }
  bool fitted() const { return !centroids_.empty(); }
  const std::vector<Vector>& centroids() const { return centroids_; }

  NearestCentroid fit(std::span<const Sample> samples) const {
    if (samples.empty()) throw Error("cannot fit on an empty training set");
    detail::require_all_classes(samples, classes_);
    const std::size_t dim = samples.front().features.size();
    std::vector<Vector> sums(classes_, Vector(dim, 0.0));
    std::vector<double> counts(classes_, 0.0);
    for (const Sample& s : samples) {
      detail::check_dim(s.features, dim);
      auto& acc = sums[s.label.state()];
      for (std::size_t j = 0; j < dim; ++j) acc[j] += s.features[j];
      counts[s.label.state()] += 1.0;
    }
    for (std::size_t c = 0; c < classes_; ++c)
      for (double& v : sums[c]) v /= counts[c];
    return NearestCentroid(std::move(sums));
  }

  Label predict(const Vector& x) const {
    if (!fitted()) throw Error("nearest-centroid decoder is not fitted");
    detail::check_dim(x, input_dim());
    StateId best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < classes_; ++c) {
      double d = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) d += (x[j] - centroids_[c][j]) * (x[j] - centroids_[c][j]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    return Label::discrete(best);
  }

  json to_json() const { return {{"num_classes", classes_}, {"centroids", centroids_}}; }
  static NearestCentroid from_json(const json& j) {
    auto c = j.at("centroids").get<std::vector<Vector>>();
    if (c.empty()) return NearestCentroid(j.at("num_classes").get<std::size_t>());
    return NearestCentroid(std::move(c));
  }

 private:
  std::size_t classes_ = 0;
  std::vector<Vector> centroids_;
};

// ---------------------------------------------------------------------------

/// Linear stage y_lin = W [x; 1] solved by ridge normal equations, then a
/// polynomial of degree p per output dimension fitted by least squares on the
/// linear stage's outputs. Inputs are expected to be lag-embedded already
/// (see embed_lags); `lags` records the embedding so fits can check that
/// enough samples exist.
class WienerCascade {
 public:
  struct Hyper {
    std::size_t lags = 0;
    int degree = 3;
    double ridge = 1e-6;
  };

  WienerCascade() = default;
  explicit WienerCascade(Hyper hyper) : hyper_(hyper) {
    if (hyper.degree < 1) throw Error("Wiener cascade polynomial degree must be at least 1");
    if (hyper.ridge < 0.0) throw Error("ridge strength must be non-negative");
  }

  const Hyper& hyper() const { return hyper_; }
  bool fitted() const { return linear_.size() > 0; }
  std::size_t input_dim() const { return linear_.cols() > 0 ? static_cast<std::size_t>(linear_.cols() - 1) : 0; }
  std::size_t output_dim() const { return static_cast<std::size_t>(linear_.rows()); }
  /// Rows: output dimensions; columns: input features followed by the intercept.
  const Eigen::MatrixXd& linear() const { return linear_; }
  /// Rows: output dimensions; columns: coefficients of z^0 .. z^p.
  const Eigen::MatrixXd& poly() const { return poly_; }

  WienerCascade fit(std::span<const Sample> samples) const {
    if (samples.size() < hyper_.lags + 1)
      throw Error("Wiener cascade with " + std::to_string(hyper_.lags) + " lags needs at least " +
                  std::to_string(hyper_.lags + 1) + " samples");
    const Eigen::MatrixXd x = detail::feature_matrix(samples);
    const Eigen::Index n = x.rows();
    const auto d = static_cast<Eigen::Index>(samples.front().label.coords().size());
    Eigen::MatrixXd xa(n, x.cols() + 1);
    xa << x, Eigen::VectorXd::Ones(n);
    Eigen::MatrixXd y(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& c = samples[static_cast<std::size_t>(i)].label.coords();
      if (static_cast<Eigen::Index>(c.size()) != d) throw Error("inconsistent label dimension");
      y.row(i) = Eigen::Map<const Eigen::RowVectorXd>(c.data(), d);
    }
    Eigen::MatrixXd gram = xa.transpose() * xa;
    gram.diagonal().array() += hyper_.ridge;
    WienerCascade out = *this;
    out.linear_ = gram.ldlt().solve(xa.transpose() * y).transpose();

    const Eigen::MatrixXd lin = xa * out.linear_.transpose();
    out.poly_.resize(d, hyper_.degree + 1);
    if (hyper_.degree == 1) {
      // an affine refit would only undo the ridge shrinkage of the linear stage
      out.poly_.col(0).setZero();
      out.poly_.col(1).setOnes();
      return out;
    }
    for (Eigen::Index k = 0; k < d; ++k) {
      Eigen::MatrixXd v(n, hyper_.degree + 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        double p = 1.0;
        for (int e = 0; e <= hyper_.degree; ++e, p *= lin(i, k)) v(i, e) = p;
      }
      out.poly_.row(k) = v.colPivHouseholderQr().solve(y.col(k)).transpose();
    }
    return out;
  }

  Label predict(const Vector& x) const {
    if (!fitted()) throw Error("Wiener cascade is not fitted");
    detail::check_dim(x, input_dim());
    Eigen::VectorXd xa(linear_.cols());
    xa << detail::to_eigen(x), 1.0;
    const Eigen::VectorXd lin = linear_ * xa;
    Vector out(static_cast<std::size_t>(lin.size()));
    for (Eigen::Index k = 0; k < lin.size(); ++k) {
      double acc = 0.0;
      for (Eigen::Index e = poly_.cols(); e-- > 0;) acc = acc * lin(k) + poly_(k, e);
      out[static_cast<std::size_t>(k)] = acc;
    }
    return Label::continuous(std::move(out));
  }

  json to_json() const {
    return {{"lags", hyper_.lags},       {"degree", hyper_.degree},
            {"ridge", hyper_.ridge},     {"input_dim", input_dim()},
            {"output_dim", output_dim()}, {"linear", detail::flatten(linear_)},
            {"poly", detail::flatten(poly_)}};
  }
  static WienerCascade from_json(const json& j) {
    WienerCascade w(Hyper{j.at("lags").get<std::size_t>(), j.at("degree").get<int>(), j.at("ridge").get<double>()});
    const auto in = j.at("input_dim").get<Eigen::Index>();
    const auto out = j.at("output_dim").get<Eigen::Index>();
    if (out > 0) {
      w.linear_ = detail::unflatten(j.at("linear").get<std::vector<double>>(), out, in + 1);
      w.poly_ = detail::unflatten(j.at("poly").get<std::vector<double>>(), out, w.hyper_.degree + 1);
    }
    return w;
  }

 private:
  Hyper hyper_;
  Eigen::MatrixXd linear_;
  Eigen::MatrixXd poly_;
};

// ---------------------------------------------------------------------------

enum class Vigilance { Awake, Asleep };

inline const char* to_string(Vigilance v) { return v == Vigilance::Awake ? "awake" : "asleep"; }

inline Vigilance parse_vigilance(const std::string& s) {
  if (s == "awake") return Vigilance::Awake;
  if (s == "asleep") return Vigilance::Asleep;
  throw Error("unknown vigilance value '" + s + "' (expected awake|asleep)");
}

/// Logistic awake/asleep classifier over selected auxiliary feature columns.
/// Decides awake iff bias + w . x[columns] > 0, so it is total over its domain.
class AuxiliaryBinaryClassifier {
 public:
  AuxiliaryBinaryClassifier() = default;
  AuxiliaryBinaryClassifier(std::vector<std::size_t> columns, Vector weights, double bias)
      : columns_(std::move(columns)), weights_(std::move(weights)), bias_(bias) {
    if (columns_.size() != weights_.size()) throw Error("auxiliary classifier needs one weight per column");
  }

  static AuxiliaryBinaryClassifier constant(Vigilance v) {
    return AuxiliaryBinaryClassifier({}, {}, v == Vigilance::Awake ? 1.0 : -1.0);
  }

  /// Awake iff the mean of the selected columns exceeds `threshold`.
  static AuxiliaryBinaryClassifier mean_threshold(std::vector<std::size_t> columns, double threshold) {
    if (columns.empty()) throw Error("threshold classifier needs at least one column");
    Vector w(columns.size(), 1.0 / static_cast<double>(columns.size()));
    return AuxiliaryBinaryClassifier(std::move(columns), std::move(w), -threshold);
  }

  /// Logistic regression by full-batch gradient descent from zero weights.
  static AuxiliaryBinaryClassifier fit_logistic(std::span<const Sample> samples, std::vector<std::size_t> columns,
                                                const std::vector<Vigilance>& state_vigilance,
                                                double learning_rate = 0.5, int epochs = 200) {
    if (samples.empty()) throw Error("auxiliary classifier needs training samples");
    const std::size_t m = columns.size();
    Vector w(m, 0.0);
    double b = 0.0;
    const double n = static_cast<double>(samples.size());
    for (int e = 0; e < epochs; ++e) {
      Vector gw(m, 0.0);
      double gb = 0.0;
      for (const Sample& s : samples) {
        double score = b;
        for (std::size_t k = 0; k < m; ++k) score += w[k] * s.features.at(columns[k]);
        const double p = 1.0 / (1.0 + std::exp(-score));
        const double y = state_vigilance.at(s.label.state()) == Vigilance::Awake ? 1.0 : 0.0;
        for (std::size_t k = 0; k < m; ++k) gw[k] += (p - y) * s.features[columns[k]];
        gb += p - y;
      }
      for (std::size_t k = 0; k < m; ++k) w[k] -= learning_rate * gw[k] / n;
      b -= learning_rate * gb / n;
    }
    return AuxiliaryBinaryClassifier(std::move(columns), std::move(w), b);
  }

  Vigilance predict(const Vector& x) const {
    double score = bias_;
    for (std::size_t k = 0; k < columns_.size(); ++k) {
      if (columns_[k] >= x.size()) throw Error("auxiliary column out of range");
      score += weights_[k] * x[columns_[k]];
    }
    return score > 0.0 ? Vigilance::Awake : Vigilance::Asleep;
  }

  json to_json() const { return {{"columns", columns_}, {"weights", weights_}, {"bias", bias_}}; }
  static AuxiliaryBinaryClassifier from_json(const json& j) {
    return AuxiliaryBinaryClassifier(j.at("columns").get<std::vector<std::size_t>>(),
                                     j.at("weights").get<Vector>(), j.at("bias").get<double>());
  }

 private:
  std::vector<std::size_t> columns_;
  Vector weights_;
  double bias_ = 0.0;
};

// ---------------------------------------------------------------------------

/// Value-typed decoder handle. fit/retrain return new decoders; predict is pure.
class Decoder {
 public:
  using Model = std::variant<SoftmaxClassifier, NearestCentroid, WienerCascade>;

  Decoder(Model model, RetrainMode mode = RetrainMode::Concat, int incremental_epochs = 10)
      : model_(std::move(model)), mode_(mode), incremental_epochs_(incremental_epochs) {
    if (mode_ == RetrainMode::Incremental && !gradient_trained())
      throw Error("incremental retraining is only available for gradient-trained decoders");
  }

  static Decoder softmax(std::size_t num_classes, SoftmaxClassifier::Hyper h = {},
                         RetrainMode mode = RetrainMode::Concat, int incremental_epochs = 10) {
    return Decoder(SoftmaxClassifier(num_classes, h), mode, incremental_epochs);
  }
  static Decoder nearest_centroid(std::size_t num_classes) { return Decoder(NearestCentroid(num_classes)); }
  static Decoder wiener_cascade(WienerCascade::Hyper h = {}) { return Decoder(WienerCascade(h)); }

  const Model& model() const { return model_; }
  RetrainMode retrain_mode() const { return mode_; }
  int incremental_epochs() const { return incremental_epochs_; }

  LabelKind kind() const {
    return std::holds_alternative<WienerCascade>(model_) ? LabelKind::Continuous : LabelKind::Discrete;
  }
  bool gradient_trained() const { return std::holds_alternative<SoftmaxClassifier>(model_); }
  std::string type_name() const {
    return std::visit(
        [](const auto& m) -> std::string {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, SoftmaxClassifier>) return "softmax";
          else if constexpr (std::is_same_v<T, NearestCentroid>) return "nearest_centroid";
          else return "wiener_cascade";
        },
        model_);
  }

  bool fitted() const {
    return std::visit([](const auto& m) { return m.fitted(); }, model_);
  }
  std::size_t input_dim() const {
    return std::visit([](const auto& m) { return m.input_dim(); }, model_);
  }

  Decoder fit(std::span<const Sample> samples) const {
    Decoder out = *this;
    out.model_ = std::visit([&](const auto& m) -> Model { return m.fit(samples); }, model_);
    return out;
  }

  Label predict(const Vector& x) const {
    return std::visit([&](const auto& m) { return m.predict(x); }, model_);
  }

  /// Incremental mode runs extra epochs on `acquired` only; concat mode refits
  /// from scratch on base followed by acquired.
  Decoder retrain(std::span<const Sample> acquired, std::span<const Sample> base) const {
    if (acquired.empty()) throw Error("retraining needs at least one acquired sample");
    if (mode_ == RetrainMode::Incremental) {
      const auto* sm = std::get_if<SoftmaxClassifier>(&model_);
      if (sm == nullptr) throw Error("incremental retraining is only available for gradient-trained decoders");
      Decoder out = *this;
      out.model_ = sm->train_more(acquired, incremental_epochs_);
      return out;
    }
    std::vector<Sample> all(base.begin(), base.end());
    all.insert(all.end(), acquired.begin(), acquired.end());
    return fit(all);
  }

  json to_json() const {
    return {{"kind", to_string(kind())},
            {"type", type_name()},
            {"retrain_mode", to_string(mode_)},
            {"incremental_epochs", incremental_epochs_},
            {"parameters", std::visit([](const auto& m) { return m.to_json(); }, model_)}};
  }

  static Decoder from_json(const json& j) {
    const auto type = j.at("type").get<std::string>();
    const auto mode = parse_retrain_mode(j.at("retrain_mode").get<std::string>());
    const int epochs = j.value("incremental_epochs", 10);
    const json& p = j.at("parameters");
    if (type == "softmax") return Decoder(SoftmaxClassifier::from_json(p), mode, epochs);
    if (type == "nearest_centroid") return Decoder(NearestCentroid::from_json(p), mode, epochs);
    if (type == "wiener_cascade") return Decoder(WienerCascade::from_json(p), mode, epochs);
    throw Error("unknown decoder type '" + type + "'");
  }

 private:
  Model model_;
  RetrainMode mode_ = RetrainMode::Concat;
  int incremental_epochs_ = 10;
};

}  // namespace bcirepair
