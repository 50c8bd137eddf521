#pragma once

#include "svdtr/core.hpp"

#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <optional>
#include <utility>

namespace svdtr {

// Relative rank cutoff shared by every least-squares entry point. Strict
// enough to catch duplicated columns from overlapping main/interaction specs.
inline constexpr double kRankTolerance = 1e-10;

struct ResidualSummary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double residual_std_error = 0.0;
  double r_squared = 0.0;
};

namespace detail {

// Type-7 quantile (the R default), so printouts line up with lm() summaries.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double idx = p * (static_cast<double>(sorted.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(idx));
  const auto hi = static_cast<std::size_t>(std::ceil(idx));
  const double frac = idx - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace detail

inline ResidualSummary summarize_residuals(const VectorXd& residuals,
                                           const VectorXd& response, int n_params) {
  ResidualSummary s;
  const auto n = static_cast<std::size_t>(residuals.size());
  if (n == 0) return s;
  std::vector<double> sorted(residuals.data(), residuals.data() + n);
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.q1 = detail::quantile_sorted(sorted, 0.25);
  s.median = detail::quantile_sorted(sorted, 0.5);
  s.q3 = detail::quantile_sorted(sorted, 0.75);
  s.max = sorted.back();
  const double rss = residuals.squaredNorm();
  const auto df = static_cast<double>(residuals.size() - n_params);
  s.residual_std_error = df > 0 ? std::sqrt(rss / df) : 0.0;
  const double mean_y = response.mean();
  const double tss = (response.array() - mean_y).square().sum();
  s.r_squared = tss > 0 ? 1.0 - rss / tss : 0.0;
  return s;
}

/// Least-squares coefficients via column-pivoted Householder QR.
/// Throws RankDeficient when the factorization detects rank < q.
inline VectorXd fit_ols(const MatrixXd& design, const VectorXd& response) {
  if (design.rows() != response.size()) {
    throw DimensionMismatch("design has " + std::to_string(design.rows()) +
                            " rows but response has length " +
                            std::to_string(response.size()));
  }
  if (design.rows() < design.cols()) {
    throw InsufficientData("fewer observations than coefficients");
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < design.cols()) {
    throw RankDeficient("design matrix is rank deficient (rank " +
                        std::to_string(qr.rank()) + " of " +
                        std::to_string(design.cols()) + ")");
  }
  return qr.solve(response);
}

/// Factorization of a fixed design, reused across many response vectors.
/// project(y) matches fit_ols(design, y) to 1e-10 for every y.
class CachedProjector {
 public:
  explicit CachedProjector(const MatrixXd& design) : qr_(design) {
    qr_.setThreshold(kRankTolerance);
    if (design.rows() < design.cols()) {
      throw InsufficientData("fewer observations than coefficients");
    }
    if (qr_.rank() < design.cols()) {
      throw RankDeficient("design matrix is rank deficient");
    }
  }

  VectorXd project(const VectorXd& response) const {
    if (response.size() != qr_.rows()) {
      throw DimensionMismatch("response length does not match cached design");
    }
    return qr_.solve(response);
  }

  Eigen::Index n_rows() const { return qr_.rows(); }
  Eigen::Index n_cols() const { return qr_.cols(); }

 private:
  Eigen::ColPivHouseholderQR<MatrixXd> qr_;
};

/// Fitted linear working model Q(h,a) = m(h)'beta + a * g(h)'psi, where m/g
/// are the model spec's main and interaction selections (optional intercepts).
struct FittedQModel {
  VectorXd beta;
  VectorXd psi;
  ModelSpec spec;
  ResidualSummary residual_summary;
  std::size_t n_used = 0;
  std::size_t n_dropped = 0;

  VectorXd main_vector(const VectorXd& h) const {
    return assemble(h, spec.main_cols, spec.intercept_main);
  }
  VectorXd interact_vector(const VectorXd& h) const {
    return assemble(h, spec.interact_cols, spec.intercept_interact);
  }

  double interact_score(const VectorXd& h) const {
    check_dim(h);
    double s = 0.0;
    int k = 0;
    if (spec.intercept_interact) s += psi[k++];
    for (int c : spec.interact_cols) s += psi[k++] * h[c];
    return s;
  }

  double main_score(const VectorXd& h) const {
    check_dim(h);
    double m = 0.0;
    int k = 0;
    if (spec.intercept_main) m += beta[k++];
    for (int c : spec.main_cols) m += beta[k++] * h[c];
    return m;
  }

  double predict(const VectorXd& h, int a) const {
    return main_score(h) + a * interact_score(h);
  }

 private:
  void check_dim(const VectorXd& h) const {
    for (int c : spec.main_cols) {
      if (c >= h.size()) throw DimensionMismatch("history shorter than model spec");
    }
    for (int c : spec.interact_cols) {
      if (c >= h.size()) throw DimensionMismatch("history shorter than model spec");
    }
  }
  static VectorXd assemble(const VectorXd& h, const std::vector<int>& cols, bool intercept) {
    VectorXd v(static_cast<Eigen::Index>(cols.size()) + (intercept ? 1 : 0));
    int k = 0;
    if (intercept) v[k++] = 1.0;
    for (int c : cols) {
      if (c >= h.size()) throw DimensionMismatch("history shorter than model spec");
      v[k++] = h[c];
    }
    return v;
  }
};

/// Q(h,+1) - Q(h,-1) under the +-1 coding: twice the interaction score.
inline double contrast(const FittedQModel& model, const VectorXd& h) {
  return 2.0 * model.interact_score(h);
}

enum class Outcome { Y, Z };

namespace detail {

struct StageView {
  std::vector<const VectorXd*> histories;
  std::vector<int> actions;
  std::vector<double> y;
  std::vector<double> z;
};

inline StageView stage_view(const Dataset& ds, int stage) {
  StageView v;
  if (ds.stage_count == 1) {
    if (stage != 1) throw DimensionMismatch("one-stage dataset has no stage 2");
    for (const auto& r : ds.rows1) {
      v.histories.push_back(&r.h);
      v.actions.push_back(r.a);
      v.y.push_back(r.y);
      v.z.push_back(r.z);
    }
  } else {
    for (const auto& r : ds.rows2) {
      v.histories.push_back(stage == 1 ? &r.h1 : &r.h2);
      v.actions.push_back(stage == 1 ? r.a1 : r.a2);
      v.y.push_back(r.y);
      v.z.push_back(r.z);
    }
  }
  return v;
}

inline bool row_complete(const VectorXd& h, const ModelSpec& spec, double outcome) {
  if (is_missing(outcome)) return false;
  for (int c : spec.main_cols) {
    if (is_missing(h[c])) return false;
  }
  for (int c : spec.interact_cols) {
    if (is_missing(h[c])) return false;
  }
  return true;
}

}  // namespace detail

/// Design matrix [main block | a * interaction block] for one stage of data.
inline MatrixXd build_design(const std::vector<const VectorXd*>& histories,
                             const std::vector<int>& actions, const ModelSpec& spec) {
  const auto n = static_cast<Eigen::Index>(histories.size());
  const int pm = spec.main_dim();
  const int pi = spec.interact_dim();
  MatrixXd X(n, pm + pi);
  for (Eigen::Index i = 0; i < n; ++i) {
    const VectorXd& h = *histories[i];
    int k = 0;
    if (spec.intercept_main) X(i, k++) = 1.0;
    for (int c : spec.main_cols) X(i, k++) = h[c];
    const double a = static_cast<double>(actions[i]);
    if (spec.intercept_interact) X(i, k++) = a;
    for (int c : spec.interact_cols) X(i, k++) = a * h[c];
  }
  return X;
}

/// Complete-case design and response for one stage, outcome, and spec.
struct FilteredDesign {
  MatrixXd design;
  VectorXd response;
  std::size_t n_dropped = 0;
};

inline FilteredDesign build_filtered_design(const Dataset& ds, const ModelSpec& spec,
                                            const VectorXd& outcome, int stage) {
  auto view = detail::stage_view(ds, stage);
  const auto n = view.histories.size();
  if (static_cast<std::size_t>(outcome.size()) != n) {
    throw DimensionMismatch("outcome vector length " + std::to_string(outcome.size()) +
                            " does not match dataset size " + std::to_string(n));
  }
  const int hdim = (stage == 1) ? ds.h1_dim() : ds.h2_dim();
  spec.check_resolvable(hdim);

  std::vector<const VectorXd*> hs;
  std::vector<int> as;
  std::vector<double> ys;
  for (std::size_t i = 0; i < n; ++i) {
    if (detail::row_complete(*view.histories[i], spec, outcome[static_cast<Eigen::Index>(i)])) {
      hs.push_back(view.histories[i]);
      as.push_back(view.actions[i]);
      ys.push_back(outcome[static_cast<Eigen::Index>(i)]);
    }
  }
  const int q = spec.main_dim() + spec.interact_dim();
  if (static_cast<int>(hs.size()) < q) {
    throw InsufficientData("complete cases (" + std::to_string(hs.size()) +
                           ") fewer than coefficients (" + std::to_string(q) + ")");
  }
  FilteredDesign out;
  out.design = build_design(hs, as, spec);
  out.response =
      Eigen::Map<const VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  out.n_dropped = n - hs.size();
  return out;
}

/// Fits the linear working model for one stage and outcome by least squares.
/// Rows with missing values in any used column are dropped (complete case).
inline FittedQModel fit_q_model(const Dataset& ds, const ModelSpec& spec,
                                const VectorXd& outcome, int stage) {
  FilteredDesign fd = build_filtered_design(ds, spec, outcome, stage);
  VectorXd coef = fit_ols(fd.design, fd.response);

  FittedQModel m;
  m.spec = spec;
  m.beta = coef.head(spec.main_dim());
  m.psi = coef.tail(spec.interact_dim());
  m.n_used = static_cast<std::size_t>(fd.design.rows());
  m.n_dropped = fd.n_dropped;
  VectorXd residuals = fd.response - fd.design * coef;
  m.residual_summary =
      summarize_residuals(residuals, fd.response, static_cast<int>(fd.design.cols()));
  return m;
}

inline FittedQModel fit_q_model(const Dataset& ds, const ModelSpec& spec,
                                Outcome which, int stage) {
  auto view = detail::stage_view(ds, stage);
  const auto& src = which == Outcome::Y ? view.y : view.z;
  VectorXd outcome =
      Eigen::Map<const VectorXd>(src.data(), static_cast<Eigen::Index>(src.size()));
  return fit_q_model(ds, spec, outcome, stage);
}

/// Simple-linear-regression slope of the observed (time, value) pairs.
/// Missing values (NaN) are skipped; needs two usable pairs with distinct times.
inline double slope_outcome(const VectorXd& times, const VectorXd& values) {
  if (times.size() != values.size()) {
    throw DimensionMismatch("times and values differ in length");
  }
  double st = 0.0, sv = 0.0;
  int m = 0;
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    if (is_missing(values[i]) || is_missing(times[i])) continue;
    st += times[i];
    sv += values[i];
    ++m;
  }
  if (m < 2) throw InsufficientData("slope needs at least 2 observed pairs");
  const double tbar = st / m;
  const double vbar = sv / m;
  double sxx = 0.0, sxy = 0.0;
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    if (is_missing(values[i]) || is_missing(times[i])) continue;
    sxx += (times[i] - tbar) * (times[i] - tbar);
    sxy += (times[i] - tbar) * (values[i] - vbar);
  }
  if (sxx == 0.0) throw InsufficientData("all observed times are equal");
  return sxy / sxx;
}

}  // namespace svdtr
