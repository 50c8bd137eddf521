#pragma once

#include "svdtr/core.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace svdtr {

inline constexpr double kLPTolerance = 1e-7;

enum class LPStatus { Feasible, Infeasible, NumericalFailure };

struct LPResult {
  LPStatus status = LPStatus::Infeasible;
  VectorXd witness;  // valid only when status == Feasible
  int pivots = 0;

  bool feasible() const { return status == LPStatus::Feasible; }
};

/// Decides whether { x : C x >= 1 componentwise } is nonempty and returns a
/// point of it. Phase-1 simplex (feasibility only, objective 0) with Bland's
/// anti-cycling rule; pivot cap 50 * (rows + cols).
///
/// Rows are normalized internally for conditioning; feasibility of a margin
/// system is invariant under positive row scaling, and the returned witness
/// is rescaled to satisfy the original constraints.
inline LPResult margin_feasible(const MatrixXd& constraints) {
  const Eigen::Index m = constraints.rows();
  const Eigen::Index d = constraints.cols();
  LPResult out;
  if (m == 0) {
    out.status = LPStatus::Feasible;
    out.witness = VectorXd::Zero(d);
    return out;
  }

  VectorXd norms(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    norms[i] = constraints.row(i).norm();
    if (norms[i] == 0.0) {
      out.status = LPStatus::Infeasible;  // 0'x >= 1 cannot hold
      return out;
    }
  }
  MatrixXd C = norms.cwiseInverse().asDiagonal() * constraints;

  // Variables: x+ (d), x- (d), surplus (m), artificial (m).
  // Constraints: C x+ - C x- - s + a = 1, minimize sum(a).
  const Eigen::Index ncols = 2 * d + 2 * m;
  MatrixXd T(m, ncols + 1);
  T.setZero();
  T.block(0, 0, m, d) = C;
  T.block(0, d, m, d) = -C;
  for (Eigen::Index i = 0; i < m; ++i) {
    T(i, 2 * d + i) = -1.0;
    T(i, 2 * d + m + i) = 1.0;
    T(i, ncols) = 1.0;
  }
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = 2 * d + m + i;

  // Reduced-cost row for min sum(a) with the artificial basis priced out.
  VectorXd zrow = VectorXd::Zero(ncols + 1);
  for (Eigen::Index i = 0; i < m; ++i) zrow -= T.row(i);
  for (Eigen::Index i = 0; i < m; ++i) zrow[2 * d + m + i] = 0.0;

  const int pivot_cap = 50 * static_cast<int>(m + d);
  while (true) {
    Eigen::Index entering = -1;
    for (Eigen::Index j = 0; j < ncols; ++j) {
      if (zrow[j] < -kLPTolerance) {
        entering = j;  // Bland: lowest eligible index
        break;
      }
    }
    if (entering < 0) break;

    Eigen::Index leaving = -1;
    double best_ratio = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (T(i, entering) > kLPTolerance) {
        const double ratio = T(i, ncols) / T(i, entering);
        if (leaving < 0 || ratio < best_ratio ||
            (ratio == best_ratio &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leaving)])) {
          leaving = i;
          best_ratio = ratio;
        }
      }
    }
    if (leaving < 0) {
      out.status = LPStatus::NumericalFailure;  // phase-1 cannot be unbounded
      return out;
    }

    const double piv = T(leaving, entering);
    T.row(leaving) /= piv;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (i == leaving) continue;
      const double f = T(i, entering);
      if (f != 0.0) T.row(i) -= f * T.row(leaving);
    }
    const double fz = zrow[entering];
    if (fz != 0.0) zrow -= fz * T.row(leaving);
    basis[static_cast<std::size_t>(leaving)] = entering;

    if (++out.pivots > pivot_cap) {
      out.status = LPStatus::NumericalFailure;
      return out;
    }
  }

  const double objective = -zrow[ncols];
  if (objective > kLPTolerance) {
    out.status = LPStatus::Infeasible;
    return out;
  }

  VectorXd xpos = VectorXd::Zero(d), xneg = VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index b = basis[static_cast<std::size_t>(i)];
    if (b < d) {
      xpos[b] = T(i, ncols);
    } else if (b < 2 * d) {
      xneg[b - d] = T(i, ncols);
    }
  }
  VectorXd w = xpos - xneg;

  // Rescale so the original (unnormalized) margins are all >= 1.
  double tmin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m; ++i) {
    tmin = std::min(tmin, constraints.row(i).dot(w));
  }
  if (!(tmin > 0.0) || !std::isfinite(tmin)) {
    out.status = LPStatus::NumericalFailure;
    return out;
  }
  w *= (1.0 + 1e-9) / tmin;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (constraints.row(i).dot(w) < 1.0 - kLPTolerance) {
      out.status = LPStatus::NumericalFailure;
      return out;
    }
  }
  out.status = LPStatus::Feasible;
  out.witness = std::move(w);
  return out;
}

/// Feasibility of the labeled-separation system l_i * (x_i' psi) >= 1.
inline LPResult lp_feasible(const MatrixXd& points, const VectorXi& labels) {
  if (points.rows() != labels.size()) {
    throw DimensionMismatch("points and labels differ in length");
  }
  MatrixXd C = points;
  for (Eigen::Index i = 0; i < C.rows(); ++i) {
    C.row(i) *= static_cast<double>(labels[i]);
  }
  return margin_feasible(C);
}

struct LazyLPResult {
  LPStatus status = LPStatus::Infeasible;
  VectorXd witness;
  std::vector<Eigen::Index> working;  // rows that decided the outcome
};

/// Same feasibility question as margin_feasible, solved by constraint
/// generation: the simplex only ever sees a working subset of rows, grown
/// with the most violated constraints until the witness covers everything
/// or the subset itself is infeasible. In R^d an infeasible system has an
/// infeasible subsystem of at most d+1 rows, so working sets stay small.
inline LazyLPResult margin_feasible_lazy(const Eigen::Ref<const MatrixXd>& constraints,
                                         std::vector<Eigen::Index> working = {}) {
  const Eigen::Index m = constraints.rows();
  const Eigen::Index d = constraints.cols();
  constexpr int kAddPerRound = 8;

  std::sort(working.begin(), working.end());
  working.erase(std::unique(working.begin(), working.end()), working.end());
  std::erase_if(working, [m](Eigen::Index i) { return i < 0 || i >= m; });

  LazyLPResult out;
  for (Eigen::Index round = 0; round <= m + 1; ++round) {
    MatrixXd sub(static_cast<Eigen::Index>(working.size()), d);
    for (std::size_t k = 0; k < working.size(); ++k) {
      sub.row(static_cast<Eigen::Index>(k)) = constraints.row(working[k]);
    }
    LPResult r = margin_feasible(sub);
    if (r.status != LPStatus::Feasible) {
      out.status = r.status;
      out.working = std::move(working);
      return out;
    }
    // Scan the full system; collect the most violated rows.
    std::vector<std::pair<double, Eigen::Index>> violated;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double margin = constraints.row(i).dot(r.witness);
      if (margin < 1.0 - kLPTolerance) violated.emplace_back(margin, i);
    }
    if (violated.empty()) {
      out.status = LPStatus::Feasible;
      out.witness = std::move(r.witness);
      out.working = std::move(working);
      return out;
    }
    std::sort(violated.begin(), violated.end());
    for (int k = 0; k < kAddPerRound && k < static_cast<int>(violated.size()); ++k) {
      working.push_back(violated[static_cast<std::size_t>(k)].second);
    }
  }
  out.status = LPStatus::NumericalFailure;  // cannot happen: working grows each round
  out.working = std::move(working);
  return out;
}

}  // namespace svdtr
