#pragma once

#include "svdtr/core.hpp"
#include "svdtr/linprog.hpp"
#include "svdtr/static_rule.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace svdtr {

/// One deterministic stage-2 rule restricted to the observed histories:
/// the assigned labels plus a separating witness realizing them with margin 1.
struct Labeling {
  std::vector<int> labels;
  VectorXd witness;
};

struct EnumerationOptions {
  std::size_t labeling_cap = 1'000'000;
};

namespace detail {

inline std::string partial_to_string(const std::vector<int>& labels,
                                     const std::vector<bool>& assigned) {
  std::string s;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s += assigned[i] ? std::to_string(labels[i]) : std::string("?");
    if (i + 1 < labels.size()) s += ",";
  }
  return s;
}

struct BinaryEnumerator {
  const MatrixXd& points;            // n x p2 interaction vectors
  const std::vector<int>& order;     // ambiguous indices, branch order
  std::vector<int>& labels;          // current assignment (forced prefilled)
  std::vector<bool>& assigned;
  std::vector<Labeling>& out;
  std::size_t cap;

  // Constraint rows accumulated along the DFS path (forced block first).
  MatrixXd rows;
  Eigen::Index n_rows = 0;

  void push_row(int idx, int label) {
    rows.row(n_rows++) = static_cast<double>(label) * points.row(idx);
  }

  void dfs(std::size_t depth, const VectorXd& witness,
           const std::vector<Eigen::Index>& working) {
    if (depth == order.size()) {
      if (out.size() >= cap) {
        throw BudgetExceeded("feasible labeling count exceeded cap of " +
                             std::to_string(cap));
      }
      out.push_back(Labeling{labels, witness});
      return;
    }
    const int idx = order[depth];
    for (int label : {-1, 1}) {
      labels[static_cast<std::size_t>(idx)] = label;
      assigned[static_cast<std::size_t>(idx)] = true;
      push_row(idx, label);

      // Parent witness already certifies every prior row; if it covers the
      // new one too the LP can be skipped entirely.
      const double margin = static_cast<double>(label) * points.row(idx).dot(witness);
      if (margin >= 1.0 - kLPTolerance) {
        dfs(depth + 1, witness, working);
      } else {
        std::vector<Eigen::Index> seed = working;
        seed.push_back(n_rows - 1);
        LazyLPResult lp = margin_feasible_lazy(rows.topRows(n_rows), std::move(seed));
        if (lp.status == LPStatus::NumericalFailure) {
          throw NumericalFailure("LP failed at partial assignment [" +
                                 partial_to_string(labels, assigned) + "]");
        }
        if (lp.status == LPStatus::Feasible) dfs(depth + 1, lp.witness, lp.working);
      }

      --n_rows;
      assigned[static_cast<std::size_t>(idx)] = false;
    }
  }
};

}  // namespace detail

/// Exact enumeration of all labelings of the observed stage-2 interaction
/// vectors that are compatible with the rule and linearly separable with
/// margin 1. Output is sorted lexicographically by label vector (-1 < +1).
///
/// Points whose rule output is a singleton have their label fixed; only
/// ambiguous points branch, processed in order of decreasing norm so the
/// most constraining points prune first.
inline std::vector<Labeling> enumerate_feasible(const SetValuedRule& rule,
                                                const std::vector<VectorXd>& histories,
                                                const EnumerationOptions& opts = {}) {
  if (!rule.model_y.spec.same_interaction(rule.model_z.spec)) {
    throw DimensionMismatch(
        "stage-2 models must share the interaction subvector for enumeration");
  }
  const auto n = histories.size();
  const Eigen::Index p2 = rule.model_y.spec.interact_dim();
  MatrixXd points(n, p2);
  std::vector<int> labels(n, 0);
  std::vector<bool> assigned(n, false);
  std::vector<int> ambiguous;
  for (std::size_t i = 0; i < n; ++i) {
    points.row(static_cast<Eigen::Index>(i)) =
        rule.model_y.interact_vector(histories[i]).transpose();
    const TreatmentSet set = apply_rule(rule, histories[i]);
    if (set.singleton()) {
      labels[i] = set.only();
      assigned[i] = true;
    } else {
      ambiguous.push_back(static_cast<int>(i));
    }
  }
  std::sort(ambiguous.begin(), ambiguous.end(), [&](int a, int b) {
    const double na = points.row(a).norm();
    const double nb = points.row(b).norm();
    if (na != nb) return na > nb;
    return a < b;
  });

  std::vector<Labeling> out;
  detail::BinaryEnumerator en{points, ambiguous, labels, assigned, out,
                              opts.labeling_cap};
  en.rows.resize(static_cast<Eigen::Index>(n), p2);
  for (std::size_t i = 0; i < n; ++i) {
    if (assigned[i]) en.push_row(static_cast<int>(i), labels[i]);
  }
  LazyLPResult root = margin_feasible_lazy(en.rows.topRows(en.n_rows));
  if (root.status == LPStatus::NumericalFailure) {
    throw NumericalFailure("LP failed on the forced stage-2 labels");
  }
  if (root.status == LPStatus::Feasible) {
    en.dfs(0, root.witness, root.working);
  }
  std::sort(out.begin(), out.end(),
            [](const Labeling& a, const Labeling& b) { return a.labels < b.labels; });
  return out;
}

/// psi_2Y / (2 delta_Y) + psi_2Z / (2 delta_Z): the score whose sign rule is
/// always compatible with the fitted set-valued rule, witnessing that the
/// feasible set is nonempty.
inline VectorXd canonical_feasible_rule(const FittedQModel& model_y,
                                        const FittedQModel& model_z,
                                        const Thresholds& thresholds) {
  if (model_y.psi.size() != model_z.psi.size()) {
    throw DimensionMismatch("interaction coefficient blocks differ in length");
  }
  return model_y.psi / (2.0 * thresholds.delta_y) +
         model_z.psi / (2.0 * thresholds.delta_z);
}

/// Labels induced by sgn(x_i' psi) with sgn(0) = +1; indices with an exactly
/// zero score are reported so margin-1 feasibility caveats can be surfaced.
struct InducedLabels {
  std::vector<int> labels;
  std::vector<int> zero_score_points;
};

inline InducedLabels induce_labels(const VectorXd& psi, const MatrixXd& points) {
  InducedLabels out;
  out.labels.reserve(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double score = points.row(i).dot(psi);
    if (score == 0.0) out.zero_score_points.push_back(static_cast<int>(i));
    out.labels.push_back(sign_pos(score));
  }
  return out;
}

/// Multi-treatment assignment over an action alphabet with one feature vector
/// phi(h_i, a) per subject and action.
struct MultiLabeling {
  std::vector<int> actions;
  VectorXd witness;
};

struct MultiFeatureTable {
  std::vector<int> alphabet;                  // ascending action codes
  std::vector<std::vector<VectorXd>> phi;     // phi[i][k] for alphabet[k]

  int index_of(int action) const {
    auto it = std::lower_bound(alphabet.begin(), alphabet.end(), action);
    if (it == alphabet.end() || *it != action) {
      throw Error("action " + std::to_string(action) + " not in alphabet");
    }
    return static_cast<int>(it - alphabet.begin());
  }
};

namespace detail {

struct MultiEnumerator {
  const MultiFeatureTable& feat;
  const std::vector<TreatmentSet>& compat;
  const std::vector<int>& order;  // subject visit order (forced first)
  std::vector<int>& actions;
  std::vector<MultiLabeling>& out;
  std::size_t cap;

  MatrixXd rows;
  Eigen::Index n_rows = 0;

  // Margin rows for subject i choosing action j: (phi(i,j) - phi(i,k))' psi >= 1.
  void push_subject(int i, int action) {
    const int j = feat.index_of(action);
    const auto& phis = feat.phi[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < phis.size(); ++k) {
      if (static_cast<int>(k) == j) continue;
      rows.row(n_rows++) = (phis[static_cast<std::size_t>(j)] - phis[k]).transpose();
    }
  }
  void pop_subject(int i) {
    n_rows -= static_cast<Eigen::Index>(feat.phi[static_cast<std::size_t>(i)].size() - 1);
  }

  bool witness_covers(int i, int action, const VectorXd& w) const {
    const int j = feat.index_of(action);
    const auto& phis = feat.phi[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < phis.size(); ++k) {
      if (static_cast<int>(k) == j) continue;
      if ((phis[static_cast<std::size_t>(j)] - phis[k]).dot(w) < 1.0 - kLPTolerance) {
        return false;
      }
    }
    return true;
  }

  void dfs(std::size_t depth, const VectorXd& witness,
           const std::vector<Eigen::Index>& working) {
    if (depth == order.size()) {
      if (out.size() >= cap) {
        throw BudgetExceeded("feasible assignment count exceeded cap of " +
                             std::to_string(cap));
      }
      out.push_back(MultiLabeling{actions, witness});
      return;
    }
    const int i = order[depth];
    const auto n_new =
        static_cast<Eigen::Index>(feat.phi[static_cast<std::size_t>(i)].size() - 1);
    for (int action : compat[static_cast<std::size_t>(i)].members()) {
      actions[static_cast<std::size_t>(i)] = action;
      push_subject(i, action);
      if (witness_covers(i, action, witness)) {
        dfs(depth + 1, witness, working);
      } else {
        std::vector<Eigen::Index> seed = working;
        for (Eigen::Index k = n_rows - n_new; k < n_rows; ++k) seed.push_back(k);
        LazyLPResult lp = margin_feasible_lazy(rows.topRows(n_rows), std::move(seed));
        if (lp.status == LPStatus::NumericalFailure) {
          throw NumericalFailure("LP failed during multi-treatment enumeration");
        }
        if (lp.status == LPStatus::Feasible) dfs(depth + 1, lp.witness, lp.working);
      }
      pop_subject(i);
    }
  }
};

}  // namespace detail

/// Appendix-style multi-treatment enumeration: every assignment drawing each
/// subject's action from its compatible set and realizable as the argmax of
/// phi(h, a)' psi with pairwise margin 1. Exact; sorted lexicographically.
inline std::vector<MultiLabeling> enumerate_feasible_multi(
    const std::vector<TreatmentSet>& compat, const MultiFeatureTable& feat,
    const EnumerationOptions& opts = {}) {
  const auto n = compat.size();
  if (feat.phi.size() != n) {
    throw DimensionMismatch("feature table size does not match subject count");
  }
  const auto K = feat.alphabet.size();
  if (K < 2) throw Error("multi enumeration needs at least two actions");
  Eigen::Index dim = 0;
  for (const auto& subject : feat.phi) {
    if (subject.size() != K) {
      throw DimensionMismatch("feature table must cover the whole alphabet");
    }
    for (const auto& v : subject) {
      if (dim == 0) dim = v.size();
      if (v.size() != dim) throw DimensionMismatch("phi vectors differ in length");
    }
  }

  std::vector<int> actions(n, 0);
  std::vector<int> forced, branching;
  for (std::size_t i = 0; i < n; ++i) {
    for (int a : compat[i].members()) feat.index_of(a);  // validates codes
    if (compat[i].singleton()) {
      actions[i] = compat[i].only();
      forced.push_back(static_cast<int>(i));
    } else {
      branching.push_back(static_cast<int>(i));
    }
  }
  // Most constrained (widest feature spread) first, for early pruning.
  auto spread = [&](int i) {
    double best = 0.0;
    const auto& phis = feat.phi[static_cast<std::size_t>(i)];
    for (std::size_t a = 0; a < phis.size(); ++a) {
      for (std::size_t b = a + 1; b < phis.size(); ++b) {
        best = std::max(best, (phis[a] - phis[b]).norm());
      }
    }
    return best;
  };
  std::sort(branching.begin(), branching.end(), [&](int a, int b) {
    const double sa = spread(a), sb = spread(b);
    if (sa != sb) return sa > sb;
    return a < b;
  });

  std::vector<MultiLabeling> out;
  detail::MultiEnumerator en{feat, compat, branching, actions, out, opts.labeling_cap};
  en.rows.resize(static_cast<Eigen::Index>(n * (K - 1)), dim);
  for (int i : forced) en.push_subject(i, actions[static_cast<std::size_t>(i)]);
  LazyLPResult root = margin_feasible_lazy(en.rows.topRows(en.n_rows));
  if (root.status == LPStatus::NumericalFailure) {
    throw NumericalFailure("LP failed on the forced multi-treatment block");
  }
  if (root.status == LPStatus::Feasible) {
    en.dfs(0, root.witness, root.working);
  }
  std::sort(out.begin(), out.end(), [](const MultiLabeling& a, const MultiLabeling& b) {
    return a.actions < b.actions;
  });
  return out;
}

}  // namespace svdtr
