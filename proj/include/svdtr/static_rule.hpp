#pragma once

#include "svdtr/core.hpp"
#include "svdtr/regression.hpp"

#include <map>
#include <utility>

namespace svdtr {

/// Region classification for a pair of estimated treatment effects.
///
/// Recommends {sgn(r_y)} when the Y effect is clinically meaningful and does
/// not come with a meaningful detriment in Z, {sgn(r_z)} symmetrically, and
/// both treatments otherwise. Inequalities are >= on the own-outcome
/// threshold and strictly > on the cross-outcome detriment.
inline Classification classify(double r_y, double r_z, const Thresholds& t) {
  const bool y_fires =
      std::abs(r_y) >= t.delta_y && sign_pos(r_y) * r_z > -t.delta_z;
  const bool z_fires =
      std::abs(r_z) >= t.delta_z && sign_pos(r_z) * r_y > -t.delta_y;
  // When both clauses fire their signs agree; the Y clause reports first.
  if (y_fires) {
    const int s = sign_pos(r_y);
    return {TreatmentSet{s}, s > 0 ? Region::OnlyPos : Region::OnlyNeg, Driver::Y};
  }
  if (z_fires) {
    const int s = sign_pos(r_z);
    return {TreatmentSet{s}, s > 0 ? Region::OnlyPos : Region::OnlyNeg, Driver::Z};
  }
  const bool null_box = std::abs(r_y) < t.delta_y && std::abs(r_z) < t.delta_z;
  return {TreatmentSet::both_binary(),
          null_box ? Region::BothNull : Region::BothConflict, Driver::None};
}

/// Plug-in set-valued rule backed by two fitted outcome models.
struct SetValuedRule {
  FittedQModel model_y;
  FittedQModel model_z;
  Thresholds thresholds;

  std::pair<double, double> contrasts(const VectorXd& h) const {
    return {contrast(model_y, h), contrast(model_z, h)};
  }
  Classification classify_history(const VectorXd& h) const {
    auto [ry, rz] = contrasts(h);
    return classify(ry, rz, thresholds);
  }
};

inline TreatmentSet apply_rule(const SetValuedRule& rule, const VectorXd& h) {
  return rule.classify_history(h).set;
}

inline SetValuedRule estimate_static_rule(const Dataset& ds, const ModelSpec& spec_y,
                                          const ModelSpec& spec_z,
                                          const Thresholds& thresholds) {
  return SetValuedRule{fit_q_model(ds, spec_y, Outcome::Y, 1),
                       fit_q_model(ds, spec_z, Outcome::Z, 1), thresholds};
}

/// Predicted (Y, Z) pair for one action at a fixed history.
struct OutcomePair {
  double y = 0.0;
  double z = 0.0;
};

/// Multi-treatment recommendation by pairwise elimination: an action is kept
/// iff no pairwise comparison excludes it. Never returns an empty set (the
/// action maximizing Q_Y/delta_y + Q_Z/delta_z survives every comparison).
inline TreatmentSet multi_recommend(const std::map<int, OutcomePair>& predictions,
                                    const Thresholds& thresholds) {
  if (predictions.size() < 2) {
    throw Error("multi_recommend needs at least two actions");
  }
  std::vector<int> kept;
  for (const auto& [j, qj] : predictions) {
    bool survives = true;
    for (const auto& [k, qk] : predictions) {
      if (k == j) continue;
      // Pairwise comparison with j playing the role of +1.
      const Classification c =
          classify(qj.y - qk.y, qj.z - qk.z, thresholds);
      if (!c.set.contains(1)) {
        survives = false;
        break;
      }
    }
    if (survives) kept.push_back(j);
  }
  return TreatmentSet(std::move(kept));
}

}  // namespace svdtr
