#pragma once

#include "svdtr/core.hpp"
#include "svdtr/enumeration.hpp"
#include "svdtr/parallel.hpp"
#include "svdtr/regression.hpp"
#include "svdtr/static_rule.hpp"

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace svdtr {

/// Stage-1 models fitted against the pseudo-outcomes of one stage-2 labeling.
struct Stage1FitBundle {
  Labeling labeling;
  FittedQModel model_1y;
  FittedQModel model_1z;
};

/// Full two-stage SVDTR estimate: the stage-2 rule plus one stage-1 fit per
/// feasible stage-2 labeling.
struct TwoStageRule {
  SetValuedRule stage2;
  std::vector<Stage1FitBundle> bundles;
  Thresholds thresholds;
};

/// Fitted stage-2 value at a2 = label, per subject:
/// y~_i = m(h2_i)' beta_2Y + l_i g(h2_i)' psi_2Y, likewise for Z.
inline std::pair<VectorXd, VectorXd> pseudo_outcomes(const FittedQModel& model_2y,
                                                     const FittedQModel& model_2z,
                                                     const std::vector<int>& labels,
                                                     const std::vector<VectorXd>& h2s) {
  if (labels.size() != h2s.size()) {
    throw DimensionMismatch("labeling length does not match stage-2 histories");
  }
  const auto n = static_cast<Eigen::Index>(h2s.size());
  VectorXd ytilde(n), ztilde(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    ytilde[i] = model_2y.predict(h2s[idx], labels[idx]);
    ztilde[i] = model_2z.predict(h2s[idx], labels[idx]);
  }
  return {std::move(ytilde), std::move(ztilde)};
}

/// Plain (uncached) stage-1 fit for one labeling; the reference path the
/// cached fitter is tested against.
inline Stage1FitBundle estimate_stage1(const Dataset& ds, const Labeling& labeling,
                                       const ModelSpec& spec_1y, const ModelSpec& spec_1z,
                                       const FittedQModel& model_2y,
                                       const FittedQModel& model_2z) {
  std::vector<VectorXd> h2s;
  h2s.reserve(ds.rows2.size());
  for (const auto& r : ds.rows2) h2s.push_back(r.h2);
  auto [ytilde, ztilde] = pseudo_outcomes(model_2y, model_2z, labeling.labels, h2s);
  Stage1FitBundle bundle;
  bundle.labeling = labeling;
  bundle.model_1y = fit_q_model(ds, spec_1y, ytilde, 1);
  bundle.model_1z = fit_q_model(ds, spec_1z, ztilde, 1);
  return bundle;
}

/// Refits the stage-1 models for many labelings against a fixed (H1, A1)
/// design: one cached factorization per outcome plus precomputed stage-2
/// score vectors make each labeling two projections.
class Stage1Fitter {
 public:
  Stage1Fitter(const Dataset& ds, const ModelSpec& spec_1y, const ModelSpec& spec_1z,
               const FittedQModel& model_2y, const FittedQModel& model_2z)
      : spec_1y_(spec_1y), spec_1z_(spec_1z) {
    if (ds.stage_count != 2) throw DimensionMismatch("two-stage dataset required");
    spec_1y.check_resolvable(ds.h1_dim());
    spec_1z.check_resolvable(ds.h1_dim());
    const auto n = ds.rows2.size();
    std::vector<const VectorXd*> h1s;
    std::vector<int> a1s;
    h1s.reserve(n);
    a1s.reserve(n);
    main_y_.resize(static_cast<Eigen::Index>(n));
    gain_y_.resize(static_cast<Eigen::Index>(n));
    main_z_.resize(static_cast<Eigen::Index>(n));
    gain_z_.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = ds.rows2[i];
      h1s.push_back(&r.h1);
      a1s.push_back(r.a1);
      const auto ei = static_cast<Eigen::Index>(i);
      main_y_[ei] = model_2y.main_score(r.h2);
      gain_y_[ei] = model_2y.interact_score(r.h2);
      main_z_[ei] = model_2z.main_score(r.h2);
      gain_z_[ei] = model_2z.interact_score(r.h2);
    }
    design_y_ = build_design(h1s, a1s, spec_1y);
    design_z_ = build_design(h1s, a1s, spec_1z);
    // Complete-case input required: the cached design is shared by every
    // labeling, so rows cannot be dropped per fit the way fit_q_model does.
    if (!design_y_.allFinite() || !design_z_.allFinite() || !main_y_.allFinite() ||
        !gain_y_.allFinite() || !main_z_.allFinite() || !gain_z_.allFinite()) {
      throw InsufficientData(
          "stage-1 refits need complete cases; drop rows with missing values first");
    }
    proj_y_.emplace(design_y_);
    proj_z_.emplace(design_z_);
  }

  Stage1FitBundle fit(const Labeling& labeling) const {
    const auto n = static_cast<Eigen::Index>(labeling.labels.size());
    if (n != main_y_.size()) {
      throw DimensionMismatch("labeling length does not match cached design");
    }
    VectorXd lab(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      lab[i] = static_cast<double>(labeling.labels[static_cast<std::size_t>(i)]);
    }
    const VectorXd ytilde = main_y_ + lab.cwiseProduct(gain_y_);
    const VectorXd ztilde = main_z_ + lab.cwiseProduct(gain_z_);

    Stage1FitBundle bundle;
    bundle.labeling = labeling;
    bundle.model_1y = finish(spec_1y_, design_y_, proj_y_->project(ytilde), ytilde);
    bundle.model_1z = finish(spec_1z_, design_z_, proj_z_->project(ztilde), ztilde);
    return bundle;
  }

 private:
  static FittedQModel finish(const ModelSpec& spec, const MatrixXd& design,
                             const VectorXd& coef, const VectorXd& response) {
    FittedQModel m;
    m.spec = spec;
    m.beta = coef.head(spec.main_dim());
    m.psi = coef.tail(spec.interact_dim());
    m.n_used = static_cast<std::size_t>(design.rows());
    m.n_dropped = 0;
    VectorXd residuals = response - design * coef;
    m.residual_summary =
        summarize_residuals(residuals, response, static_cast<int>(coef.size()));
    return m;
  }

  ModelSpec spec_1y_;
  ModelSpec spec_1z_;
  MatrixXd design_y_;
  MatrixXd design_z_;
  std::optional<CachedProjector> proj_y_;
  std::optional<CachedProjector> proj_z_;
  VectorXd main_y_, gain_y_, main_z_, gain_z_;
};

struct DynamicEstimateOptions {
  EnumerationOptions enumeration;
  int threads = 1;
};

/// Stage-2 fit, feasible-labeling enumeration, and one stage-1 bundle per
/// labeling. The bundle list is never empty: the canonical compatible rule
/// guarantees at least one feasible labeling when the forced block separates.
inline TwoStageRule estimate_dynamic_rule(const Dataset& ds, const ModelSpec& spec_1y,
                                          const ModelSpec& spec_1z, const ModelSpec& spec_2y,
                                          const ModelSpec& spec_2z,
                                          const Thresholds& thresholds,
                                          const DynamicEstimateOptions& opts = {}) {
  if (ds.stage_count != 2) throw DimensionMismatch("two-stage dataset required");
  TwoStageRule rule;
  rule.thresholds = thresholds;
  rule.stage2 = SetValuedRule{fit_q_model(ds, spec_2y, Outcome::Y, 2),
                              fit_q_model(ds, spec_2z, Outcome::Z, 2), thresholds};
  std::vector<VectorXd> h2s;
  h2s.reserve(ds.rows2.size());
  for (const auto& r : ds.rows2) h2s.push_back(r.h2);
  std::vector<Labeling> labelings =
      enumerate_feasible(rule.stage2, h2s, opts.enumeration);

  Stage1Fitter fitter(ds, spec_1y, spec_1z, rule.stage2.model_y, rule.stage2.model_z);
  rule.bundles.resize(labelings.size());
  parallel_for(labelings.size(), opts.threads, [&](std::size_t i) {
    rule.bundles[i] = fitter.fit(labelings[i]);
  });
  return rule;
}

inline TreatmentSet stage1_rule_for_tau(const Stage1FitBundle& bundle, const VectorXd& h1,
                                        const Thresholds& thresholds) {
  return classify(contrast(bundle.model_1y, h1), contrast(bundle.model_1z, h1), thresholds)
      .set;
}

struct UnionTraceRow {
  int bundle_index = 0;
  double r1y = 0.0;
  double r1z = 0.0;
  TreatmentSet set = TreatmentSet::both_binary();
};

struct UnionResult {
  TreatmentSet set = TreatmentSet::both_binary();
  Region region = Region::BothNull;
  std::vector<UnionTraceRow> trace;
};

/// Union of the per-labeling stage-1 rules at h1, with the per-bundle
/// contrast points recorded for trace exports. Bundles with identical
/// interaction coefficients (within 1e-12 componentwise) are classified once.
inline UnionResult union_rule(const TwoStageRule& rule, const VectorXd& h1) {
  if (rule.bundles.empty()) throw Error("two-stage rule has no bundles");

  // Quantized key for the coefficient-pair dedup.
  auto key_of = [](const Stage1FitBundle& b) {
    std::vector<std::int64_t> key;
    key.reserve(static_cast<std::size_t>(b.model_1y.psi.size() + b.model_1z.psi.size()));
    auto push = [&key](const VectorXd& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        key.push_back(std::llround(v[i] * 1e12));
      }
    };
    push(b.model_1y.psi);
    push(b.model_1z.psi);
    return key;
  };

  UnionResult out;
  out.trace.reserve(rule.bundles.size());
  std::map<std::vector<std::int64_t>, Classification> cache;
  bool first = true;
  bool any_conflict = false, any_null = false, mixed_singletons = false;
  int first_singleton = 0;
  for (std::size_t i = 0; i < rule.bundles.size(); ++i) {
    const auto& bundle = rule.bundles[i];
    const double r1y = contrast(bundle.model_1y, h1);
    const double r1z = contrast(bundle.model_1z, h1);
    auto [it, inserted] = cache.try_emplace(key_of(bundle));
    if (inserted) it->second = classify(r1y, r1z, rule.thresholds);
    const Classification& c = it->second;
    out.trace.push_back(UnionTraceRow{static_cast<int>(i), r1y, r1z, c.set});
    if (first) {
      out.set = c.set;
      first = false;
    } else {
      out.set.unite(c.set);
    }
    if (c.region == Region::BothConflict) any_conflict = true;
    if (c.region == Region::BothNull) any_null = true;
    if (c.set.singleton()) {
      if (first_singleton == 0) {
        first_singleton = c.set.only();
      } else if (first_singleton != c.set.only()) {
        mixed_singletons = true;
      }
    }
  }
  if (out.set.singleton()) {
    out.region = out.set.only() > 0 ? Region::OnlyPos : Region::OnlyNeg;
  } else if (any_conflict) {
    out.region = Region::BothConflict;
  } else if (mixed_singletons) {
    out.region = Region::BothMixed;
  } else if (any_null) {
    out.region = Region::BothNull;
  } else {
    out.region = Region::BothMixed;
  }
  return out;
}

/// Classic single-outcome Q-learning on Y: stage-2 fit, stage-1 fit on the
/// predicted maximum, argmax rules with ties broken toward +1.
struct QLearningResult {
  FittedQModel model_1;
  FittedQModel model_2;
  VectorXd ytilde;

  int pi2(const VectorXd& h2) const { return sign_pos(contrast(model_2, h2)); }
  int pi1(const VectorXd& h1) const { return sign_pos(contrast(model_1, h1)); }
};

inline QLearningResult qlearning_single_outcome(const Dataset& ds, const ModelSpec& spec_1,
                                                const ModelSpec& spec_2) {
  if (ds.stage_count != 2) throw DimensionMismatch("two-stage dataset required");
  QLearningResult out;
  out.model_2 = fit_q_model(ds, spec_2, Outcome::Y, 2);
  const auto n = static_cast<Eigen::Index>(ds.rows2.size());
  out.ytilde.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& h2 = ds.rows2[static_cast<std::size_t>(i)].h2;
    // max over a2 of m(h2)'beta + a2 g(h2)'psi
    out.ytilde[i] = out.model_2.main_score(h2) + std::abs(out.model_2.interact_score(h2));
  }
  out.model_1 = fit_q_model(ds, spec_1, out.ytilde, 1);
  return out;
}

}  // namespace svdtr
