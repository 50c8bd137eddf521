#pragma once

#include "svdtr/core.hpp"
#include "svdtr/parallel.hpp"
#include "svdtr/static_rule.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace svdtr {

/// Counter-based generator (splitmix64 stream): O(1) jump-ahead and cheap
/// per-replicate substreams, so Monte Carlo runs are reproducible for any
/// worker layout.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  CounterRng substream(std::uint64_t stream) const {
    return CounterRng(mix(seed_ + (stream + 1) * kGamma));
  }

  std::uint64_t next_u64() { return mix(seed_ + (++counter_) * kGamma); }

  // Uniform on (0,1), never exactly 0 or 1.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Box-Muller pair; fixed draw consumption keeps substreams aligned.
  std::pair<double, double> next_normal_pair() {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  int next_sign() { return next_uniform() < 0.5 ? -1 : 1; }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Generative model class: H bivariate normal with unit variances and
/// correlation rho, A a fair +-1 coin, and outcomes
/// Y = A (psi_1 + psi_2 H1 + psi_3 H2 + psi_4 H1 H2), Z analogous.
struct GenModelParams {
  Eigen::Vector4d psi_y = Eigen::Vector4d::Zero();
  Eigen::Vector4d psi_z = Eigen::Vector4d::Zero();
  double rho = 0.0;
  Thresholds thresholds{1.0, 1.0};

  void check() const {
    if (!(std::abs(rho) < 1.0)) {
      throw ConfigError("correlation must satisfy |rho| < 1");
    }
  }
};

inline Eigen::Vector4d interaction_basis(double h1, double h2) {
  return Eigen::Vector4d(1.0, h1, h2, h1 * h2);
}

inline VectorXd draw_history(const GenModelParams& params, CounterRng& rng) {
  auto [n1, n2] = rng.next_normal_pair();
  VectorXd h(2);
  h[0] = n1;
  h[1] = params.rho * n1 + std::sqrt(1.0 - params.rho * params.rho) * n2;
  return h;
}

inline TrajectoryOneStage gen_trajectory(const GenModelParams& params, CounterRng& rng) {
  TrajectoryOneStage t;
  t.h = draw_history(params, rng);
  t.a = rng.next_sign();
  const Eigen::Vector4d basis = interaction_basis(t.h[0], t.h[1]);
  t.y = t.a * params.psi_y.dot(basis);
  t.z = t.a * params.psi_z.dot(basis);
  return t;
}

/// True treatment effects r_Y(h), r_Z(h) = E[.|h,1] - E[.|h,-1].
inline std::pair<double, double> true_contrasts(const GenModelParams& params,
                                                const VectorXd& h) {
  const Eigen::Vector4d basis = interaction_basis(h[0], h[1]);
  return {2.0 * params.psi_y.dot(basis), 2.0 * params.psi_z.dot(basis)};
}

inline double true_mean_outcome_y(const GenModelParams& params, const VectorXd& h, int a) {
  return a * params.psi_y.dot(interaction_basis(h[0], h[1]));
}
inline double true_mean_outcome_z(const GenModelParams& params, const VectorXd& h, int a) {
  return a * params.psi_z.dot(interaction_basis(h[0], h[1]));
}

inline double composite_value(const GenModelParams& params, const VectorXd& h, int a,
                              double delta) {
  return delta * true_mean_outcome_y(params, h, a) +
         (1.0 - delta) * true_mean_outcome_z(params, h, a);
}

struct ClassProbs {
  double uniq = 0.0;
  double null_ = 0.0;
  double opst = 0.0;
};

namespace detail {

enum class EffectClass { Uniq, Null, Opst };

// The three displayed events cover the plane; the Uniq clauses use >= on the
// cross term, so boundary draws land in Uniq.
inline EffectClass classify_effects(double r_y, double r_z, const Thresholds& t) {
  const bool uniq =
      (std::abs(r_y) >= t.delta_y && sign_pos(r_y) * r_z >= -t.delta_z) ||
      (std::abs(r_z) >= t.delta_z && sign_pos(r_z) * r_y >= -t.delta_y);
  if (uniq) return EffectClass::Uniq;
  if (std::abs(r_y) < t.delta_y && std::abs(r_z) < t.delta_z) return EffectClass::Null;
  return EffectClass::Opst;
}

}  // namespace detail

/// Monte Carlo estimates of (Uniq, Null, Opst); sums to one exactly because
/// every draw is assigned to exactly one class.
inline ClassProbs class_probs(const GenModelParams& params, std::size_t n_mc,
                              const CounterRng& base, int threads = 1) {
  params.check();
  constexpr std::size_t kBlock = 4096;
  const std::size_t n_blocks = (n_mc + kBlock - 1) / kBlock;
  std::vector<std::uint64_t> uniq(n_blocks, 0), nul(n_blocks, 0), opst(n_blocks, 0);
  parallel_for(n_blocks, threads, [&](std::size_t b) {
    const std::size_t lo = b * kBlock;
    const std::size_t hi = std::min(n_mc, lo + kBlock);
    for (std::size_t i = lo; i < hi; ++i) {
      CounterRng rng = base.substream(i);
      const VectorXd h = draw_history(params, rng);
      auto [ry, rz] = true_contrasts(params, h);
      switch (detail::classify_effects(ry, rz, params.thresholds)) {
        case detail::EffectClass::Uniq: ++uniq[b]; break;
        case detail::EffectClass::Null: ++nul[b]; break;
        case detail::EffectClass::Opst: ++opst[b]; break;
      }
    }
  });
  std::uint64_t cu = 0, cn = 0, co = 0;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    cu += uniq[b];
    cn += nul[b];
    co += opst[b];
  }
  const double n = static_cast<double>(n_mc);
  return ClassProbs{cu / n, cn / n, co / n};
}

struct PolicySpec {
  enum class Kind { Composite, OptCompatible, OptUnrestricted };
  Kind kind = Kind::Composite;
  double param = 0.5;  // delta for Composite, q otherwise

  static PolicySpec composite(double delta) { return {Kind::Composite, delta}; }
  static PolicySpec opt_compatible(double q) { return {Kind::OptCompatible, q}; }
  static PolicySpec opt_unrestricted(double q) { return {Kind::OptUnrestricted, q}; }

  std::string name() const {
    char buf[64];
    switch (kind) {
      case Kind::Composite:
        std::snprintf(buf, sizeof(buf), "composite_d%g", param);
        break;
      case Kind::OptCompatible:
        std::snprintf(buf, sizeof(buf), "opt_compatible_q%g", param);
        break;
      case Kind::OptUnrestricted:
        std::snprintf(buf, sizeof(buf), "opt_unrestricted_q%g", param);
        break;
    }
    return buf;
  }

  void check() const {
    if (param < 0.0 || param > 1.0) {
      throw ConfigError("policy parameter must lie in [0,1]");
    }
  }
};

namespace detail {

inline int best_in(const GenModelParams& params, const VectorXd& h, double delta,
                   const std::vector<int>& actions) {
  int best = actions.front();
  double best_v = composite_value(params, h, best, delta);
  for (std::size_t i = 1; i < actions.size(); ++i) {
    const double v = composite_value(params, h, actions[i], delta);
    if (v > best_v || (v == best_v && actions[i] > best)) {  // tie -> +1
      best = actions[i];
      best_v = v;
    }
  }
  return best;
}

inline int worst_in(const GenModelParams& params, const VectorXd& h, double delta,
                    const std::vector<int>& actions) {
  int worst = actions.front();
  double worst_v = composite_value(params, h, worst, delta);
  for (std::size_t i = 1; i < actions.size(); ++i) {
    const double v = composite_value(params, h, actions[i], delta);
    if (v < worst_v || (v == worst_v && actions[i] < worst)) {  // tie -> -1
      worst = actions[i];
      worst_v = v;
    }
  }
  return worst;
}

}  // namespace detail

/// Action taken by a policy at history h given the set-valued recommendation.
/// The q-policies judge best/worst by the true-preference composite delta*;
/// the coin is consumed unconditionally so common random numbers line up
/// across policies.
inline int policy_action(const PolicySpec& policy, double delta_star,
                         const GenModelParams& params, const VectorXd& h,
                         const TreatmentSet& rule_output, CounterRng& rng) {
  static const std::vector<int> kAll = {-1, 1};
  switch (policy.kind) {
    case PolicySpec::Kind::Composite:
      return detail::best_in(params, h, policy.param, kAll);
    case PolicySpec::Kind::OptCompatible: {
      const double u = rng.next_uniform();
      const auto& pool = rule_output.members();
      return u < policy.param ? detail::best_in(params, h, delta_star, pool)
                              : detail::worst_in(params, h, delta_star, pool);
    }
    case PolicySpec::Kind::OptUnrestricted: {
      const double u = rng.next_uniform();
      return u < policy.param ? detail::best_in(params, h, delta_star, kAll)
                              : detail::worst_in(params, h, delta_star, kAll);
    }
  }
  throw Error("unknown policy kind");
}

struct RegretEstimate {
  double mean = 0.0;  // nonpositive: policy value minus pointwise max
  double se = 0.0;
  double regret_abs() const { return std::abs(mean); }
};

namespace detail {

struct KahanSum {
  double sum = 0.0;
  double c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

}  // namespace detail

/// Monte Carlo regret of a policy at true preference delta*. The inner
/// conditional expectations are closed-form in the generative model; only
/// the expectation over H is sampled. Fixed-size blocks are reduced in index
/// order, so results are bitwise identical for every thread count.
inline RegretEstimate regret(const PolicySpec& policy, double delta_star,
                             const GenModelParams& params, std::size_t n_mc,
                             const CounterRng& base, int threads = 1) {
  params.check();
  policy.check();
  constexpr std::size_t kBlock = 4096;
  const std::size_t n_blocks = (n_mc + kBlock - 1) / kBlock;
  std::vector<double> block_sum(n_blocks, 0.0), block_sumsq(n_blocks, 0.0);
  parallel_for(n_blocks, threads, [&](std::size_t b) {
    detail::KahanSum s, s2;
    const std::size_t lo = b * kBlock;
    const std::size_t hi = std::min(n_mc, lo + kBlock);
    for (std::size_t i = lo; i < hi; ++i) {
      CounterRng rng = base.substream(i);
      const VectorXd h = draw_history(params, rng);
      auto [ry, rz] = true_contrasts(params, h);
      const TreatmentSet recommended = classify(ry, rz, params.thresholds).set;
      const int act = policy_action(policy, delta_star, params, h, recommended, rng);
      const double value = composite_value(params, h, act, delta_star);
      const double best = std::max(composite_value(params, h, 1, delta_star),
                                   composite_value(params, h, -1, delta_star));
      const double loss = value - best;
      s.add(loss);
      s2.add(loss * loss);
    }
    block_sum[b] = s.sum;
    block_sumsq[b] = s2.sum;
  });
  detail::KahanSum total, total_sq;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    total.add(block_sum[b]);
    total_sq.add(block_sumsq[b]);
  }
  const double n = static_cast<double>(n_mc);
  RegretEstimate est;
  est.mean = total.sum / n;
  if (n_mc > 1) {
    const double var = std::max(0.0, (total_sq.sum - n * est.mean * est.mean) / (n - 1.0));
    est.se = std::sqrt(var / n);
  }
  return est;
}

struct SweepRow {
  double delta_star = 0.0;
  std::string policy;
  RegretEstimate estimate;
};

/// Regret-versus-preference table for the requested policies plus the
/// compatible envelope (the always-best and always-worst compatible picks).
inline std::vector<SweepRow> preference_sweep(const GenModelParams& params,
                                              const std::vector<PolicySpec>& policies,
                                              const std::vector<double>& delta_grid,
                                              std::size_t n_mc, const CounterRng& base,
                                              int threads = 1) {
  if (delta_grid.empty()) throw ConfigError("preference grid is empty");
  std::vector<std::pair<std::string, PolicySpec>> all;
  for (const auto& p : policies) all.emplace_back(p.name(), p);
  all.emplace_back("compatible_best", PolicySpec::opt_compatible(1.0));
  all.emplace_back("compatible_worst", PolicySpec::opt_compatible(0.0));

  std::vector<SweepRow> rows;
  rows.reserve(delta_grid.size() * all.size());
  for (double delta_star : delta_grid) {
    for (const auto& [name, policy] : all) {
      SweepRow row;
      row.delta_star = delta_star;
      row.policy = name;
      row.estimate = regret(policy, delta_star, params, n_mc, base, threads);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace svdtr
