#include "svdtr/regression.hpp"

#include "test_support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace svdtr;
using namespace svdtr::testing;

namespace {

// Normal-equations oracle: independent of the QR path under test.
VectorXd normal_equations_ols(const MatrixXd& X, const VectorXd& y) {
  return (X.transpose() * X).ldlt().solve(X.transpose() * y);
}

Dataset one_stage_from(const MatrixXd& H, const std::vector<int>& actions,
                       const VectorXd& y, const VectorXd& z) {
  Dataset ds;
  ds.stage_count = 1;
  for (Eigen::Index i = 0; i < H.rows(); ++i) {
    TrajectoryOneStage t;
    t.h = H.row(i).transpose();
    t.a = actions[static_cast<std::size_t>(i)];
    t.y = y[i];
    t.z = z[i];
    ds.rows1.push_back(std::move(t));
  }
  return ds;
}

}  // namespace

TEST_CASE("fit_ols identity design returns the response") {
  MatrixXd X = MatrixXd::Identity(3, 3);
  VectorXd y(3);
  y << 1, 2, 3;
  VectorXd c = fit_ols(X, y);
  CHECK((c - y).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("fit_ols recovers noiseless coefficients") {
  CounterRng rng(11);
  MatrixXd X = random_matrix(rng, 40, 5, -2.0, 2.0);
  VectorXd truth = random_vector(rng, 5, -3.0, 3.0);
  VectorXd c = fit_ols(X, X * truth);
  CHECK((c - truth).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("fit_ols matches the normal-equations oracle") {
  CounterRng rng(12);
  MatrixXd X = random_matrix(rng, 50, 4, -1.0, 1.0);
  VectorXd y = random_vector(rng, 50, -1.0, 1.0);
  VectorXd c = fit_ols(X, y);
  VectorXd oracle = normal_equations_ols(X, y);
  CHECK((c - oracle).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("fit_ols residuals are orthogonal to the design") {
  CounterRng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    MatrixXd X = random_matrix(rng, 30, 4, -2.0, 2.0);
    VectorXd y = random_vector(rng, 30, -5.0, 5.0);
    VectorXd r = y - X * fit_ols(X, y);
    const double scale = X.norm() * (r.norm() + 1.0);
    CHECK((X.transpose() * r).lpNorm<Eigen::Infinity>() <= 1e-7 * scale);
  }
}

TEST_CASE("fit_ols detects rank deficiency from duplicated columns") {
  CounterRng rng(14);
  MatrixXd X = random_matrix(rng, 20, 3);
  X.col(2) = X.col(0);
  CHECK_THROWS_AS(fit_ols(X, random_vector(rng, 20)), RankDeficient);
}

TEST_CASE("fit_q_model rejects mismatched and undersized inputs") {
  CounterRng rng(22);
  Dataset ds;
  ds.stage_count = 1;
  for (int i = 0; i < 4; ++i) {
    TrajectoryOneStage t;
    t.h = random_vector(rng, 2);
    t.a = i % 2 == 0 ? 1 : -1;
    t.y = uniform(rng, -1.0, 1.0);
    ds.rows1.push_back(std::move(t));
  }
  ModelSpec spec;
  spec.main_cols = {0, 1};
  spec.interact_cols = {0, 1};
  CHECK_THROWS_AS(fit_q_model(ds, spec, random_vector(rng, 7), 1), DimensionMismatch);
  // Six coefficients against four rows.
  CHECK_THROWS_AS(fit_q_model(ds, spec, Outcome::Y, 1), InsufficientData);
}

TEST_CASE("cached projector agrees with fit_ols over many responses") {
  CounterRng rng(15);
  MatrixXd X = random_matrix(rng, 60, 5, -2.0, 2.0);
  CachedProjector proj(X);
  for (int rep = 0; rep < 1000; ++rep) {
    VectorXd y = random_vector(rng, 60, -10.0, 10.0);
    CHECK((proj.project(y) - fit_ols(X, y)).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
  CHECK(proj.project(VectorXd::Zero(60)).lpNorm<Eigen::Infinity>() <= 1e-12);
  // Projecting the design's own first column isolates that coefficient.
  VectorXd e = proj.project(X.col(0));
  VectorXd expect = VectorXd::Zero(5);
  expect[0] = 1.0;
  CHECK((e - expect).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("fit_q_model reproduces an exact interaction model") {
  // Q(h, a) = 1 + 2 h1 + a (0.5 - h1), six points, no noise.
  MatrixXd H(6, 1);
  H << -2, -1, 0, 1, 2, 3;
  std::vector<int> a = {1, -1, 1, -1, 1, -1};
  VectorXd y(6), z(6);
  for (int i = 0; i < 6; ++i) {
    y[i] = 1.0 + 2.0 * H(i, 0) + a[static_cast<std::size_t>(i)] * (0.5 - H(i, 0));
    z[i] = 0.0;
  }
  Dataset ds = one_stage_from(H, a, y, z);
  ModelSpec spec;
  spec.main_cols = {0};
  spec.interact_cols = {0};
  FittedQModel m = fit_q_model(ds, spec, Outcome::Y, 1);
  CHECK(m.beta[0] == Catch::Approx(1.0).margin(1e-8));
  CHECK(m.beta[1] == Catch::Approx(2.0).margin(1e-8));
  CHECK(m.psi[0] == Catch::Approx(0.5).margin(1e-8));
  CHECK(m.psi[1] == Catch::Approx(-1.0).margin(1e-8));

  SECTION("constant response zeroes the interaction block") {
    for (auto& row : ds.rows1) row.y = 7.0;
    FittedQModel flat = fit_q_model(ds, spec, Outcome::Y, 1);
    CHECK(flat.beta[0] == Catch::Approx(7.0).margin(1e-8));
    CHECK(flat.beta[1] == Catch::Approx(0.0).margin(1e-8));
    CHECK(flat.psi.lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("fit_q_model equals fit_ols on the hand-assembled design") {
  CounterRng rng(16);
  const int n = 200;
  MatrixXd H = random_matrix(rng, n, 3, -2.0, 2.0);
  std::vector<int> a;
  VectorXd y(n), z(n);
  for (int i = 0; i < n; ++i) {
    a.push_back(rng.next_sign());
    y[i] = uniform(rng, -5.0, 5.0);
    z[i] = 0.0;
  }
  Dataset ds = one_stage_from(H, a, y, z);
  ModelSpec spec;
  spec.main_cols = {0, 1};
  spec.interact_cols = {1, 2};

  // Oracle: assemble [1 | h0 | h1 | a | a*h1 | a*h2] by hand.
  MatrixXd X(n, 6);
  for (int i = 0; i < n; ++i) {
    const double ai = a[static_cast<std::size_t>(i)];
    X.row(i) << 1.0, H(i, 0), H(i, 1), ai, ai * H(i, 1), ai * H(i, 2);
  }
  VectorXd oracle = normal_equations_ols(X, y);
  FittedQModel m = fit_q_model(ds, spec, Outcome::Y, 1);
  VectorXd got(6);
  got << m.beta, m.psi;
  CHECK((got - oracle).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK(m.n_used == static_cast<std::size_t>(n));
  CHECK(m.n_dropped == 0);
}

TEST_CASE("fit_q_model drops rows with missing used fields") {
  MatrixXd H(8, 2);
  CounterRng rng(17);
  H = random_matrix(rng, 8, 2);
  std::vector<int> a = {1, -1, 1, -1, 1, -1, 1, -1};
  VectorXd y = random_vector(rng, 8);
  VectorXd z = VectorXd::Zero(8);
  Dataset ds = one_stage_from(H, a, y, z);
  ds.rows1[2].y = std::numeric_limits<double>::quiet_NaN();
  ds.rows1[5].h[0] = std::numeric_limits<double>::quiet_NaN();
  ModelSpec spec;
  spec.main_cols = {0};
  spec.interact_cols = {0};
  FittedQModel m = fit_q_model(ds, spec, Outcome::Y, 1);
  CHECK(m.n_used == 6);
  CHECK(m.n_dropped == 2);

  // A spec not touching column 0 keeps the row whose h[0] is missing.
  ModelSpec spec1;
  spec1.main_cols = {1};
  spec1.interact_cols = {1};
  CHECK(fit_q_model(ds, spec1, Outcome::Y, 1).n_dropped == 1);
}

TEST_CASE("contrast equals the two-point evaluation difference") {
  CounterRng rng(18);
  ModelSpec spec;
  spec.main_cols = {0, 1};
  spec.interact_cols = {0, 2};
  for (int rep = 0; rep < 50; ++rep) {
    FittedQModel m = make_model(random_vector(rng, 3), random_vector(rng, 3), spec);
    VectorXd h = random_vector(rng, 3, -4.0, 4.0);
    const double by_eval = m.predict(h, 1) - m.predict(h, -1);
    CHECK(contrast(m, h) == Catch::Approx(by_eval).margin(1e-12));
  }
  FittedQModel null_model =
      make_model(random_vector(rng, 3), VectorXd::Zero(3), spec);
  CHECK(contrast(null_model, random_vector(rng, 3)) == 0.0);

  ModelSpec tiny;
  tiny.main_cols = {};
  tiny.interact_cols = {0};
  tiny.intercept_main = true;
  tiny.intercept_interact = false;
  FittedQModel direct = make_model(VectorXd::Zero(1), VectorXd::Constant(1, 1.0), tiny);
  VectorXd h3 = VectorXd::Constant(1, 3.0);
  CHECK(contrast(direct, h3) == Catch::Approx(6.0));
}

TEST_CASE("contrast is linear in the interaction subvector") {
  CounterRng rng(19);
  ModelSpec spec = identity_spec(3);
  for (int rep = 0; rep < 100; ++rep) {
    FittedQModel m = make_model(random_vector(rng, 3), random_vector(rng, 3), spec);
    VectorXd h = random_vector(rng, 3);
    VectorXd g = random_vector(rng, 3);
    const double alpha = uniform(rng, -2.0, 2.0);
    const double beta = uniform(rng, -2.0, 2.0);
    const double lhs = contrast(m, alpha * h + beta * g);
    const double rhs = alpha * contrast(m, h) + beta * contrast(m, g);
    CHECK(lhs == Catch::Approx(rhs).margin(1e-10));
  }
}

TEST_CASE("slope_outcome on exact and degenerate inputs") {
  VectorXd times(13);
  for (int j = 0; j <= 12; ++j) times[j] = j;
  CHECK(slope_outcome(times, VectorXd::Constant(13, 4.2)) == Catch::Approx(0.0).margin(1e-12));
  VectorXd line = 2.0 * times + VectorXd::Constant(13, 5.0);
  CHECK(slope_outcome(times, line) == Catch::Approx(2.0).margin(1e-12));
  CHECK_THROWS_AS(slope_outcome(times.head(1), line.head(1)), InsufficientData);
  VectorXd same_times = VectorXd::Constant(4, 3.0);
  CHECK_THROWS_AS(slope_outcome(same_times, line.head(4)), InsufficientData);
}

TEST_CASE("slope_outcome with missing entries matches the closed-form oracle") {
  CounterRng rng(20);
  VectorXd times(13);
  for (int j = 0; j <= 12; ++j) times[j] = j;
  VectorXd values = random_vector(rng, 13, -3.0, 9.0);
  values[2] = values[6] = values[11] = std::numeric_limits<double>::quiet_NaN();

  // Oracle: explicit covariance / variance ratio on the observed pairs.
  double st = 0, sv = 0, n = 0;
  for (int j = 0; j <= 12; ++j) {
    if (!std::isnan(values[j])) {
      st += times[j];
      sv += values[j];
      n += 1;
    }
  }
  double cov = 0, var = 0;
  for (int j = 0; j <= 12; ++j) {
    if (!std::isnan(values[j])) {
      cov += (times[j] - st / n) * (values[j] - sv / n);
      var += (times[j] - st / n) * (times[j] - st / n);
    }
  }
  CHECK(slope_outcome(times, values) == Catch::Approx(cov / var).margin(1e-12));
}

TEST_CASE("slope_outcome is invariant to constant shifts") {
  CounterRng rng(21);
  VectorXd times = random_vector(rng, 9, 0.0, 12.0);
  VectorXd values = random_vector(rng, 9, -5.0, 5.0);
  const double base = slope_outcome(times, values);
  const double shifted = slope_outcome(times, values + VectorXd::Constant(9, 123.456));
  CHECK(base == Catch::Approx(shifted).margin(1e-12));
}
