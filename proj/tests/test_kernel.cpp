#include <doctest.h>

#include <cmath>

#include "gpchan/checks.hpp"
#include "gpchan/kernel.hpp"
#include "gpchan/learn.hpp"
#include "gpchan/linalg.hpp"
#include "gpchan/rng.hpp"

using namespace gpchan;

namespace {

HyperParams simple_hp(int q_rx = 2, int q_tx = 2) {
  HyperParams hp;
  hp.amplitude = 1.3;
  hp.rx.resize(q_rx);
  hp.tx.resize(q_tx);
  for (int q = 0; q < q_rx; ++q)
    hp.rx[q] = {0.6 + 0.2 * q, 0.11 * (q + 1), -0.07 * (q + 1), 0.004 + 0.002 * q, 0.009};
  for (int q = 0; q < q_tx; ++q)
    hp.tx[q] = {0.5 + 0.3 * q, -0.09 * (q + 1), 0.13 * (q + 1), 0.006, 0.003 + 0.001 * q};
  hp.icm = {1.1, 0.4, 0.8};
  hp.noise_var = 0.25;
  return hp;
}

}  // namespace

TEST_CASE("side_eval: zero lag sums the weights, even in the lag") {
  const auto comps = simple_hp().rx;
  double wsum = 0.0;
  for (const auto& c : comps) wsum += c.weight;
  CHECK(side_eval(comps, {0, 0}) == doctest::Approx(wsum).epsilon(1e-15));
  for (int dy = -3; dy <= 3; ++dy)
    for (int dz = -3; dz <= 3; ++dz)
      CHECK(side_eval(comps, {dy, dz}) == doctest::Approx(side_eval(comps, {-dy, -dz})));
}

TEST_CASE("side_eval: single component closed form") {
  std::vector<SmComponent> comps(1);
  comps[0] = {1.0, 0.25, 0.0, 6e-4, 6e-4};
  const double expected = std::cos(M_PI) * std::exp(-4.0 * M_PI * M_PI * 6e-4 * 4.0);
  CHECK(side_eval(comps, {2, 0}) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("base_eval: zero lag, symmetry, shift invariance") {
  const HyperParams hp = simple_hp();
  const UraGeometry rx{4, 4}, tx{4, 4};
  double wr = 0.0, wt = 0.0;
  for (const auto& c : hp.rx) wr += c.weight;
  for (const auto& c : hp.tx) wt += c.weight;

  CHECK(base_eval(hp, {3, 5}, {3, 5}, rx, tx) ==
        doctest::Approx(hp.amplitude * wr * wt).epsilon(1e-14));
  CHECK(base_eval(hp, {1, 7}, {4, 2}, rx, tx) ==
        doctest::Approx(base_eval(hp, {4, 2}, {1, 7}, rx, tx)).epsilon(1e-15));
  // common shift by one y step on both sides
  CHECK(base_eval(hp, {1, 1}, {2, 5}, rx, tx) ==
        doctest::Approx(base_eval(hp, {2, 2}, {3, 6}, rx, tx)).epsilon(1e-14));
}

TEST_CASE("icm_coupling: closed forms") {
  CHECK((icm_coupling({1, 0, 1}) - Eigen::Matrix2d::Identity()).norm() == 0.0);
  Eigen::Matrix2d b1 = icm_coupling({2, 0, 1});
  CHECK(b1(0, 0) == 4.0);
  CHECK(b1(0, 1) == 0.0);
  CHECK(b1(1, 1) == 1.0);
  Eigen::Matrix2d b2 = icm_coupling({1, 1, 1});
  CHECK(b2(0, 0) == 1.0);
  CHECK(b2(0, 1) == 1.0);
  CHECK(b2(1, 1) == 2.0);
}

TEST_CASE("assemble_gram: one point, exact symmetry") {
  const HyperParams hp = simple_hp();
  const UraGeometry rx{2, 2}, tx{2, 2};
  const std::vector<IndexPair> one{{2, 3}};
  const Eigen::MatrixXd k1 = assemble_gram(hp, one, one, rx, tx);
  double wr = 0.0, wt = 0.0;
  for (const auto& c : hp.rx) wr += c.weight;
  for (const auto& c : hp.tx) wt += c.weight;
  CHECK(k1(0, 0) == doctest::Approx(hp.amplitude * wr * wt).epsilon(1e-14));

  const auto grid = training_grid(4, equispaced_subset(4, 3));
  const Eigen::MatrixXd k = assemble_gram(hp, grid, grid, rx, tx);
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);  // bit-exact symmetry
  CHECK(k(2, 5) == doctest::Approx(base_eval(hp, grid[2], grid[5], rx, tx)).epsilon(1e-14));
}

TEST_CASE("assemble_gram: Hadamard assembly equals the Kronecker form on a Cartesian grid") {
  const HyperParams hp = simple_hp();
  const UraGeometry rx{3, 1}, tx{2, 1};
  const ActiveSet omega({1, 2}, 2);
  const auto grid = training_grid(3, omega);  // 3 x 2 Cartesian, receive fastest
  const Eigen::MatrixXd had = assemble_gram(hp, grid, grid, rx, tx);

  Eigen::MatrixXd kr(3, 3), kt(2, 2);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      kr(a, b) = side_eval(hp.rx, coords_of(a + 1, rx) - coords_of(b + 1, rx));
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      kt(a, b) = side_eval(hp.tx, coords_of(a + 1, tx) - coords_of(b + 1, tx));
  const Eigen::MatrixXd kron = hp.amplitude * kronecker(kt, kr);
  CHECK((had - kron).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("lift_icm: identity coupling decouples tasks; closed-form eigenvalues") {
  Eigen::MatrixXd base(2, 2);
  base << 2, 1, 1, 2;
  const Eigen::MatrixXd lifted = lift_icm(base, Eigen::Matrix2d::Identity());
  CHECK((lifted.topLeftCorner(2, 2) - base).norm() == 0.0);
  CHECK(lifted.topRightCorner(2, 2).norm() == 0.0);
  CHECK((lifted.bottomRightCorner(2, 2) - base).norm() == 0.0);

  Eigen::MatrixXd c = lifted;
  c.diagonal().array() += 0.5;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  const Eigen::VectorXd ev = es.eigenvalues();
  CHECK(ev[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(ev[2] == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(ev[3] == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("lift_icm: PSD is preserved without noise") {
  RngStream rng(21);
  for (int s = 0; s < 20; ++s) {
    const HyperParams hp = draw_hyperparams(rng);
    const auto grid = training_grid(4, equispaced_subset(4, 2));
    const UraGeometry g{2, 2};
    const Eigen::MatrixXd base = assemble_gram(hp, grid, grid, g, g);
    const Eigen::MatrixXd lifted = lift_icm(base, icm_coupling(hp.icm));
    CHECK(min_eigenvalue(lifted) >= -1e-8 * lifted.trace());
  }
}

TEST_CASE("marginal variance identity on the lifted diagonal") {
  const HyperParams hp = simple_hp();
  const UraGeometry rx{4, 2}, tx{2, 4};
  const auto grid = training_grid(rx.total(), equispaced_subset(tx.total(), 4));
  const GramBundle bundle = build_gram_bundle(hp, grid, rx, tx);
  double wr = 0.0, wt = 0.0;
  for (const auto& c : hp.rx) wr += c.weight;
  for (const auto& c : hp.tx) wt += c.weight;
  const Eigen::Matrix2d b = icm_coupling(hp.icm);
  const Eigen::Index p = bundle.base.rows();
  for (Eigen::Index i = 0; i < p; ++i) {
    CHECK(bundle.lifted(i, i) ==
          doctest::Approx(hp.amplitude * wr * wt * b(0, 0)).epsilon(1e-12));
    CHECK(bundle.lifted(p + i, p + i) ==
          doctest::Approx(hp.amplitude * wr * wt * b(1, 1)).epsilon(1e-12));
  }
}

TEST_CASE("gram_derivatives: log-amplitude derivative is the lifted base Gram") {
  const HyperParams hp = simple_hp();
  const UraGeometry rx{2, 2}, tx{2, 2};
  const auto grid = training_grid(4, equispaced_subset(4, 2));
  const GramDerivatives derivs(hp, grid, rx, tx);
  Eigen::MatrixXd d;
  derivs.derivative(0, d);
  const Eigen::MatrixXd expected = lift_icm(derivs.base(), derivs.coupling());
  CHECK((d - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gram_derivatives: single-component log-weight derivative equals the base Gram") {
  HyperParams hp = simple_hp(1, 1);
  const UraGeometry rx{2, 2}, tx{2, 2};
  const auto grid = training_grid(4, equispaced_subset(4, 2));
  const GramDerivatives derivs(hp, grid, rx, tx);
  Eigen::MatrixXd d;
  derivs.base_derivative(1, d);  // the only rx component's log-weight
  CHECK((d - derivs.base()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("gram_derivatives: every coordinate matches a central difference of C_theta") {
  // Matrix-valued finite-difference oracle over the raw coordinates.
  RngStream rng(77);
  const UraGeometry rx{2, 2}, tx{2, 2};
  const auto grid = training_grid(4, equispaced_subset(4, 2));
  ReparamSpec spec;
  spec.learn_noise = true;

  for (int s = 0; s < 3; ++s) {
    const HyperParams hp = draw_hyperparams(rng);
    const Eigen::VectorXd raw = reparam_inverse(hp, spec);
    const GramDerivatives derivs(hp, grid, rx, tx);
    Eigen::MatrixXd analytic;
    for (int i = 0; i < derivs.count(); ++i) {
      derivs.derivative(i, analytic);
      const double h = 1e-6 * std::max(1.0, std::abs(raw[i]));
      Eigen::VectorXd up = raw, dn = raw;
      up[i] += h;
      dn[i] -= h;
      const Eigen::MatrixXd c_up =
          build_gram_bundle(reparam_forward(up, spec), grid, rx, tx).c_theta;
      const Eigen::MatrixXd c_dn =
          build_gram_bundle(reparam_forward(dn, spec), grid, rx, tx).c_theta;
      const Eigen::MatrixXd fd = (c_up - c_dn) / (2.0 * h);
      const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
      CHECK((analytic - fd).cwiseAbs().maxCoeff() / scale < 1e-5);
    }
  }
}

TEST_CASE("hyperparameter serialization round-trips exactly") {
  const HyperParams hp = simple_hp(3, 2);
  const HyperParams back = parse_hyperparams(serialize_hyperparams(hp));
  CHECK(back.amplitude == hp.amplitude);
  REQUIRE(back.rx.size() == hp.rx.size());
  REQUIRE(back.tx.size() == hp.tx.size());
  for (size_t q = 0; q < hp.rx.size(); ++q) {
    CHECK(back.rx[q].weight == hp.rx[q].weight);
    CHECK(back.rx[q].freq_y == hp.rx[q].freq_y);
    CHECK(back.rx[q].freq_z == hp.rx[q].freq_z);
    CHECK(back.rx[q].var_y == hp.rx[q].var_y);
    CHECK(back.rx[q].var_z == hp.rx[q].var_z);
  }
  CHECK(back.icm.l00 == hp.icm.l00);
  CHECK(back.icm.l10 == hp.icm.l10);
  CHECK(back.icm.l11 == hp.icm.l11);
  CHECK(back.noise_var == hp.noise_var);
  CHECK_THROWS_AS((void)parse_hyperparams("A 1\n"), std::invalid_argument);
}

TEST_CASE("raw layout bookkeeping") {
  CHECK(raw_param_count(3, 3) == 35);
  CHECK(raw_param_name(0, 3, 3) == "log_A");
  CHECK(raw_param_name(1, 3, 3) == "rx0.log_w");
  CHECK(raw_param_name(16, 3, 3) == "tx0.log_w");
  CHECK(raw_param_name(31, 3, 3) == "t00");
  CHECK(raw_param_name(34, 3, 3) == "log_sigma_r_sq");
}
