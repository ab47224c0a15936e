#include <doctest.h>

#include <cmath>

#include "support/cases.hpp"
#include "windcoh/finite_diff.hpp"
#include "windcoh/windfarm.hpp"

using namespace windcoh;
using namespace windcoh::testcases;

TEST_CASE("aero torque: unit plug-in and cubic law") {
  TurbineParams t;
  t.rho = 2.0;
  t.a_s = 1.0;
  t.c_p = 1.0;  // rho*A*Cp/2 = 1
  CHECK(aero_torque(1.0, 1.0, t) == doctest::Approx(1.0));
  CHECK(aero_torque(2.0, 1.0, t) == doctest::Approx(8.0));
  CHECK(aero_torque(2.0, 2.0, t) == doctest::Approx(4.0));
  CHECK_THROWS_AS(aero_torque(1.0, 0.0, t), std::domain_error);
  CHECK_THROWS_AS(aero_torque(1.0, -1.0, t), std::domain_error);
}

TEST_CASE("aero torque: registry turbine matches a hand evaluation") {
  const WindFarmSpec f = test_farm(66, 650);
  const double nu = 12.0, wr = 2.2;
  const double hand = f.turbine.rho * f.turbine.a_s * nu * nu * nu *
                      f.turbine.c_p / (2.0 * wr);
  CHECK(aero_torque(nu, wr, f.turbine) == doctest::Approx(hand).epsilon(1e-14));
}

TEST_CASE("steady state: residuals vanish and power hits the setpoints") {
  const WindFarmSpec f = test_farm(66, 650);
  const std::complex<double> v(0.98, 0.12);
  const WindState s = wind_steady_state(f, v);
  const Vec r = wind_residual(f, s.as_vector(), s.v_qs, s.v_ds);
  CHECK(r.lpNorm<Eigen::Infinity>() < 1e-8);

  const auto [p, q] = farm_power(f, s);
  CHECK(p == doctest::Approx(650.0 * f.mppt_p_ref(12.0)).epsilon(1e-10));
  CHECK(q == doctest::Approx(0.0).epsilon(1e-12));
  // v_ds = 0 alignment means P_w reduces to gamma * v_qs * i_qs
  CHECK(p == doctest::Approx(650.0 * s.v_qs * s.i_qs).epsilon(1e-12));
  CHECK(s.omega_r > 0.5);
  CHECK(s.omega_g == doctest::Approx(f.turbine.n_g * s.omega_r));
}

TEST_CASE("steady state: rejects non-positive wind speed") {
  WindFarmSpec f = test_farm(66, 650);
  f.wind_speed = 0.0;
  CHECK_THROWS_AS(wind_steady_state(f, {1.0, 0.0}), std::domain_error);
}

TEST_CASE("farm power: direct formula checks") {
  WindFarmSpec f = test_farm(66, 100);
  WindState s;
  s.v_ds = 0.0;
  s.v_qs = 1.0;
  s.i_qs = 0.5;
  s.i_ds = 0.0;
  auto [p, q] = farm_power(f, s);
  CHECK(p == doctest::Approx(50.0));
  CHECK(q == doctest::Approx(0.0));

  s.i_qs = 0.7;  // i_ds = 0, v_ds = 0 keeps Q at zero regardless of i_qs
  CHECK(farm_power(f, s).second == doctest::Approx(0.0));

  f.gamma = 200;  // doubling gamma doubles both outputs
  auto [p2, q2] = farm_power(f, s);
  WindFarmSpec g = f;
  g.gamma = 100;
  auto [p1, q1] = farm_power(g, s);
  CHECK(p2 == doctest::Approx(2.0 * p1));
  CHECK(q2 == doctest::Approx(2.0 * q1));
}

TEST_CASE("linearization: every block matches central finite differences") {
  const WindFarmSpec f = test_farm(66, 650, 11.0);
  const std::complex<double> v(1.01, -0.07);
  const WindState s = wind_steady_state(f, v);
  const WindLinearization lin = linearize_wind(f, s, v);
  const Vec z0 = s.as_vector();

  // A against d(residual)/dz
  const Mat a_fd = central_difference_jacobian(
      [&](const Vec& z) { return wind_residual(f, z, s.v_qs, s.v_ds); }, z0);
  CHECK(max_relative_error(lin.a, a_fd) < 1e-5);

  // B against d(residual)/d(V_re, V_im) through the frozen frame
  const double fc = s.frame_cos, fs = s.frame_sin;
  Vec v0(2);
  v0 << v.real(), v.imag();
  const Mat b_fd = central_difference_jacobian(
      [&](const Vec& vv) {
        const double vqs = fc * vv[0] + fs * vv[1];
        const double vds = fs * vv[0] - fc * vv[1];
        return wind_residual(f, z0, vqs, vds);
      },
      v0);
  CHECK(max_relative_error(lin.b, b_fd) < 1e-5);

  // C and D against the farm power outputs
  auto pw = [&](const Vec& z, double vre, double vim) {
    const double vqs = fc * vre + fs * vim;
    const double vds = fs * vre - fc * vim;
    Vec out(2);
    out[0] = f.gamma * (vqs * z[3] + vds * z[4]);
    out[1] = f.gamma * (-vds * z[3] + vqs * z[4]);
    return out;
  };
  const Mat c_fd = central_difference_jacobian(
      [&](const Vec& z) { return pw(z, v.real(), v.imag()); }, z0);
  Mat c_an(2, WindState::kDim);
  c_an.row(0) = lin.c1;
  c_an.row(1) = lin.c2;
  CHECK(max_relative_error(c_an, c_fd) < 1e-5);

  const Mat d_fd = central_difference_jacobian(
      [&](const Vec& vv) { return pw(z0, vv[0], vv[1]); }, v0);
  Mat d_an(2, 2);
  d_an.row(0) = lin.d1;
  d_an.row(1) = lin.d2;
  CHECK(max_relative_error(d_an, d_fd) < 1e-5);
}

TEST_CASE("linearization: D entries factor exactly as gamma * zeta") {
  const std::complex<double> v(1.0, 0.05);
  WindFarmSpec f1 = test_farm(66, 1);
  WindFarmSpec f650 = test_farm(66, 650);
  // identical per-unit state: the unit setpoint does not depend on gamma
  const WindState s1 = wind_steady_state(f1, v);
  const WindState s650 = wind_steady_state(f650, v);
  const WindLinearization l1 = linearize_wind(f1, s1, v);
  const WindLinearization l650 = linearize_wind(f650, s650, v);
  for (int k = 0; k < 4; ++k)
    CHECK(l1.zeta[k] == doctest::Approx(l650.zeta[k]).epsilon(1e-12));
  CHECK(l650.d1[0] == 650.0 * l1.zeta[0]);
  CHECK(l650.d1[1] == 650.0 * l1.zeta[1]);
  CHECK(l650.d2[0] == 650.0 * l1.zeta[2]);
  CHECK(l650.d2[1] == 650.0 * l1.zeta[3]);
}

TEST_CASE("linearization: farm A matrix is Hurwitz with shipped gains") {
  const WindFarmSpec f = test_farm(66, 650);
  const std::complex<double> v(1.0, 0.0);
  const WindState s = wind_steady_state(f, v);
  const WindLinearization lin = linearize_wind(f, s, v);
  const Eigen::VectorXcd eigs = lin.a.eigenvalues();
  for (Eigen::Index i = 0; i < eigs.size(); ++i)
    CHECK(eigs[i].real() < -1e-9);
}

TEST_CASE("multi-farm D: structure, single-farm reduction, permutation") {
  const std::complex<double> v(1.0, 0.0);
  std::vector<WindFarmSpec> farms = {test_farm(32, 200), test_farm(66, 250),
                                     test_farm(57, 200)};
  std::vector<WindLinearization> lins;
  for (const auto& f : farms)
    lins.push_back(linearize_wind(f, wind_steady_state(f, v), v));

  const int m = 68;
  const std::vector<int> cols = {16, 17, 18};  // internal wind slots
  auto [d1, d2] = multi_farm_D(farms, lins, m, cols);
  CHECK(d1.rows() == 3);
  CHECK(d1.cols() == 2 * m);
  int nonzero = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2 * m; ++j)
      if (d1(i, j) != 0.0) ++nonzero;
  CHECK(nonzero == 6);  // one V_re and one V_im entry per row
  for (int i = 0; i < 3; ++i) {
    CHECK(d1(i, cols[i]) != 0.0);
    CHECK(d1(i, cols[i] + m) != 0.0);
  }

  // p = 1 reduces to the single-farm row
  auto [d1s, d2s] = multi_farm_D({farms[0]}, {lins[0]}, m, {cols[0]});
  CHECK(d1s.row(0).isApprox(d1.row(0)));
  CHECK(d2s.row(0).isApprox(d2.row(0)));

  // permuting the farm list permutes rows identically in all blocks
  std::vector<WindFarmSpec> perm = {farms[2], farms[0], farms[1]};
  std::vector<WindLinearization> perm_l = {lins[2], lins[0], lins[1]};
  auto [d1p, d2p] = multi_farm_D(perm, perm_l, m, {cols[2], cols[0], cols[1]});
  CHECK(d1p.row(0).isApprox(d1.row(2)));
  CHECK(d1p.row(1).isApprox(d1.row(0)));
  CHECK(d2p.row(2).isApprox(d2.row(1)));

  // duplicate buses are rejected
  CHECK_THROWS_AS(
      multi_farm_D({farms[0], farms[0]}, {lins[0], lins[0]}, m, {16, 16}),
      std::invalid_argument);
}

TEST_CASE("zero-pattern: zeta vanishes for a disabled farm") {
  WindFarmSpec f = test_farm(66, 0);
  const WindState s = wind_steady_state(f, {1.0, 0.0});
  const WindLinearization lin = linearize_wind(f, s, {1.0, 0.0});
  CHECK(lin.d1.cwiseAbs().maxCoeff() == 0.0);
  CHECK(lin.d2.cwiseAbs().maxCoeff() == 0.0);
}
