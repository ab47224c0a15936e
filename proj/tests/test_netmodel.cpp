#include <doctest.h>

#include <cmath>

#include "support/cases.hpp"
#include "windcoh/netmodel.hpp"

using namespace windcoh;
using namespace windcoh::testcases;

TEST_CASE("admittance: two-bus line") {
  NetworkCase c = two_bus_case();
  c.lines = {make_line(1, 2, 10.0)};
  const CMat y = build_admittance(c);
  CHECK(y(0, 1) == std::complex<double>(0, -10.0));
  CHECK(y(1, 0) == std::complex<double>(0, -10.0));
  CHECK(y(0, 0) == std::complex<double>(0, 10.0));
  CHECK(y(1, 1) == std::complex<double>(0, 10.0));
}

TEST_CASE("admittance: shunt adds to the diagonal") {
  NetworkCase c = two_bus_case();
  c.lines = {make_line(1, 2, 10.0)};
  c.buses[0].b_shunt = 0.5;
  const CMat y = build_admittance(c);
  CHECK(y(0, 0) == std::complex<double>(0, 10.5));
  CHECK(y(1, 1) == std::complex<double>(0, 10.0));
}

TEST_CASE("admittance: three-bus ring against a hand-assembled matrix") {
  NetworkCase c = three_ring_case(5.0);
  c.buses[1].b_shunt = 0.25;  // one shunt to make row sums visible
  const CMat y = build_admittance(c);
  CMat expect(3, 3);
  const std::complex<double> j5(0, 5), z(0, 0);
  expect << j5 + j5, -j5, -j5, -j5,
      j5 + j5 + std::complex<double>(0, 0.25), -j5, -j5, -j5, j5 + j5;
  CHECK((y - expect).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-15));
  // row sums collapse to the shunt-only terms
  for (int r = 0; r < 3; ++r) {
    const std::complex<double> sum = y.row(r).sum();
    const double shunt = r == 1 ? 0.25 : 0.0;
    CHECK(std::abs(sum - std::complex<double>(0, shunt)) < 1e-14);
  }
  CHECK((y - y.transpose()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("admittance: line charging splits onto both ends") {
  NetworkCase c = two_bus_case();
  c.lines = {make_line(1, 2, 10.0, 0.4)};
  const CMat y = build_admittance(c);
  CHECK(y(0, 0) == std::complex<double>(0, 10.2));
  CHECK(y(1, 1) == std::complex<double>(0, 10.2));
}

TEST_CASE("admittance: disconnected graph is a structural error") {
  NetworkCase c = two_bus_case();
  c.buses.push_back(make_bus(3));
  CHECK_THROWS_AS(build_admittance(c), ValidationError);
}

TEST_CASE("validate: well-formed case is clean") {
  CHECK(validate_case(two_bus_case()).empty());
  CHECK(validate_case(two_area_case()).empty());
}

TEST_CASE("validate: dangling generator reference") {
  NetworkCase c = two_bus_case();
  c.generators[1].bus = 99;
  const auto f = validate_case(c);
  REQUIRE(!f.empty());
  bool found = false;
  for (const auto& x : f) found |= x.code == "dangling-reference";
  CHECK(found);
}

TEST_CASE("validate: duplicate bus id") {
  NetworkCase c = two_bus_case();
  c.buses.push_back(make_bus(1));
  const auto f = validate_case(c);
  bool found = false;
  for (const auto& x : f) found |= x.code == "duplicate-id";
  CHECK(found);
}

TEST_CASE("validate: resistive lines are rejected") {
  NetworkCase c = two_bus_case();
  c.lines[0].r = 0.01;
  const auto f = validate_case(c);
  bool found = false;
  for (const auto& x : f) found |= x.code == "resistive-line";
  CHECK(found);
}

TEST_CASE("power flow: symmetric unloaded ring stays flat") {
  NetworkCase c = three_ring_case();
  for (auto& g : c.generators) g.xd_prime = 0.5;  // identical machines
  const OperatingPoint op = solve_power_flow(c);
  for (int i = 0; i < 3; ++i) {
    CHECK(op.delta0[i] == doctest::Approx(op.delta0[0]).epsilon(1e-10));
    CHECK(op.v_re0[i] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(op.v_im0[i] - op.v_im0[0]) < 1e-10);
  }
  // no flows anywhere
  CHECK(op.p_inj.lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("power flow: two-bus transfer satisfies the closed-form relation") {
  const NetworkCase c = two_bus_case();
  const OperatingPoint op = solve_power_flow(c);
  const double v1 = std::hypot(op.v_re0[0], op.v_im0[0]);
  const double v2 = std::hypot(op.v_re0[1], op.v_im0[1]);
  const double th1 = std::atan2(op.v_im0[0], op.v_re0[0]);
  const double th2 = std::atan2(op.v_im0[1], op.v_re0[1]);
  // closed-form two-bus solution: |sin(angle difference)| = P/(B V1 V2)
  const double expect = std::asin(0.5 / (5.0 * v1 * v2));
  CHECK(std::abs(th1 - th2) == doctest::Approx(expect).epsilon(1e-8));
  // and machine 1 delivers its dispatch
  const auto e = eval_machine(c.generators[0], op.delta0[0], op.v_re0[0], op.v_im0[0]);
  CHECK(e.p == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("power flow: residual re-substitution and lossless sum") {
  for (const NetworkCase& c : {two_bus_case(), two_area_case()}) {
    const OperatingPoint op = solve_power_flow(c);
    const Vec r = network_residual(c, op.delta0, op.v_re0, op.v_im0);
    CHECK(r.lpNorm<Eigen::Infinity>() < 1e-8);
    // lossless network: net active injections sum to zero
    CHECK(std::abs(op.p_inj.sum()) < 1e-8);
  }
}

TEST_CASE("power flow: non-convergence reports the mismatch") {
  NetworkCase c = two_bus_case();
  c.buses[1].load_p = 80.0;  // far beyond the 5 pu line limit
  CHECK_THROWS_AS(solve_power_flow(c), ConvergenceError);
}

TEST_CASE("68-bus benchmark: converges, balances, matches the voltage schedule") {
  const NetworkCase c = load_case(benchmark_case());
  REQUIRE(validate_case(c).empty());
  const OperatingPoint op = solve_power_flow(c);
  CHECK(op.mismatch < 1e-8);

  // total load is 17.62 GW; lossless balance puts generation at the same value
  double load = 0.0;
  for (const auto& b : c.buses) load += b.load_p;
  CHECK(load * c.base_mva == doctest::Approx(17620.7).epsilon(1e-3));
  CHECK(std::abs(op.p_inj.sum()) < 1e-7);

  // machine-bus voltage magnitudes sit near the scheduled profile
  for (int i = 0; i < static_cast<int>(c.generators.size()); ++i) {
    const int pos = c.bus_position(c.generators[i].bus);
    const double v = std::hypot(op.v_re0[pos], op.v_im0[pos]);
    CHECK(v > 0.9);
    CHECK(v < 1.12);
  }
}
