#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "windcoh/types.hpp"

namespace windcoh {

// Structural diagnostics; never throws. Empty result means every case
// invariant holds.
std::vector<Finding> validate_case(const NetworkCase& c);

// Complex bus admittance matrix in case (position) order. Off-diagonal
// (j,k) = -i*B_jk per line; diagonals collect +i*B_jk, half the line
// charging per end, and the bus shunt G_j + i*B_j.
// Throws ValidationError for a disconnected graph.
CMat build_admittance(const NetworkCase& c);

// Classical-machine steady state: P_s_i(delta, V) = P_m_i for every
// non-slack machine plus full P/Q balance at every bus. Machine internal
// voltages are fixed; the slack machine's P_m is solved.
struct PowerFlowOptions {
  double tol = 1e-8;
  int max_iterations = 60;
  std::optional<OperatingPoint> init;  // defaults to flat start
};

OperatingPoint solve_power_flow(const NetworkCase& c,
                                const PowerFlowOptions& opt = {});

// Machine terminal power per Eq.-(2) style classical model, with partials.
struct MachineEval {
  double p, q;
  double dp_ddelta, dp_dvre, dp_dvim;
  double dq_ddelta, dq_dvre, dq_dvim;
};
MachineEval eval_machine(const SynchronousGenerator& g, double delta,
                         double v_re, double v_im);

// Network side of the bus balance, assembled line by line: p/q are the
// active power leaving bus j and the reactive power consumed at bus j
// (series line terms minus charging and capacitive shunts, plus conductive
// shunt draw on the active side).
struct FlowEval {
  Vec p, q;                      // m
  Mat dp_dvre, dp_dvim, dq_dvre, dq_dvim;  // m x m, case order
};
FlowEval eval_flow(const NetworkCase& c, const Vec& v_re, const Vec& v_im,
                   bool with_jacobian = true);

// Power-flow residual in case order: [P balance(m); Q balance(m)], using the
// supplied farm injections (fixed P/Q during the solve).
Vec network_residual(const NetworkCase& c, const Vec& delta,
                     const Vec& v_re, const Vec& v_im);

// Case file I/O (JSON; keys buses/lines/generators/wind_farms/base_mva).
NetworkCase load_case(const std::string& path,
                      const std::string& registry_path = "");
NetworkCase parse_case(const std::string& json_text,
                       const std::string& registry_path = "");

}  // namespace windcoh
