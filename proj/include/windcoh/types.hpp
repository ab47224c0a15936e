#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

#include "windcoh/windfarm.hpp"

namespace windcoh {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

enum class BusKind { SyncGen, WindGen, NonGen };

struct Bus {
  int id = 0;
  BusKind kind = BusKind::NonGen;
  double g_shunt = 0.0;
  double b_shunt = 0.0;
  double load_p = 0.0;
  double load_q = 0.0;
};

// Lossless tie-line. b is the series susceptance (1/X > 0); charging_b is the
// total line-charging susceptance, split evenly onto the two end buses.
// r is retained only so that validation can reject resistive input data.
struct Line {
  int from = 0;
  int to = 0;
  double b = 0.0;
  double charging_b = 0.0;
  double r = 0.0;
};

struct SynchronousGenerator {
  int bus = 0;
  double inertia_m = 0.0;   // M_i = 2H/omega_s, s^2*pu
  double xd_prime = 0.0;    // pu
  double emf = 1.0;         // internal voltage E_i, pu
  double p_mech = 0.0;      // pu
  double damping = 0.0;     // optional D_i, pu*s
};

struct NetworkCase {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<SynchronousGenerator> generators;
  std::vector<WindFarmSpec> wind_farms;
  int slack_machine = -1;  // machine index; -1 selects the largest inertia
  std::string name;

  int slack() const;                 // resolved slack machine index
  int bus_position(int bus_id) const;  // index into buses, -1 if absent
};

// Bus bookkeeping. "Position" indexes NetworkCase::buses; "internal" is the
// analysis ordering [sync-gen buses in machine order, wind buses in farm
// order, remaining buses]. The stacked voltage vector is
// [V_re(internal); V_im(internal)].
struct CaseIndex {
  int n = 0;  // synchronous machines
  int p = 0;  // wind farms
  int m = 0;  // buses
  std::vector<int> machine_pos;      // machine -> bus position
  std::vector<int> farm_pos;         // farm -> bus position
  std::vector<int> internal_of_pos;  // bus position -> internal index
  std::vector<int> pos_of_internal;  // internal index -> bus position
};

CaseIndex make_index(const NetworkCase& c);

struct OperatingPoint {
  Vec delta0;          // machine angles, rad
  Vec v_re0, v_im0;    // bus voltages in case (position) order
  std::vector<WindState> wind0;  // one per farm
  Vec p_inj, q_inj;    // net bus injections at the solution
  double slack_p_mech = 0.0;  // solved slack mechanical power
  int iterations = 0;
  double mismatch = 0.0;      // final infinity-norm power mismatch
};

struct Finding {
  std::string code;
  std::string message;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace windcoh
