#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace windcoh {

// Aggregated turbine drivetrain. Mechanical quantities are normalized by the
// system VA base, so torques are pu-power per (rad/s) and speeds are
// mechanical rad/s. rho/a_s/c_p stay in SI; power_scale converts the SI
// aerodynamic power into the normalized torque units.
struct TurbineParams {
  double j_r = 0.0;
  double j_g = 0.0;
  double b_dt = 0.0;
  double k_dt = 0.0;
  double b_r = 0.0;
  double b_g = 0.0;
  double n_g = 1.0;
  double rho = 1.225;  // kg/m^3
  double a_s = 0.0;    // m^2
  double c_p = 0.4;
  double power_scale = 1.0;
};

// DFIG electrical parameters on the system base. Inductances are stored as
// reactance / omega_e so that omega_e * L is the per-unit reactance and the
// d/dt flux terms integrate in real seconds.
struct DFIGParams {
  double r_s = 0.0;
  double r_r = 0.0;
  double l_ls = 0.0;
  double l_lr = 0.0;
  double l_m = 0.0;
  int p_e = 4;
  double omega_e = 376.99111843077515;  // 2*pi*60
};

struct PIGains {
  double kp_p = 0.0;
  double ki_p = 0.0;
  double kp_q = 0.0;
  double ki_q = 0.0;
};

// One wind farm: gamma identical turbine-DFIG units behind a common bus.
// Currents and powers below are per aggregated unit in system per-unit, so
// the farm output is gamma times the unit output.
struct WindFarmSpec {
  int bus = 0;
  int gamma = 0;
  double wind_speed = 12.0;  // m/s
  double q_setpoint = 0.0;   // farm total, system pu
  double p_rated = 0.0;      // one unit's rated electrical output, system pu
  double nu_rated = 12.0;    // wind speed giving p_rated under the MPPT law
  std::string model;
  TurbineParams turbine;
  DFIGParams dfig;
  PIGains pi;

  // MPPT active-power reference for one unit: k_opt * nu^3.
  double mppt_p_ref(double nu) const {
    const double k_opt = p_rated / (nu_rated * nu_rated * nu_rated);
    return k_opt * nu * nu * nu;
  }
  // Farm totals fed into the power flow.
  double farm_p_ref() const { return static_cast<double>(gamma) * mppt_p_ref(wind_speed); }
  double farm_q_ref() const { return q_setpoint; }
};

// Steady state of one aggregated unit plus the derived quantities at that
// point. State ordering for the linearization:
//   z = [omega_r, omega_g, theta_t, i_qs, i_ds, i_qr, i_dr, x_p, x_q]
struct WindState {
  static constexpr int kDim = 9;

  double omega_r = 0, omega_g = 0, theta_t = 0;
  double i_qs = 0, i_ds = 0, i_qr = 0, i_dr = 0;
  double x_p = 0, x_q = 0;

  // derived fields at the operating point
  double v_qs = 0, v_ds = 0;
  double frame_cos = 1, frame_sin = 0;  // bus-phasor alignment frozen at p0
  double psi_qs = 0, psi_ds = 0, psi_qr = 0, psi_dr = 0;
  double t_a = 0, t_g = 0;
  double v_qr = 0, v_dr = 0;

  Eigen::VectorXd as_vector() const;
};

// Linearized farm model, farm-bus columns only. b has columns
// (dV_re, dV_im) of the farm's own bus; embedding into the zero-padded
// network-wide matrices is done by the caller that owns the bus ordering.
struct WindLinearization {
  Eigen::MatrixXd a;          // kDim x kDim
  Eigen::MatrixXd b;          // kDim x 2
  Eigen::RowVectorXd c1, c2;  // 1 x kDim
  Eigen::RowVector2d d1, d2;  // entries gamma * zeta
  std::array<double, 4> zeta{};
};

// T_a = rho * A_s * nu^3 * C_p / (2 * omega_r), in the raw units of the
// supplied parameters. Throws std::domain_error for omega_r <= 0.
double aero_torque(double nu, double omega_r, const TurbineParams& t);

// Closed-form equilibrium of one unit given the solved farm-bus voltage.
// The PI integrators pin the unit outputs at the MPPT / Q setpoints.
WindState wind_steady_state(const WindFarmSpec& f, std::complex<double> v_bus);

// (P_w, Q_w) of the whole farm in system pu, Eq.-style gamma scaling.
std::pair<double, double> farm_power(const WindFarmSpec& f, const WindState& s);

// Right-hand side of the unit dynamics for given states and stator voltage.
// Public so tests can check steady-state residuals and finite differences.
Eigen::VectorXd wind_residual(const WindFarmSpec& f, const Eigen::VectorXd& z,
                              double v_qs, double v_ds);

// Analytic linearization about z0 / v_bus (frame frozen at the operating
// point). d-entries factor exactly as gamma * zeta.
WindLinearization linearize_wind(const WindFarmSpec& f, const WindState& z0,
                                 std::complex<double> v_bus);

// Stacked multi-farm D matrices, p x 2m each ordered [V_re block, V_im block]
// with farm i's entries in column farm_cols[i] (and farm_cols[i] + m).
// Throws std::invalid_argument if two farms share a bus.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> multi_farm_D(
    const std::vector<WindFarmSpec>& farms,
    const std::vector<WindLinearization>& lins, int m,
    const std::vector<int>& farm_cols);

// Registry of unit models. File units: electrical pu on the unit base,
// mechanical SI; loading converts onto the system base.
struct WindUnitModel {
  std::string name;
  double unit_mva = 0.0;
  double rated_mw = 0.0;
  double nu_rated = 12.0;
  TurbineParams turbine;  // converted, working units
  DFIGParams dfig;        // converted, system base
  PIGains pi;
};

std::map<std::string, WindUnitModel> load_wind_registry(const std::string& path,
                                                        double base_mva);

// Builds a farm spec from a registry entry.
WindFarmSpec make_farm(const WindUnitModel& model, int bus, int gamma,
                       double wind_speed, double q_setpoint = 0.0);

}  // namespace windcoh
