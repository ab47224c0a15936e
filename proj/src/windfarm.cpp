#include "windcoh/windfarm.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace windcoh {

namespace {
constexpr int W_R = 0, W_G = 1, TH = 2, IQS = 3, IDS = 4, IQR = 5, IDR = 6,
              XP = 7, XQ = 8;

// aerodynamic torque in working units
double aero_torque_scaled(const WindFarmSpec& f, double nu, double omega_r) {
  return f.turbine.power_scale * aero_torque(nu, omega_r, f.turbine);
}

double torque_gain(const DFIGParams& d) {
  return 1.5 * (static_cast<double>(d.p_e) / 2.0) * d.l_m;
}

double q_ref_unit(const WindFarmSpec& f) {
  return f.gamma > 0 ? f.q_setpoint / static_cast<double>(f.gamma) : 0.0;
}
}  // namespace

Eigen::VectorXd WindState::as_vector() const {
  Eigen::VectorXd z(kDim);
  z << omega_r, omega_g, theta_t, i_qs, i_ds, i_qr, i_dr, x_p, x_q;
  return z;
}

double aero_torque(double nu, double omega_r, const TurbineParams& t) {
  if (omega_r <= 0.0)
    throw std::domain_error("aero_torque: rotor speed must be positive");
  return t.rho * t.a_s * nu * nu * nu * t.c_p / (2.0 * omega_r);
}

WindState wind_steady_state(const WindFarmSpec& f, std::complex<double> v_bus) {
  if (f.wind_speed <= 0.0)
    throw std::domain_error("wind_steady_state: wind speed must be positive");
  const double vmag = std::abs(v_bus);
  if (vmag < 1e-6)
    throw std::domain_error("wind_steady_state: collapsed bus voltage");

  const auto& d = f.dfig;
  const auto& t = f.turbine;
  const double l_ss = d.l_ls + d.l_m;
  const double l_rr = d.l_lr + d.l_m;

  WindState s;
  s.frame_cos = v_bus.real() / vmag;
  s.frame_sin = v_bus.imag() / vmag;
  s.v_qs = vmag;
  s.v_ds = 0.0;

  const double p_ref = f.mppt_p_ref(f.wind_speed);
  const double q_ref = q_ref_unit(f);
  s.i_qs = p_ref / s.v_qs;
  s.i_ds = q_ref / s.v_qs;

  // stator equations with d/dt = 0 pin the rotor currents
  s.psi_ds = (s.v_qs - d.r_s * s.i_qs) / d.omega_e;
  s.psi_qs = (d.r_s * s.i_ds - s.v_ds) / d.omega_e;
  s.i_dr = (s.psi_ds - l_ss * s.i_ds) / d.l_m;
  s.i_qr = (s.psi_qs - l_ss * s.i_qs) / d.l_m;
  s.psi_qr = l_rr * s.i_qr + d.l_m * s.i_qs;
  s.psi_dr = l_rr * s.i_dr + d.l_m * s.i_ds;

  s.t_g = torque_gain(d) * (s.i_qs * s.i_dr - s.i_ds * s.i_qr);

  // mechanical balance: (B_r + B_g N^2) w^2 + T_g N w - c = 0
  const double c_aero = f.turbine.power_scale * t.rho * t.a_s * f.wind_speed *
                        f.wind_speed * f.wind_speed * t.c_p / 2.0;
  const double fr = t.b_r + t.b_g * t.n_g * t.n_g;
  if (fr <= 0.0)
    throw std::domain_error("wind_steady_state: friction must be positive");
  const double bq = s.t_g * t.n_g;
  s.omega_r = (-bq + std::sqrt(bq * bq + 4.0 * fr * c_aero)) / (2.0 * fr);
  s.omega_g = t.n_g * s.omega_r;
  s.t_a = c_aero / s.omega_r;
  s.theta_t = (s.t_a - t.b_r * s.omega_r) / t.k_dt;

  const double slip = d.omega_e - 0.5 * d.p_e * s.omega_g;
  s.v_qr = d.r_r * s.i_qr + slip * s.psi_dr;
  s.v_dr = d.r_r * s.i_dr - slip * s.psi_qr;
  s.x_p = s.v_qr;  // PI error is zero at equilibrium
  s.x_q = s.v_dr;

  const double res =
      wind_residual(f, s.as_vector(), s.v_qs, s.v_ds).lpNorm<Eigen::Infinity>();
  if (!(res < 1e-8)) {
    std::ostringstream os;
    os << "wind_steady_state: equilibrium residual " << res;
    throw std::runtime_error(os.str());
  }
  return s;
}

std::pair<double, double> farm_power(const WindFarmSpec& f, const WindState& s) {
  const double g = static_cast<double>(f.gamma);
  return {g * (s.v_qs * s.i_qs + s.v_ds * s.i_ds),
          g * (-s.v_ds * s.i_qs + s.v_qs * s.i_ds)};
}

Eigen::VectorXd wind_residual(const WindFarmSpec& f, const Eigen::VectorXd& z,
                              double v_qs, double v_ds) {
  const auto& d = f.dfig;
  const auto& t = f.turbine;
  const double l_ss = d.l_ls + d.l_m;
  const double l_rr = d.l_lr + d.l_m;

  const double omega_r = z[W_R], omega_g = z[W_G], theta = z[TH];
  const double i_qs = z[IQS], i_ds = z[IDS], i_qr = z[IQR], i_dr = z[IDR];
  const double x_p = z[XP], x_q = z[XQ];

  const double psi_qs = l_ss * i_qs + d.l_m * i_qr;
  const double psi_ds = l_ss * i_ds + d.l_m * i_dr;
  const double psi_qr = l_rr * i_qr + d.l_m * i_qs;
  const double psi_dr = l_rr * i_dr + d.l_m * i_ds;

  const double p_u = v_qs * i_qs + v_ds * i_ds;
  const double q_u = -v_ds * i_qs + v_qs * i_ds;
  const double e_p = f.mppt_p_ref(f.wind_speed) - p_u;
  const double e_q = q_ref_unit(f) - q_u;
  const double v_qr = f.pi.kp_p * e_p + x_p;
  const double v_dr = f.pi.kp_q * e_q + x_q;

  const double slip = d.omega_e - 0.5 * d.p_e * omega_g;
  const double dpsi_qs = v_qs - d.r_s * i_qs - d.omega_e * psi_ds;
  const double dpsi_ds = v_ds - d.r_s * i_ds + d.omega_e * psi_qs;
  const double dpsi_qr = v_qr - d.r_r * i_qr - slip * psi_dr;
  const double dpsi_dr = v_dr - d.r_r * i_dr + slip * psi_qr;

  const double det = l_ss * l_rr - d.l_m * d.l_m;
  const double di_qs = (l_rr * dpsi_qs - d.l_m * dpsi_qr) / det;
  const double di_qr = (-d.l_m * dpsi_qs + l_ss * dpsi_qr) / det;
  const double di_ds = (l_rr * dpsi_ds - d.l_m * dpsi_dr) / det;
  const double di_dr = (-d.l_m * dpsi_ds + l_ss * dpsi_dr) / det;

  const double t_a = aero_torque_scaled(f, f.wind_speed, omega_r);
  const double t_g = torque_gain(d) * (i_qs * i_dr - i_ds * i_qr);

  Eigen::VectorXd r(WindState::kDim);
  r[W_R] = ((t.b_dt / t.n_g) * omega_g - t.k_dt * theta -
            (t.b_dt + t.b_r) * omega_r + t_a) /
           t.j_r;
  r[W_G] = ((t.b_dt / t.n_g) * omega_r + (t.k_dt / t.n_g) * theta -
            (t.b_dt / (t.n_g * t.n_g) + t.b_g) * omega_g - t_g) /
           t.j_g;
  r[TH] = omega_r - omega_g / t.n_g;
  r[IQS] = di_qs;
  r[IDS] = di_ds;
  r[IQR] = di_qr;
  r[IDR] = di_dr;
  r[XP] = f.pi.ki_p * e_p;
  r[XQ] = f.pi.ki_q * e_q;
  return r;
}

WindLinearization linearize_wind(const WindFarmSpec& f, const WindState& z0,
                                 std::complex<double> v_bus) {
  const auto& d = f.dfig;
  const auto& t = f.turbine;
  const double l_ss = d.l_ls + d.l_m;
  const double l_rr = d.l_lr + d.l_m;
  const double det = l_ss * l_rr - d.l_m * d.l_m;
  const double kt = torque_gain(d);
  const int nd = WindState::kDim;

  const double v_qs = z0.v_qs, v_ds = z0.v_ds;
  const double slip = d.omega_e - 0.5 * d.p_e * z0.omega_g;
  const double c_aero = f.turbine.power_scale * t.rho * t.a_s * f.wind_speed *
                        f.wind_speed * f.wind_speed * t.c_p / 2.0;

  // flux-equation rows as functions of states and the stator voltage pair;
  // the current rows are L^{-1} times these.
  Eigen::MatrixXd rq = Eigen::MatrixXd::Zero(2, nd);  // (dpsi_qs, dpsi_qr)
  Eigen::MatrixXd rd = Eigen::MatrixXd::Zero(2, nd);  // (dpsi_ds, dpsi_dr)
  Eigen::MatrixXd rq_v = Eigen::MatrixXd::Zero(2, 2);  // wrt (v_qs, v_ds)
  Eigen::MatrixXd rd_v = Eigen::MatrixXd::Zero(2, 2);

  // dpsi_qs = v_qs - R_s i_qs - omega_e (L_ss i_ds + L_m i_dr)
  rq(0, IQS) = -d.r_s;
  rq(0, IDS) = -d.omega_e * l_ss;
  rq(0, IDR) = -d.omega_e * d.l_m;
  rq_v(0, 0) = 1.0;

  // dpsi_qr = v_qr(i, v, x_p) - R_r i_qr - slip(omega_g) (L_rr i_dr + L_m i_ds)
  rq(1, IQS) = -f.pi.kp_p * v_qs;
  rq(1, IDS) = -f.pi.kp_p * v_ds - slip * d.l_m;
  rq(1, IQR) = -d.r_r;
  rq(1, IDR) = -slip * l_rr;
  rq(1, XP) = 1.0;
  rq(1, W_G) = 0.5 * d.p_e * z0.psi_dr;
  rq_v(1, 0) = -f.pi.kp_p * z0.i_qs;  // v_qr depends on P_u
  rq_v(1, 1) = -f.pi.kp_p * z0.i_ds;

  // dpsi_ds = v_ds - R_s i_ds + omega_e (L_ss i_qs + L_m i_qr)
  rd(0, IDS) = -d.r_s;
  rd(0, IQS) = d.omega_e * l_ss;
  rd(0, IQR) = d.omega_e * d.l_m;
  rd_v(0, 1) = 1.0;

  // dpsi_dr = v_dr(i, v, x_q) - R_r i_dr + slip (L_rr i_qr + L_m i_qs)
  rd(1, IQS) = f.pi.kp_q * v_ds + slip * d.l_m;
  rd(1, IDS) = -f.pi.kp_q * v_qs;
  rd(1, IQR) = slip * l_rr;
  rd(1, IDR) = -d.r_r;
  rd(1, XQ) = 1.0;
  rd(1, W_G) = -0.5 * d.p_e * z0.psi_qr;
  rd_v(1, 0) = -f.pi.kp_q * z0.i_ds;  // v_dr depends on Q_u
  rd_v(1, 1) = f.pi.kp_q * z0.i_qs;

  Eigen::Matrix2d linv;
  linv << l_rr, -d.l_m, -d.l_m, l_ss;
  linv /= det;

  const Eigen::MatrixXd cq = linv * rq;      // rows (di_qs, di_qr)
  const Eigen::MatrixXd cd = linv * rd;      // rows (di_ds, di_dr)
  const Eigen::MatrixXd cq_v = linv * rq_v;  // wrt (v_qs, v_ds)
  const Eigen::MatrixXd cd_v = linv * rd_v;

  WindLinearization lin;
  lin.a = Eigen::MatrixXd::Zero(nd, nd);
  lin.a.row(IQS) = cq.row(0);
  lin.a.row(IQR) = cq.row(1);
  lin.a.row(IDS) = cd.row(0);
  lin.a.row(IDR) = cd.row(1);

  lin.a(W_R, W_R) = (-(t.b_dt + t.b_r) - c_aero / (z0.omega_r * z0.omega_r)) / t.j_r;
  lin.a(W_R, W_G) = (t.b_dt / t.n_g) / t.j_r;
  lin.a(W_R, TH) = -t.k_dt / t.j_r;

  lin.a(W_G, W_R) = (t.b_dt / t.n_g) / t.j_g;
  lin.a(W_G, W_G) = -(t.b_dt / (t.n_g * t.n_g) + t.b_g) / t.j_g;
  lin.a(W_G, TH) = (t.k_dt / t.n_g) / t.j_g;
  lin.a(W_G, IQS) = -kt * z0.i_dr / t.j_g;
  lin.a(W_G, IDS) = kt * z0.i_qr / t.j_g;
  lin.a(W_G, IQR) = kt * z0.i_ds / t.j_g;
  lin.a(W_G, IDR) = -kt * z0.i_qs / t.j_g;

  lin.a(TH, W_R) = 1.0;
  lin.a(TH, W_G) = -1.0 / t.n_g;

  lin.a(XP, IQS) = -f.pi.ki_p * v_qs;
  lin.a(XP, IDS) = -f.pi.ki_p * v_ds;
  lin.a(XQ, IQS) = f.pi.ki_q * v_ds;
  lin.a(XQ, IDS) = -f.pi.ki_q * v_qs;

  // stator-voltage sensitivities of the residual, then the frozen-frame
  // chain (v_qs, v_ds) <- (V_re, V_im)
  Eigen::MatrixXd b_v = Eigen::MatrixXd::Zero(nd, 2);
  b_v.row(IQS) = cq_v.row(0);
  b_v.row(IQR) = cq_v.row(1);
  b_v.row(IDS) = cd_v.row(0);
  b_v.row(IDR) = cd_v.row(1);
  b_v(XP, 0) = -f.pi.ki_p * z0.i_qs;
  b_v(XP, 1) = -f.pi.ki_p * z0.i_ds;
  b_v(XQ, 0) = -f.pi.ki_q * z0.i_ds;
  b_v(XQ, 1) = f.pi.ki_q * z0.i_qs;

  Eigen::Matrix2d frame;  // d(v_qs, v_ds)/d(V_re, V_im)
  frame << z0.frame_cos, z0.frame_sin, z0.frame_sin, -z0.frame_cos;
  lin.b = b_v * frame;

  const double g = static_cast<double>(f.gamma);
  lin.c1 = Eigen::RowVectorXd::Zero(nd);
  lin.c2 = Eigen::RowVectorXd::Zero(nd);
  lin.c1(IQS) = g * v_qs;
  lin.c1(IDS) = g * v_ds;
  lin.c2(IQS) = -g * v_ds;
  lin.c2(IDS) = g * v_qs;

  lin.zeta[0] = z0.i_qs * z0.frame_cos + z0.i_ds * z0.frame_sin;
  lin.zeta[1] = z0.i_qs * z0.frame_sin - z0.i_ds * z0.frame_cos;
  lin.zeta[2] = -z0.i_qs * z0.frame_sin + z0.i_ds * z0.frame_cos;
  lin.zeta[3] = z0.i_qs * z0.frame_cos + z0.i_ds * z0.frame_sin;
  lin.d1 << g * lin.zeta[0], g * lin.zeta[1];
  lin.d2 << g * lin.zeta[2], g * lin.zeta[3];
  (void)v_bus;
  return lin;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> multi_farm_D(
    const std::vector<WindFarmSpec>& farms,
    const std::vector<WindLinearization>& lins, int m,
    const std::vector<int>& farm_cols) {
  const int p = static_cast<int>(farms.size());
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (farms[i].bus == farms[j].bus)
        throw std::invalid_argument("multi_farm_D: two farms on one bus");
  Eigen::MatrixXd d1 = Eigen::MatrixXd::Zero(p, 2 * m);
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(p, 2 * m);
  for (int i = 0; i < p; ++i) {
    d1(i, farm_cols[i]) = lins[i].d1[0];
    d1(i, farm_cols[i] + m) = lins[i].d1[1];
    d2(i, farm_cols[i]) = lins[i].d2[0];
    d2(i, farm_cols[i] + m) = lins[i].d2[1];
  }
  return {d1, d2};
}

std::map<std::string, WindUnitModel> load_wind_registry(const std::string& path,
                                                        double base_mva) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open wind registry: " + path);
  nlohmann::json j;
  in >> j;

  std::map<std::string, WindUnitModel> out;
  const double s_sys_w = base_mva * 1e6;
  for (auto& [name, e] : j.at("models").items()) {
    WindUnitModel u;
    u.name = name;
    u.unit_mva = e.at("unit_mva").get<double>();
    u.rated_mw = e.at("rated_mw").get<double>();
    u.nu_rated = e.at("rated_wind_speed_ms").get<double>();

    const auto& el = e.at("electrical");
    const double zb = base_mva / u.unit_mva;  // unit-pu -> system-pu impedance
    const double f_hz = el.value("frequency_hz", 60.0);
    u.dfig.omega_e = 2.0 * M_PI * f_hz;
    u.dfig.r_s = el.at("r_s").get<double>() * zb;
    u.dfig.r_r = el.at("r_r").get<double>() * zb;
    u.dfig.l_ls = el.at("x_ls").get<double>() * zb / u.dfig.omega_e;
    u.dfig.l_lr = el.at("x_lr").get<double>() * zb / u.dfig.omega_e;
    u.dfig.l_m = el.at("x_m").get<double>() * zb / u.dfig.omega_e;
    u.dfig.p_e = el.value("poles", 4);

    const auto& me = e.at("mechanical_si");
    u.turbine.j_r = me.at("j_r").get<double>() / s_sys_w;
    u.turbine.j_g = me.at("j_g").get<double>() / s_sys_w;
    u.turbine.b_dt = me.at("b_dt").get<double>() / s_sys_w;
    u.turbine.k_dt = me.at("k_dt").get<double>() / s_sys_w;
    u.turbine.b_r = me.at("b_r").get<double>() / s_sys_w;
    u.turbine.b_g = me.at("b_g").get<double>() / s_sys_w;
    u.turbine.n_g = me.at("gear_ratio").get<double>();
    u.turbine.rho = me.value("rho", 1.225);
    u.turbine.a_s = me.at("swept_area_m2").get<double>();
    u.turbine.c_p = me.at("c_p").get<double>();
    u.turbine.power_scale = 1.0 / s_sys_w;

    const auto& pi = e.at("pi");
    u.pi.kp_p = pi.at("kp_p").get<double>();
    u.pi.ki_p = pi.at("ki_p").get<double>();
    u.pi.kp_q = pi.at("kp_q").get<double>();
    u.pi.ki_q = pi.at("ki_q").get<double>();

    out[name] = u;
  }
  return out;
}

WindFarmSpec make_farm(const WindUnitModel& model, int bus, int gamma,
                       double wind_speed, double q_setpoint) {
  WindFarmSpec f;
  f.bus = bus;
  f.gamma = gamma;
  f.wind_speed = wind_speed;
  f.q_setpoint = q_setpoint;
  f.model = model.name;
  f.turbine = model.turbine;
  f.dfig = model.dfig;
  f.pi = model.pi;
  f.nu_rated = model.nu_rated;
  // p_rated in system pu: power_scale is 1/S_sys_watts
  f.p_rated = model.rated_mw * 1e6 * model.turbine.power_scale;
  return f;
}

}  // namespace windcoh
