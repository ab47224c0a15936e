#include "windcoh/dynsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace windcoh {

Mat StateSpaceModel::system_matrix() const {
  const int dim = 2 * n + nz;
  Mat a = Mat::Zero(dim, dim);
  a.block(0, n, n, n).setIdentity();
  a.block(n, 0, n, n) = r1;
  for (int i = 0; i < n; ++i) a(n + i, n + i) = -d_diag[i] / m_diag[i];
  if (nz > 0) {
    a.block(n, 2 * n, n, nz) = r2;
    a.block(2 * n, 0, nz, n) = r3;
    a.block(2 * n, 2 * n, nz, nz) = r4;
  }
  return a;
}

StateSpaceModel assemble_full_model(const NetworkCase& c, const JacobianSet& j,
                                    DampingMode damping) {
  StateSpaceModel s;
  s.n = j.idx.n;
  s.nz = static_cast<int>(j.idx.p) * WindState::kDim;
  const int m = j.idx.m;

  s.m_diag.resize(s.n);
  s.d_diag = Vec::Zero(s.n);
  for (int i = 0; i < s.n; ++i) {
    s.m_diag[i] = c.generators[i].inertia_m;
    if (damping == DampingMode::UniformSlow)
      s.d_diag[i] = 0.26 * s.m_diag[i];  // swing-mode real parts near -0.13
    else if (damping == DampingMode::FromCase)
      s.d_diag[i] = c.generators[i].damping;
  }

  Eigen::PartialPivLU<Mat> lu(j.a3);
  const Mat a3inv_a1 = lu.solve(j.a1);
  const Mat minv = s.m_diag.cwiseInverse().asDiagonal();
  s.r1 = minv * (j.k11 - j.k12 * a3inv_a1);

  if (s.nz > 0) {
    // zero-padded farm input matrix over the stacked voltage vector
    Mat b = Mat::Zero(s.nz, 2 * m);
    for (int f = 0; f < j.idx.p; ++f) {
      const int col = j.idx.n + f;
      b.block(f * WindState::kDim, col, WindState::kDim, 1) = j.wind[f].b.col(0);
      b.block(f * WindState::kDim, m + col, WindState::kDim, 1) =
          j.wind[f].b.col(1);
    }
    const Mat a3inv_a2 = lu.solve(j.a2);
    s.r2 = minv * (-j.k12 * a3inv_a2);
    s.r3 = -b * a3inv_a1;
    Mat a_blk = Mat::Zero(s.nz, s.nz);
    for (int f = 0; f < j.idx.p; ++f)
      a_blk.block(f * WindState::kDim, f * WindState::kDim, WindState::kDim,
                  WindState::kDim) = j.wind[f].a;
    s.r4 = a_blk - b * a3inv_a2;
  } else {
    s.r2.resize(s.n, 0);
    s.r3.resize(0, s.n);
    s.r4.resize(0, 0);
  }

  for (int i = 0; i < s.n; ++i)
    s.labels.push_back("delta_" + std::to_string(i + 1));
  for (int i = 0; i < s.n; ++i)
    s.labels.push_back("omega_" + std::to_string(i + 1));
  static const char* wf_names[WindState::kDim] = {
      "omega_r", "omega_g", "theta_t", "i_qs", "i_ds", "i_qr", "i_dr", "x_p", "x_q"};
  for (int f = 0; f < j.idx.p; ++f)
    for (const char* nm : wf_names)
      s.labels.push_back("wf" + std::to_string(f + 1) + "_" + nm);
  return s;
}

TrajectoryMatrix simulate(const StateSpaceModel& model, const Disturbance& d,
                          double horizon_s, double dt_s) {
  if (dt_s <= 0) throw std::invalid_argument("simulate: dt must be positive");
  const Mat a = model.system_matrix();
  const int dim = static_cast<int>(a.rows());
  Vec b = Vec::Zero(dim);
  b[model.n + d.machine] = d.magnitude / model.m_diag[d.machine];

  const int steps = static_cast<int>(std::llround(horizon_s / dt_s));
  TrajectoryMatrix traj;
  traj.dt = dt_s;
  traj.labels = model.labels;
  traj.disturbance = "step dP_m machine " + std::to_string(d.machine + 1) +
                     " magnitude " + std::to_string(d.magnitude);
  traj.data.setZero(dim, steps + 1);

  // implicit trapezoidal: (I - h/2 A) x_{k+1} = (I + h/2 A) x_k + h b
  const Mat lhs = Mat::Identity(dim, dim) - 0.5 * dt_s * a;
  const Mat rhs = Mat::Identity(dim, dim) + 0.5 * dt_s * a;
  Eigen::PartialPivLU<Mat> lu(lhs);
  Vec x = Vec::Zero(dim);
  for (int k = 1; k <= steps; ++k) {
    x = lu.solve(rhs * x + dt_s * b);
    traj.data.col(k) = x;
    if (x.lpNorm<Eigen::Infinity>() > 1e6) traj.instability_flag = true;
  }
  return traj;
}

TrajectoryMatrix angle_rows(const TrajectoryMatrix& t, int n) {
  TrajectoryMatrix out;
  out.dt = t.dt;
  out.disturbance = t.disturbance;
  out.instability_flag = t.instability_flag;
  out.data = t.data.topRows(n);
  out.labels.assign(t.labels.begin(), t.labels.begin() + n);
  return out;
}

std::vector<Mode> modal_table(const StateSpaceModel& model, int r) {
  const Mat a = model.system_matrix();
  Eigen::EigenSolver<Mat> es(a);
  if (es.info() != Eigen::Success)
    throw NumericalError("modal_table: eigensolver failed");
  const auto vals = es.eigenvalues();
  const auto vecs = es.eigenvectors();
  const int dim = static_cast<int>(a.rows());
  const double scale = vals.cwiseAbs().maxCoeff();

  std::vector<Mode> modes;
  std::vector<char> used(dim, 0);
  for (int i = 0; i < dim; ++i) {
    if (used[i]) continue;
    used[i] = 1;
    Mode mo;
    mo.eigenvalue = vals[i];
    mo.oscillatory = std::abs(vals[i].imag()) > 1e-9 * std::max(1.0, scale);
    if (mo.oscillatory) {
      if (vals[i].imag() < 0) mo.eigenvalue = std::conj(vals[i]);
      // consume the conjugate partner
      for (int k = i + 1; k < dim; ++k)
        if (!used[k] &&
            std::abs(vals[k] - std::conj(vals[i])) <= 1e-9 * std::max(1.0, scale)) {
          used[k] = 1;
          break;
        }
      mo.frequency_hz = std::abs(mo.eigenvalue.imag()) / (2.0 * M_PI);
      mo.damping_ratio = -mo.eigenvalue.real() / std::abs(mo.eigenvalue);
    }
    // angle/speed participation share tags the electromechanical modes
    const double swing_part = vecs.col(i).head(2 * model.n).squaredNorm();
    mo.swing = swing_part >= 0.5 * vecs.col(i).squaredNorm();
    modes.push_back(mo);
  }
  std::sort(modes.begin(), modes.end(), [](const Mode& x, const Mode& y) {
    if (x.frequency_hz != y.frequency_hz) return x.frequency_hz < y.frequency_hz;
    return x.eigenvalue.real() < y.eigenvalue.real();
  });
  if (r > 1) {
    int tagged = 0;
    for (auto& mo : modes) {
      if (mo.oscillatory && mo.swing && mo.frequency_hz > 1e-6) {
        mo.slow = tagged < r - 1;
        ++tagged;
      }
    }
  }
  return modes;
}

}  // namespace windcoh
