#include "windcoh/linearize.hpp"

#include <cmath>
#include <sstream>

namespace windcoh {

void generator_jacobians(const NetworkCase& c, const OperatingPoint& op,
                         Mat& k11, Mat& k12, Mat& k21, Mat& k22) {
  const CaseIndex idx = make_index(c);
  const int n = idx.n, m = idx.m;
  k11 = Mat::Zero(n, n);
  k21 = Mat::Zero(n, n);
  k12 = Mat::Zero(n, 2 * m);
  k22 = Mat::Zero(n, 2 * m);
  for (int i = 0; i < n; ++i) {
    const int pos = idx.machine_pos[i];
    const auto e = eval_machine(c.generators[i], op.delta0[i], op.v_re0[pos],
                                op.v_im0[pos]);
    // machine i's bus is internal index i by construction
    k11(i, i) = -e.dp_ddelta;
    k21(i, i) = -e.dq_ddelta;
    k12(i, i) = -e.dp_dvre;
    k12(i, m + i) = -e.dp_dvim;
    k22(i, i) = -e.dq_dvre;
    k22(i, m + i) = -e.dq_dvim;
  }
}

JacobianSet network_jacobians(const NetworkCase& c, const OperatingPoint& op) {
  JacobianSet js;
  js.idx = make_index(c);
  const int n = js.idx.n, p = js.idx.p, m = js.idx.m;
  js.barred = p > 0;

  generator_jacobians(c, op, js.k11, js.k12, js.k21, js.k22);

  const FlowEval flow = eval_flow(c, op.v_re0, op.v_im0, true);

  // flow Jacobian in internal ordering
  Mat fp(m, 2 * m), fq(m, 2 * m);
  for (int j = 0; j < m; ++j) {
    const int pj = js.idx.pos_of_internal[j];
    for (int k = 0; k < m; ++k) {
      const int pk = js.idx.pos_of_internal[k];
      fp(j, k) = flow.dp_dvre(pj, pk);
      fp(j, m + k) = flow.dp_dvim(pj, pk);
      fq(j, k) = flow.dq_dvre(pj, pk);
      fq(j, m + k) = flow.dq_dvim(pj, pk);
    }
  }

  js.a3 = Mat::Zero(2 * m, 2 * m);
  js.a3.topRows(m) = -fp;
  js.a3.bottomRows(m) = -fq;
  js.a1 = Mat::Zero(2 * m, n);
  for (int i = 0; i < n; ++i) {
    const int pos = js.idx.machine_pos[i];
    const auto e = eval_machine(c.generators[i], op.delta0[i], op.v_re0[pos],
                                op.v_im0[pos]);
    js.a1(i, i) = e.dp_ddelta;       // = -K11
    js.a1(m + i, i) = e.dq_ddelta;   // = -K21
    js.a3(i, i) += e.dp_dvre;
    js.a3(i, m + i) += e.dp_dvim;
    js.a3(m + i, i) += e.dq_dvre;
    js.a3(m + i, m + i) += e.dq_dvim;
  }

  const int nz = p * WindState::kDim;
  js.a2 = Mat::Zero(2 * m, nz);
  for (int f = 0; f < p; ++f) {
    const int pos = js.idx.farm_pos[f];
    const auto lin = linearize_wind(
        c.wind_farms[f], op.wind0[f],
        std::complex<double>(op.v_re0[pos], op.v_im0[pos]));
    js.wind.push_back(lin);
    js.gammas.push_back(c.wind_farms[f].gamma);
    const int row = n + f;  // farm f's internal bus index
    js.a3(row, row) += lin.d1[0];
    js.a3(row, m + row) += lin.d1[1];
    js.a3(m + row, row) += lin.d2[0];
    js.a3(m + row, m + row) += lin.d2[1];
    js.a2.block(row, f * WindState::kDim, 1, WindState::kDim) = lin.c1;
    js.a2.block(m + row, f * WindState::kDim, 1, WindState::kDim) = lin.c2;
  }

  // per-class flow blocks; K5/K6 carry the sign making A3's non-gen rows
  // equal them directly
  js.k1 = fp.topRows(n);
  js.k2 = fq.topRows(n);
  js.k3 = fp.middleRows(n, p);
  js.k4 = fq.middleRows(n, p);
  js.k5 = -fp.bottomRows(m - n - p);
  js.k6 = -fq.bottomRows(m - n - p);

  Eigen::PartialPivLU<Mat> lu(js.a3);
  js.a3_rcond = lu.rcond();
  if (js.a3_rcond < 1e-15) {
    std::ostringstream os;
    os << "network_jacobians: A3 numerically singular (rcond " << js.a3_rcond
       << ")";
    throw NumericalError(os.str());
  }
  return js;
}

Mat kron_reduce(const Mat& k11, const Mat& k12, const Mat& a1, const Mat& a3) {
  Eigen::PartialPivLU<Mat> lu(a3);
  if (lu.rcond() < 1e-15) {
    std::ostringstream os;
    os << "kron_reduce: A3 numerically singular (rcond " << lu.rcond() << ")";
    throw NumericalError(os.str());
  }
  return k11 - k12 * lu.solve(a1);
}

Mat kron_reduce(const JacobianSet& j) {
  return kron_reduce(j.k11, j.k12, j.a1, j.a3);
}

ReducedSwingModel reduced_swing_model(const NetworkCase& c, const JacobianSet& j) {
  ReducedSwingModel r;
  const int n = static_cast<int>(c.generators.size());
  r.m_diag.resize(n);
  for (int i = 0; i < n; ++i) r.m_diag[i] = c.generators[i].inertia_m;
  r.l0 = kron_reduce(j);
  r.l0_int = r.l0;
  r.l0_ext = Mat::Zero(n, n);
  r.epsilon = 1.0;
  return r;
}

void split_internal_external(const Mat& l0, const CoherencyPartition& part,
                             Mat& l0_int, Mat& l0_ext, double& epsilon) {
  const int n = static_cast<int>(l0.rows());
  double max_ext = 0.0, min_int = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double a = std::abs(l0(i, j));
      if (part.area_of[i] == part.area_of[j])
        min_int = std::min(min_int, a);
      else
        max_ext = std::max(max_ext, a);
    }
  if (max_ext == 0.0 || !std::isfinite(min_int) || min_int == 0.0)
    epsilon = 1.0;  // single area, or all singletons
  else
    epsilon = std::min(1.0, max_ext / min_int);

  l0_int = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double rowsum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j || part.area_of[i] != part.area_of[j]) continue;
      l0_int(i, j) = l0(i, j);
      rowsum += l0(i, j);
    }
    l0_int(i, i) = -rowsum;
  }
  l0_ext = (l0 - l0_int) / epsilon;
}

TimeScaleTransform timescale_transform(const CoherencyPartition& part,
                                       const Vec& m_diag) {
  const int n = static_cast<int>(m_diag.size());
  const int r = part.r;
  TimeScaleTransform xf;
  xf.u = Mat::Zero(n, r);
  xf.c = Mat::Zero(r, n);
  xf.area_inertia = Vec::Zero(r);
  int fast_rows = 0;
  for (int a = 0; a < r; ++a) {
    for (int i : part.areas[a]) {
      xf.u(i, a) = 1.0;
      xf.area_inertia[a] += m_diag[i];
    }
    fast_rows += static_cast<int>(part.areas[a].size()) - 1;
    for (int i : part.areas[a]) xf.c(a, i) = m_diag[i] / xf.area_inertia[a];
  }
  xf.g = Mat::Zero(fast_rows, n);
  int row = 0;
  for (int a = 0; a < r; ++a) {
    const auto& area = part.areas[a];
    for (size_t j = 1; j < area.size(); ++j) {
      xf.g(row, area[0]) = -1.0;
      xf.g(row, area[j]) = 1.0;
      ++row;
    }
  }
  if (fast_rows > 0) {
    const Mat ggt = xf.g * xf.g.transpose();
    xf.g_dagger = xf.g.transpose() * ggt.inverse();
  } else {
    xf.g_dagger = Mat::Zero(n, 0);
  }
  return xf;
}

TwoTimeScaleModel assemble_T(const ReducedSwingModel& model,
                             const TimeScaleTransform& xf,
                             const CoherencyPartition& part) {
  TwoTimeScaleModel t;
  t.r = part.r;
  const Mat minv_le = model.m_diag.cwiseInverse().asDiagonal() * model.l0_ext;
  const Mat minv_li = model.m_diag.cwiseInverse().asDiagonal() * model.l0_int;
  const double e = model.epsilon;
  t.t11 = e * xf.c * minv_le * xf.u;
  t.t12 = e * xf.c * minv_le * xf.g_dagger;
  t.t21 = e * xf.g * minv_le * xf.u;
  t.t22 = xf.g * minv_li * xf.g_dagger + e * xf.g * minv_le * xf.g_dagger;
  return t;
}

}  // namespace windcoh
