#include "windcoh/perturbation.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace windcoh {

namespace {

void require_same_shape(const Mat& a, const Mat& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << "jacobian_shift: " << what << " dimension mismatch (" << a.rows()
       << "x" << a.cols() << " vs " << b.rows() << "x" << b.cols() << ")";
    throw NumericalError(os.str());
  }
}

// Neumann tail of (P + eps*Q)^{-1} = P^{-1} + eps * X, i.e.
// X = (-T + eps T^2 - eps^2 T^3 + ...) P^{-1} with T = P^{-1} Q.
// Adaptive order, increment-relative target 1e-8, cap 50.
Mat neumann_tail(const Eigen::PartialPivLU<Mat>& p_lu, const Mat& q, double eps,
                 int& order, bool& converged) {
  const Mat t = p_lu.solve(q);
  const Mat pinv = p_lu.inverse();
  Mat power = t;  // T^{k+1}
  Mat acc = -t;
  double sign = 1.0;
  double prev_inc = std::numeric_limits<double>::infinity();
  int grow = 0;
  converged = false;
  order = 1;
  for (int k = 1; k < 50; ++k) {
    power = t * power * eps;
    const double inc = power.norm();
    acc += sign * power;
    sign = -sign;
    order = k + 1;
    if (inc <= 1e-8 * std::max(1.0, acc.norm())) {
      converged = true;
      break;
    }
    grow = inc > prev_inc ? grow + 1 : 0;
    prev_inc = inc;
    if (grow >= 3) break;  // diverging
  }
  if (order >= 49 && !converged) converged = false;
  return acc * pinv;
}

}  // namespace

void jacobian_shift(const JacobianSet& nominal, const JacobianSet& barred,
                    Mat& delta_k11, Mat& delta_k12, Mat& delta_k21,
                    Mat& delta_k22, Mat& delta_a1, Mat& delta_a3_total) {
  require_same_shape(nominal.k11, barred.k11, "K11");
  require_same_shape(nominal.k12, barred.k12, "K12");
  require_same_shape(nominal.a1, barred.a1, "A1");
  require_same_shape(nominal.a3, barred.a3, "A3");
  delta_k11 = barred.k11 - nominal.k11;
  delta_k12 = barred.k12 - nominal.k12;
  delta_k21 = barred.k21 - nominal.k21;
  delta_k22 = barred.k22 - nominal.k22;
  delta_a1 = barred.a1 - nominal.a1;
  delta_a3_total = barred.a3 - nominal.a3;
}

std::vector<Mat> structural_A3_terms(const JacobianSet& barred) {
  const int n = barred.idx.n, m = barred.idx.m;
  std::vector<Mat> out;
  for (int f = 0; f < barred.idx.p; ++f) {
    Mat a = Mat::Zero(2 * m, 2 * m);
    const auto& z = barred.wind[f].zeta;
    const int row = n + f;
    a(row, row) = z[0];
    a(row, m + row) = z[1];
    a(m + row, row) = z[2];
    a(m + row, m + row) = z[3];
    out.push_back(std::move(a));
  }
  return out;
}

Mat inversion_correction(const Mat& a3, const Mat& x) {
  Eigen::PartialPivLU<Mat> lu(a3);
  const Mat a3inv_x = lu.solve(x);
  Mat t = a3inv_x;
  t.diagonal().array() += 1.0;  // I + A3^{-1} x
  Eigen::PartialPivLU<Mat> lt(t);
  if (lt.rcond() < 1e-12) {
    std::ostringstream os;
    os << "inversion_correction: I + A3^{-1}x near singular (rcond "
       << lt.rcond() << "); penetration too large for the expansion";
    throw NumericalError(os.str());
  }
  const Mat corr = -lt.solve(a3inv_x * lu.inverse());

  // matrix-inversion-lemma identity check
  const Mat lhs = (a3 + x) * (lu.inverse() + corr);
  const double err = (lhs - Mat::Identity(a3.rows(), a3.cols())).norm() /
                     std::sqrt(static_cast<double>(a3.rows()));
  if (!(err < 1e-8)) {
    std::ostringstream os;
    os << "inversion_correction: inversion-lemma identity residual " << err;
    throw NumericalError(os.str());
  }
  return corr;
}

PerturbationLedger build_ledger(const JacobianSet& nominal,
                                const JacobianSet& barred) {
  PerturbationLedger led;
  Mat delta_a3_total;
  jacobian_shift(nominal, barred, led.delta_k11, led.delta_k12, led.delta_k21,
                 led.delta_k22, led.delta_a1, delta_a3_total);
  led.a3_terms = structural_A3_terms(barred);
  // delta_a3 = (Ā3 - A3) - sum gamma_i A3^i
  led.delta_a3 = delta_a3_total;
  for (size_t f = 0; f < led.a3_terms.size(); ++f)
    led.delta_a3 -= static_cast<double>(barred.gammas[f]) * led.a3_terms[f];

  led.x_shift = delta_a3_total;
  led.inv_correction = inversion_correction(nominal.a3, led.x_shift);

  Eigen::PartialPivLU<Mat> lu(nominal.a3);
  const Mat a3inv = lu.inverse();
  const Mat s = a3inv + led.inv_correction;  // (A3 + x)^{-1} via the lemma
  led.kappa_l = led.delta_k11 - nominal.k12 * s * led.delta_a1 -
                led.delta_k12 * s * (nominal.a1 + led.delta_a1);
  led.delta_l0 = -nominal.k12 * led.inv_correction * nominal.a1 + led.kappa_l;

  const Mat l0 = kron_reduce(nominal);
  led.l_assembled = l0 + led.delta_l0;
  led.l_direct = kron_reduce(barred);
  led.two_path_rel_error =
      (led.l_assembled - led.l_direct).norm() / led.l_direct.norm();
  return led;
}

std::vector<int> bus_areas(const NetworkCase& c, const CaseIndex& idx,
                           const CoherencyPartition& part) {
  const int m = idx.m;
  std::vector<std::vector<std::pair<int, double>>> adj(m);
  for (const auto& l : c.lines) {
    const int a = c.bus_position(l.from), b = c.bus_position(l.to);
    const double w = 1.0 / l.b;  // reactance as electrical distance
    adj[a].push_back({b, w});
    adj[b].push_back({a, w});
  }
  std::vector<double> dist(m, std::numeric_limits<double>::infinity());
  std::vector<int> area(m, -1);
  using Item = std::tuple<double, int, int>;  // (dist, bus pos, area)
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (int i = 0; i < idx.n; ++i) {
    const int pos = idx.machine_pos[i];
    const int a = part.area_of[i];
    if (0.0 < dist[pos] || (dist[pos] == 0.0 && area[pos] > a)) {
      dist[pos] = 0.0;
      area[pos] = a;
      pq.push({0.0, pos, a});
    }
  }
  while (!pq.empty()) {
    auto [d, u, a] = pq.top();
    pq.pop();
    if (d > dist[u] || (d == dist[u] && a != area[u])) continue;
    for (auto [v, w] : adj[u]) {
      const double nd = d + w;
      if (nd < dist[v] || (nd == dist[v] && a < area[v])) {
        dist[v] = nd;
        area[v] = a;
        pq.push({nd, v, a});
      }
    }
  }
  std::vector<int> out(m, 0);
  for (int k = 0; k < m; ++k) out[k] = area[idx.pos_of_internal[k]];
  return out;
}

void epsilon_split_perturbation(PerturbationLedger& led,
                                const JacobianSet& nominal,
                                const std::vector<int>& bus_area,
                                double epsilon) {
  const int m = nominal.idx.m;
  auto area_of_vcoord = [&](int k) { return bus_area[k % m]; };
  auto area_of_eq = [&](int r) { return bus_area[r % m]; };

  Mat a3_int = Mat::Zero(2 * m, 2 * m);
  for (int r = 0; r < 2 * m; ++r)
    for (int k = 0; k < 2 * m; ++k)
      if (area_of_eq(r) == area_of_vcoord(k)) a3_int(r, k) = nominal.a3(r, k);
  const Mat a3_ext = (nominal.a3 - a3_int) / epsilon;

  Eigen::PartialPivLU<Mat> li(a3_int);
  if (li.rcond() < 1e-14)
    throw NumericalError("epsilon_split_perturbation: A3^I singular");

  int order1 = 0, order2 = 0;
  bool ok1 = false, ok2 = false;
  led.x1_eps = neumann_tail(li, a3_ext, epsilon, order1, ok1);
  led.p1a = li.inverse() * led.x_shift;
  led.p1a.diagonal().array() += 1.0;  // I + (A3^I)^{-1} x
  Eigen::PartialPivLU<Mat> lp(led.p1a);
  led.x2_eps = neumann_tail(lp, led.x1_eps * led.x_shift, epsilon, order2, ok2);
  led.series_order = std::max(order1, order2);
  led.series_converged = ok1 && ok2;
  if (!led.series_converged) {
    // documented fallback: keep the unsplit perturbation
    led.p_a = -led.inv_correction;
    led.p_b = Mat::Zero(led.inv_correction.rows(), led.inv_correction.cols());
    led.delta_l_int = led.delta_l0;
    led.delta_l_ext = Mat::Zero(led.delta_l0.rows(), led.delta_l0.cols());
    return;
  }

  const Mat ai_inv = li.inverse();
  const Mat p1a_inv = lp.inverse();
  const Mat s = ai_inv + epsilon * led.x1_eps;  // = A3^{-1} within truncation
  led.p_a = p1a_inv * ai_inv * led.x_shift * ai_inv;
  led.p_b = led.x2_eps * s * led.x_shift * s +
            p1a_inv * led.x1_eps * led.x_shift * s +
            p1a_inv * ai_inv * led.x_shift * led.x1_eps;
  led.delta_l_int = nominal.k12 * led.p_a * nominal.a1 + led.kappa_l;
  led.delta_l_ext = nominal.k12 * led.p_b * nominal.a1;
}

EquivalentLaplacian equivalent_laplacian(const Mat& l) {
  EquivalentLaplacian eq;
  eq.l = l;
  eq.l_eq = l;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < l.cols(); ++j)
      if (j != i) off += l(i, j);
    eq.l_eq(i, i) = -off;
  }
  return eq;
}

void split_equivalent(EquivalentLaplacian& eq, const ReducedSwingModel& nominal,
                      const CoherencyPartition& part) {
  const int n = static_cast<int>(eq.l_eq.rows());
  const Mat resid = eq.l_eq - nominal.l0;

  // internal part: per-area diagonal blocks, doubly centered so that both
  // U^T Delta and Delta U vanish
  eq.delta_eq_int = Mat::Zero(n, n);
  for (const auto& area : part.areas) {
    const int q = static_cast<int>(area.size());
    Mat block(q, q);
    for (int a = 0; a < q; ++a)
      for (int b = 0; b < q; ++b) block(a, b) = resid(area[a], area[b]);
    const Mat h = Mat::Identity(q, q) - Mat::Constant(q, q, 1.0 / q);
    Mat centered = h * block * h;
    for (int a = 0; a < q; ++a) {
      double rowsum = 0.0;
      for (int b = 0; b < q; ++b)
        if (b != a) rowsum += centered(a, b);
      centered(a, a) = -rowsum;  // exact zero row sums
    }
    for (int a = 0; a < q; ++a)
      for (int b = 0; b < q; ++b) eq.delta_eq_int(area[a], area[b]) = centered(a, b);
  }
  eq.delta_eq_ext = (resid - eq.delta_eq_int) / nominal.epsilon;
}

TwoTimeScaleModel assemble_T_tilde(const ReducedSwingModel& nominal,
                                   const EquivalentLaplacian& eq,
                                   const TimeScaleTransform& xf,
                                   const CoherencyPartition& part) {
  TwoTimeScaleModel t;
  t.r = part.r;
  const Mat minv = nominal.m_diag.cwiseInverse().asDiagonal();
  const Mat mi = minv * eq.delta_eq_int;
  const Mat me = minv * eq.delta_eq_ext;
  const Mat m0e = minv * nominal.l0_ext;
  const Mat m0i = minv * nominal.l0_int;
  const double e = nominal.epsilon;
  t.t11 = xf.c * mi * xf.u + e * xf.c * m0e * xf.u + e * xf.c * me * xf.u;
  t.t12 = xf.c * mi * xf.g_dagger + e * xf.c * m0e * xf.g_dagger +
          e * xf.c * me * xf.g_dagger;
  t.t21 = xf.g * mi * xf.u + e * xf.g * m0e * xf.u + e * xf.g * me * xf.u;
  t.t22 = xf.g * m0i * xf.g_dagger + xf.g * mi * xf.g_dagger +
          e * xf.g * m0e * xf.g_dagger + e * xf.g * me * xf.g_dagger;
  return t;
}

}  // namespace windcoh
