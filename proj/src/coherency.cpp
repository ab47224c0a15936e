#include "windcoh/coherency.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "windcoh/detail/matching.hpp"

namespace windcoh {

namespace {

// deterministic column convention: unit norm, largest-magnitude entry positive
void canonicalize_columns(Mat& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    const double nrm = v.col(j).norm();
    if (nrm > 0) v.col(j) /= nrm;
    Eigen::Index imax = 0;
    v.col(j).cwiseAbs().maxCoeff(&imax);
    if (v(imax, j) < 0) v.col(j) = -v.col(j);
  }
}

}  // namespace

SlowEigenspace slow_eigenbasis(const Vec& m_diag, const Mat& laplacian, int r) {
  const int n = static_cast<int>(laplacian.rows());
  if (r < 1 || r > n)
    throw std::invalid_argument("slow_eigenbasis: r out of range");
  const Mat a = m_diag.cwiseInverse().asDiagonal() * laplacian;

  Eigen::EigenSolver<Mat> es(a);
  if (es.info() != Eigen::Success)
    throw NumericalError("slow_eigenbasis: eigensolver failed");
  const Eigen::VectorXcd vals = es.eigenvalues();
  const Eigen::MatrixXcd vecs = es.eigenvectors();

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    const double ai = std::abs(vals[i]), aj = std::abs(vals[j]);
    if (ai != aj) return ai < aj;
    if (vals[i].real() != vals[j].real()) return vals[i].real() < vals[j].real();
    return vals[i].imag() < vals[j].imag();
  });

  SlowEigenspace out;
  out.v.resize(n, r);
  out.eigenvalues.resize(r);
  std::vector<char> used(n, 0);
  int col = 0;
  const double scale = vals.cwiseAbs().maxCoeff();
  for (int oi = 0; oi < n && col < r; ++oi) {
    const int i = order[oi];
    if (used[i]) continue;
    used[i] = 1;
    const double imag_tol = 1e-9 * std::max(1.0, scale);
    if (std::abs(vals[i].imag()) <= imag_tol) {
      out.v.col(col) = vecs.col(i).real();
      out.eigenvalues[col] = vals[i];
      ++col;
    } else {
      // conjugate pair spans a 2d real invariant subspace
      for (int oj = oi + 1; oj < n; ++oj) {
        const int k = order[oj];
        if (!used[k] && std::abs(vals[k] - std::conj(vals[i])) <=
                            1e-9 * std::max(1.0, scale)) {
          used[k] = 1;
          break;
        }
      }
      out.v.col(col) = vecs.col(i).real();
      out.eigenvalues[col] = vals[i];
      ++col;
      if (col < r) {
        out.v.col(col) = vecs.col(i).imag();
        out.eigenvalues[col] = std::conj(vals[i]);
        ++col;
      } else {
        out.degenerate_gap = true;  // pair truncated at the boundary
      }
    }
  }
  canonicalize_columns(out.v);

  // advisory spectral gap between |lambda_r| and |lambda_{r+1}|
  std::vector<double> mags(n);
  for (int i = 0; i < n; ++i) mags[i] = std::abs(vals[order[i]]);
  if (r < n) {
    out.gap_ratio = mags[r] / std::max(mags[r - 1], 1e-300);
    if (std::abs(mags[r] - mags[r - 1]) < 1e-6 * std::max(mags[r - 1], 1e-300))
      out.degenerate_gap = true;
  }

  out.frequencies_hz.resize(r - 1);
  for (int i = 1; i < r; ++i)
    out.frequencies_hz[i - 1] =
        std::sqrt(std::abs(out.eigenvalues[i])) / (2.0 * M_PI);
  std::sort(out.frequencies_hz.data(),
            out.frequencies_hz.data() + out.frequencies_hz.size());
  return out;
}

std::vector<int> reference_machines(const Mat& v) {
  const int n = static_cast<int>(v.rows());
  const int r = static_cast<int>(v.cols());
  Mat w = v;
  std::vector<char> row_done(n, 0), col_done(r, 0);
  std::vector<int> refs;
  const double scale = w.cwiseAbs().maxCoeff();
  for (int step = 0; step < r; ++step) {
    int pi = -1, pj = -1;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      if (row_done[i]) continue;
      for (int j = 0; j < r; ++j) {
        if (col_done[j]) continue;
        const double a = std::abs(w(i, j));
        if (a > best) {
          best = a;
          pi = i;
          pj = j;
        }
      }
    }
    if (best < 1e-12 * std::max(scale, 1.0))
      throw NumericalError("reference_machines: rank-deficient eigenbasis");
    for (int i = 0; i < n; ++i) {
      if (row_done[i] || i == pi) continue;
      const double factor = w(i, pj) / w(pi, pj);
      w.row(i) -= factor * w.row(pi);
    }
    row_done[pi] = 1;
    col_done[pj] = 1;
    refs.push_back(pi);
  }
  return refs;
}

Mat grouping_matrix(const Mat& v, const std::vector<int>& refs,
                    std::vector<int>* row_machines) {
  const int n = static_cast<int>(v.rows());
  const int r = static_cast<int>(refs.size());
  Mat vr1(r, r);
  for (int i = 0; i < r; ++i) vr1.row(i) = v.row(refs[i]);
  Eigen::PartialPivLU<Mat> lu(vr1);
  if (lu.rcond() < 1e-12)
    throw NumericalError(
        "grouping_matrix: reference rows are singular; try a different r");

  std::vector<char> is_ref(n, 0);
  for (int i : refs) is_ref[i] = 1;
  std::vector<int> rows(refs.begin(), refs.end());
  for (int i = 0; i < n; ++i)
    if (!is_ref[i]) rows.push_back(i);

  Mat v_l(n, r);
  v_l.topRows(r).setIdentity();  // V_r1 * V_r1^{-1} exactly
  for (int i = r; i < n; ++i)
    v_l.row(i) = lu.solve(v.row(rows[i]).transpose()).transpose();
  if (row_machines) *row_machines = rows;
  return v_l;
}

CoherencyPartition assign_areas(const Mat& v_l,
                                const std::vector<int>& row_machines,
                                const std::vector<int>& refs) {
  const int n = static_cast<int>(v_l.rows());
  const int r = static_cast<int>(refs.size());
  CoherencyPartition part;
  part.r = r;
  part.reference_machines = refs;
  part.area_of.assign(n, -1);
  part.margins = Vec::Zero(n);
  part.grouping = v_l;
  part.grouping_rows = row_machines;

  for (int i = 0; i < r; ++i) {
    part.area_of[refs[i]] = i;
    part.margins[refs[i]] = 1.0;
  }
  for (int k = r; k < n; ++k) {
    const int machine = row_machines[k];
    int best = 0;
    double best_v = -1.0, second = -1.0;
    bool tie = false;
    for (int j = 0; j < r; ++j) {
      const double a = std::abs(v_l(k, j));
      if (a > best_v) {
        second = best_v;
        best_v = a;
        best = j;
        tie = false;
      } else if (a == best_v) {
        tie = true;  // keep the lower area index
        second = a;
      } else if (a > second) {
        second = a;
      }
    }
    part.area_of[machine] = best;
    part.margins[machine] = best_v - std::max(second, 0.0);
    if (tie) part.ties.push_back(machine);
  }

  part.areas.assign(r, {});
  for (int a = 0; a < r; ++a) part.areas[a].push_back(refs[a]);
  for (int i = 0; i < n; ++i) {
    if (part.area_of[i] < 0) continue;
    if (i == refs[part.area_of[i]]) continue;
    part.areas[part.area_of[i]].push_back(i);
  }
  for (auto& area : part.areas)
    std::sort(area.begin() + 1, area.end());
  return part;
}

CoherencyPartition canonicalize(const CoherencyPartition& p) {
  std::vector<int> order(p.r);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return p.reference_machines[a] < p.reference_machines[b];
  });
  CoherencyPartition out = p;
  out.areas.clear();
  out.reference_machines.clear();
  for (int a : order) {
    out.areas.push_back(p.areas[a]);
    out.reference_machines.push_back(p.reference_machines[a]);
  }
  out.area_of.assign(p.area_of.size(), -1);
  for (int a = 0; a < out.r; ++a)
    for (int i : out.areas[a]) out.area_of[i] = a;
  return out;
}

CoherencyResult identify_coherency(const Vec& m_diag, const Mat& laplacian,
                                   int r) {
  CoherencyResult res;
  res.eigenspace = slow_eigenbasis(m_diag, laplacian, r);
  const auto refs = reference_machines(res.eigenspace.v);
  std::vector<int> rows;
  const Mat v_l = grouping_matrix(res.eigenspace.v, refs, &rows);
  res.partition = canonicalize(assign_areas(v_l, rows, refs));
  return res;
}

PartitionDelta partition_distance(const CoherencyPartition& a,
                                  const CoherencyPartition& b) {
  PartitionDelta d;
  std::vector<std::vector<double>> overlap(a.r, std::vector<double>(b.r, 0.0));
  for (int i = 0; i < a.r; ++i)
    for (int j = 0; j < b.r; ++j) {
      int common = 0;
      for (int x : a.areas[i])
        if (std::find(b.areas[j].begin(), b.areas[j].end(), x) !=
            b.areas[j].end())
          ++common;
      overlap[i][j] = common;
    }
  const auto match = detail::max_overlap_assignment(overlap);
  for (int i = 0; i < a.r; ++i) {
    const int j = match[i];
    for (int x : a.areas[i]) {
      const bool stays =
          j >= 0 && std::find(b.areas[j].begin(), b.areas[j].end(), x) !=
                        b.areas[j].end();
      if (!stays) d.moved.insert(x);
    }
    if (j >= 0 && a.reference_machines[i] != b.reference_machines[j])
      d.reference_changes.push_back(
          {a.reference_machines[i], b.reference_machines[j]});
  }
  return d;
}

}  // namespace windcoh
