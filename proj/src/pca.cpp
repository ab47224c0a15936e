#include "windcoh/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "windcoh/detail/matching.hpp"

namespace windcoh {

PCAResult pca_weightings(const Mat& m, int c, bool center) {
  const int rho = static_cast<int>(m.rows());
  const int s = static_cast<int>(m.cols());
  if (rho < 1 || s < rho || c < 1)
    throw std::invalid_argument("pca_weightings: need s >= rho >= 1, c >= 1");

  Mat x = m;
  if (center)
    x.colwise() -= m.rowwise().mean();

  Eigen::BDCSVD<Mat> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  PCAResult out;
  out.singular_values = svd.singularValues();
  out.k = svd.matrixU() * out.singular_values.asDiagonal();
  const Mat recon = out.k * svd.matrixV().transpose();
  const double denom = std::max(x.norm(), 1e-300);
  out.reconstruction_rel_error = (recon - x).norm() / denom;

  // pick the c columns of K with highest sample variance
  const int cols = static_cast<int>(out.k.cols());
  std::vector<std::pair<double, int>> var(cols);
  for (int j = 0; j < cols; ++j) {
    const double mean = out.k.col(j).mean();
    const double v =
        (out.k.col(j).array() - mean).matrix().squaredNorm() / std::max(rho - 1, 1);
    var[j] = {v, j};
  }
  std::stable_sort(var.begin(), var.end(), [](const auto& a, const auto& b) {
    return a.first > b.first;
  });
  const int take = std::min(c, cols);
  if (take < c) out.rank_deficient = true;
  const double top_var = var.empty() ? 0.0 : var[0].first;
  for (int j = 0; j < take; ++j) {
    out.selected_axes.push_back(var[j].second);
    if (j > 0 && var[j].first < 1e-12 * std::max(top_var, 1e-300))
      out.rank_deficient = true;  // padded from near-null columns
  }
  out.coords.resize(rho, take);
  for (int j = 0; j < take; ++j) out.coords.col(j) = out.k.col(out.selected_axes[j]);
  return out;
}

namespace {

double kmeans_once(const Mat& pts, int r, int seed, std::vector<int>& labels) {
  const int np = static_cast<int>(pts.rows());
  std::vector<int> centers;
  centers.push_back(seed % np);
  while (static_cast<int>(centers.size()) < r) {
    int best = -1;
    double best_d = -1.0;
    for (int i = 0; i < np; ++i) {
      double dmin = std::numeric_limits<double>::infinity();
      for (int cidx : centers)
        dmin = std::min(dmin, (pts.row(i) - pts.row(cidx)).squaredNorm());
      if (dmin > best_d) {
        best_d = dmin;
        best = i;
      }
    }
    centers.push_back(best);
  }
  Mat mu(r, pts.cols());
  for (int k = 0; k < r; ++k) mu.row(k) = pts.row(centers[k]);

  labels.assign(np, 0);
  for (int it = 0; it < 100; ++it) {
    bool changed = false;
    for (int i = 0; i < np; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int k = 0; k < r; ++k) {
        const double d = (pts.row(i) - mu.row(k)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = k;
        }
      }
      if (labels[i] != best) {
        labels[i] = best;
        changed = true;
      }
    }
    // recompute centroids; reseed an emptied cluster at its farthest point
    for (int k = 0; k < r; ++k) {
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(pts.cols());
      int count = 0;
      for (int i = 0; i < np; ++i)
        if (labels[i] == k) {
          acc += pts.row(i);
          ++count;
        }
      if (count > 0) {
        mu.row(k) = acc / count;
      } else {
        int far = 0;
        double fd = -1.0;
        for (int i = 0; i < np; ++i) {
          const double d = (pts.row(i) - mu.row(labels[i])).squaredNorm();
          if (d > fd) {
            fd = d;
            far = i;
          }
        }
        mu.row(k) = pts.row(far);
        labels[far] = k;
        changed = true;
      }
    }
    if (!changed) break;
  }
  double inertia = 0.0;
  for (int i = 0; i < np; ++i)
    inertia += (pts.row(i) - mu.row(labels[i])).squaredNorm();
  return inertia;
}

}  // namespace

std::vector<int> cluster_coords(const Mat& coords, int r, int restarts) {
  const int np = static_cast<int>(coords.rows());
  if (r < 1 || r > np)
    throw std::invalid_argument("cluster_coords: r out of range");
  std::vector<int> best_labels;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int seed = 0; seed < restarts; ++seed) {
    std::vector<int> labels;
    const double inertia = kmeans_once(coords, r, seed, labels);
    if (inertia < best_inertia - 1e-15) {
      best_inertia = inertia;
      best_labels = labels;
    }
  }
  return best_labels;
}

ClusterComparison compare_partitions(const std::vector<int>& a,
                                     const std::vector<int>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("compare_partitions: different machine sets");
  const int n = static_cast<int>(a.size());
  ClusterComparison out;
  long agree = 0, total = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      ++total;
      if ((a[i] == a[j]) == (b[i] == b[j])) ++agree;
    }
  out.agreement = total ? static_cast<double>(agree) / total : 1.0;

  const int ra = 1 + *std::max_element(a.begin(), a.end());
  const int rb = 1 + *std::max_element(b.begin(), b.end());
  std::vector<std::vector<double>> overlap(ra, std::vector<double>(rb, 0.0));
  for (int i = 0; i < n; ++i) overlap[a[i]][b[i]] += 1.0;
  const auto match = detail::max_overlap_assignment(overlap);
  for (int i = 0; i < n; ++i)
    if (match[a[i]] != b[i]) out.moved.insert(i);
  return out;
}

std::vector<int> partition_labels(const CoherencyPartition& p) {
  return p.area_of;
}

}  // namespace windcoh
