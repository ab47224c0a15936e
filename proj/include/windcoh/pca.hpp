#pragma once

#include <set>
#include <vector>

#include "windcoh/coherency.hpp"
#include "windcoh/types.hpp"

namespace windcoh {

// SVD-based principal-component weightings of a trajectory matrix
// (rho signals x s samples): M = K V^T with K = U*Sigma.
struct PCAResult {
  Mat k;                          // rho x min(rho, s) weighting matrix
  std::vector<int> selected_axes; // c columns of K with highest variance
  Mat coords;                     // rho x c points used for clustering
  Vec singular_values;
  double reconstruction_rel_error = 0.0;
  bool rank_deficient = false;
};

// Rows are mean-centered before the SVD unless center == false.
PCAResult pca_weightings(const Mat& m, int c, bool center = true);

// Deterministic k-means on the coordinate rows: farthest-point seeding,
// restarts by seed enumeration, best inertia kept.
std::vector<int> cluster_coords(const Mat& coords, int r, int restarts = 100);

struct ClusterComparison {
  double agreement = 0.0;  // pairwise co-membership agreement in [0, 1]
  std::set<int> moved;     // under overlap-maximizing label matching
};

ClusterComparison compare_partitions(const std::vector<int>& labels_a,
                                     const std::vector<int>& labels_b);

// Convenience: labels vector of a CoherencyPartition (machine -> area).
std::vector<int> partition_labels(const CoherencyPartition& p);

}  // namespace windcoh
