#pragma once

#include <Eigen/Dense>

#include <set>
#include <string>
#include <vector>

#include "windcoh/types.hpp"

namespace windcoh {

// Slow eigenspace of M^-1 L: the near-zero mode plus the next r-1 smallest
// eigenvalues in magnitude, reduced to a real basis.
struct SlowEigenspace {
  Mat v;                         // n x r real basis
  Eigen::VectorXcd eigenvalues;  // the r selected eigenvalues
  Vec frequencies_hz;            // sqrt(|lambda|)/(2*pi) for the r-1 nonzero ones
  bool degenerate_gap = false;   // |lambda_r| and |lambda_{r+1}| within 1e-6 rel
  double gap_ratio = 0.0;        // |lambda_{r+1}| / |lambda_r| advisory
};

struct CoherencyPartition {
  int r = 0;
  std::vector<std::vector<int>> areas;  // reference machine first, rest ascending
  std::vector<int> reference_machines;  // one per area, same order as areas
  std::vector<int> area_of;             // machine -> area
  Mat grouping;                         // V_L = [I; L~], rows in (refs, others) order
  std::vector<int> grouping_rows;       // machine index of each grouping row
  Vec margins;                          // per-machine |argmax| winning weight gap
  std::vector<int> ties;                // machines whose argmax was tied
};

SlowEigenspace slow_eigenbasis(const Vec& m_diag, const Mat& laplacian, int r);

// Gaussian elimination with full pivoting; returns pivot rows in pivot order.
std::vector<int> reference_machines(const Mat& v);

// [V_r1; V_r2] * V_r1^{-1}; top block is exactly the identity. Rows are
// ordered refs-first, then the remaining machines ascending; row_machines
// receives the machine index of each row.
Mat grouping_matrix(const Mat& v, const std::vector<int>& refs,
                    std::vector<int>* row_machines = nullptr);

CoherencyPartition assign_areas(const Mat& v_l,
                                const std::vector<int>& row_machines,
                                const std::vector<int>& refs);

// Full Algorithm-1 pass over M^-1 L.
struct CoherencyResult {
  SlowEigenspace eigenspace;
  CoherencyPartition partition;
};
CoherencyResult identify_coherency(const Vec& m_diag, const Mat& laplacian, int r);

// Machines whose area changed under the overlap-maximizing label matching,
// plus reference-machine changes of matched areas.
struct PartitionDelta {
  std::set<int> moved;
  std::vector<std::pair<int, int>> reference_changes;  // (from, to)
};
PartitionDelta partition_distance(const CoherencyPartition& a,
                                  const CoherencyPartition& b);

// Canonical presentation: areas sorted by reference machine index.
CoherencyPartition canonicalize(const CoherencyPartition& p);

}  // namespace windcoh
