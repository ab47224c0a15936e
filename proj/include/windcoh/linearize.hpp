#pragma once

#include <optional>
#include <vector>

#include "windcoh/coherency.hpp"
#include "windcoh/netmodel.hpp"
#include "windcoh/types.hpp"

namespace windcoh {

// Small-signal Jacobians about an operating point. All voltage-indexed
// blocks use the internal bus ordering [sync, wind, non-gen] with the
// stacked coordinates [V_re; V_im]; equation rows are [P(internal); Q(internal)].
struct JacobianSet {
  CaseIndex idx;
  bool barred = false;  // evaluated at a wind-integrated operating point

  Mat k11, k12, k21, k22;  // generator equations; K12/K22 are n x 2m

  // Power-flow Jacobian blocks by bus class. K1..K4 hold d(flow)/dV at the
  // sync-gen and wind rows; K5/K6 carry the sign that makes the non-gen rows
  // of A3 equal K5/K6 directly.
  Mat k1, k2, k3, k4, k5, k6;

  Mat a1;  // 2m x n
  Mat a3;  // 2m x 2m
  Mat a2;  // 2m x nz (wind state coupling; empty without farms)

  std::vector<WindLinearization> wind;  // one per farm, matching case order
  std::vector<int> gammas;              // penetration level per farm
  double a3_rcond = 0.0;
};

// K11 = -dP_s/ddelta etc., columns in internal ordering.
void generator_jacobians(const NetworkCase& c, const OperatingPoint& op,
                         Mat& k11, Mat& k12, Mat& k21, Mat& k22);

// Assembles the full set, embedding the farm D/C blocks when farms are
// present with nonzero gamma. Throws NumericalError when A3 is numerically
// singular (rcond reported in the message).
JacobianSet network_jacobians(const NetworkCase& c, const OperatingPoint& op);

// K11 - K12 * A3^{-1} * A1. Nominal inputs give the Laplacian L0; barred
// inputs give the (generally non-Laplacian) perturbed coupling matrix.
Mat kron_reduce(const Mat& k11, const Mat& k12, const Mat& a1, const Mat& a3);
Mat kron_reduce(const JacobianSet& j);

struct ReducedSwingModel {
  Vec m_diag;       // machine inertias
  Mat l0;           // n x n reduced stiffness
  Mat l0_int, l0_ext;
  double epsilon = 1.0;
};

ReducedSwingModel reduced_swing_model(const NetworkCase& c, const JacobianSet& j);

// Area-blockdiagonal / external split with both summands Laplacian and
// l0_int + eps*l0_ext == l0 exactly. epsilon is the worst-case ratio of
// external to internal coupling magnitudes, clamped to (0, 1].
void split_internal_external(const Mat& l0, const CoherencyPartition& part,
                             Mat& l0_int, Mat& l0_ext, double& epsilon);

// Slow-aggregate / fast-difference coordinates of Eq.-(6)/(7) form.
struct TimeScaleTransform {
  Mat c;         // r x n, M_hat^{-1} U^T M
  Mat g;         // (n-r) x n difference map
  Mat u;         // n x r block ones
  Mat g_dagger;  // G^T (G G^T)^{-1}
  Vec area_inertia;  // M_hat diagonal
};
TimeScaleTransform timescale_transform(const CoherencyPartition& part,
                                       const Vec& m_diag);

struct TwoTimeScaleModel {
  Mat t11, t12, t21, t22;
  int r = 0;
};
TwoTimeScaleModel assemble_T(const ReducedSwingModel& model,
                             const TimeScaleTransform& xf,
                             const CoherencyPartition& part);

}  // namespace windcoh
