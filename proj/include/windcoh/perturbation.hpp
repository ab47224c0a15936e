#pragma once

#include <vector>

#include "windcoh/linearize.hpp"

namespace windcoh {

// Every matrix of the wind-perturbation bookkeeping between a nominal and a
// wind-integrated evaluation of the same network.
struct PerturbationLedger {
  Mat delta_k11, delta_k12, delta_k21, delta_k22;
  Mat delta_a1;              // Ā1 - A1, zero blocks away from the K11/K21 slots
  std::vector<Mat> a3_terms; // structural A3^i, one per farm (4 nonzeros each)
  Mat delta_a3;              // operating-point residual: Ā3 - A3 - sum gamma_i A3^i
  Mat x_shift;               // x = sum gamma_i A3^i + delta_a3
  Mat inv_correction;        // X with (A3 + x)^{-1} = A3^{-1} + X
  Mat kappa_l;               // operating-point part of the L perturbation
  Mat delta_l0;              // -K12 X A1 + kappa_l
  Mat l_direct;              // Kron reduction of the barred set (Eq. 20 path)
  Mat l_assembled;           // L0 + delta_l0 (Eq. 25 path)
  double two_path_rel_error = 0.0;

  // epsilon-expansion pieces (series-based internal/external split)
  Mat p1a, x1_eps, x2_eps, p_a, p_b;
  Mat delta_l_int, delta_l_ext;
  int series_order = 0;
  bool series_converged = true;
};

// Difference of two Jacobian evaluations on the same topology/ordering.
void jacobian_shift(const JacobianSet& nominal, const JacobianSet& barred,
                    Mat& delta_k11, Mat& delta_k12, Mat& delta_k21,
                    Mat& delta_k22, Mat& delta_a1, Mat& delta_a3_total);

// Sparse structural terms: A3^i has zeta entries at the farm's P/Q rows and
// V_re/V_im columns, nothing else.
std::vector<Mat> structural_A3_terms(const JacobianSet& barred);

// Matrix-inversion-lemma correction X = -(I + A3^{-1} x)^{-1} A3^{-1} x A3^{-1}.
// Throws NumericalError when (I + A3^{-1} x) is numerically singular.
Mat inversion_correction(const Mat& a3, const Mat& x);

// Fills the ledger through the Eq.-(25) assembly and checks it against the
// direct Kron reduction of the barred set.
PerturbationLedger build_ledger(const JacobianSet& nominal,
                                const JacobianSet& barred);

// Area split of A3 plus the exponential-expansion split of the perturbation
// into internal/external parts (Eqs. 28-34). bus_area maps every internal
// bus index to an area; series tolerance 1e-8, hard cap 50 terms.
void epsilon_split_perturbation(PerturbationLedger& led,
                                const JacobianSet& nominal,
                                const std::vector<int>& bus_area,
                                double epsilon);

// Nearest-machine area labels for every internal bus index (shortest
// reactance path from the generator buses).
std::vector<int> bus_areas(const NetworkCase& c, const CaseIndex& idx,
                           const CoherencyPartition& part);

// Equivalent Laplacian: off-diagonals of L, diagonals replaced by the
// negated off-diagonal row sums, plus the area-consistent perturbation
// split used by the two-time-scale assembly.
struct EquivalentLaplacian {
  Mat l;       // raw perturbed matrix
  Mat l_eq;    // row-sum corrected
  Mat delta_eq_int;  // block-diagonal, doubly zero-sum per area
  Mat delta_eq_ext;  // remainder/epsilon, zero row sums
  std::vector<int> farm_buses;
  std::vector<int> gammas;
};

EquivalentLaplacian equivalent_laplacian(const Mat& l);

// Adds the internal/external perturbation split against a nominal model.
void split_equivalent(EquivalentLaplacian& eq, const ReducedSwingModel& nominal,
                      const CoherencyPartition& part);

// Perturbed two-time-scale blocks (Eqs. 36-39) from the equivalent-Laplacian
// split; structurally consistent with assemble_T.
TwoTimeScaleModel assemble_T_tilde(const ReducedSwingModel& nominal,
                                   const EquivalentLaplacian& eq,
                                   const TimeScaleTransform& xf,
                                   const CoherencyPartition& part);

}  // namespace windcoh
