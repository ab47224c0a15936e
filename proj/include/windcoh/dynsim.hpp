#pragma once

#include <string>
#include <vector>

#include "windcoh/linearize.hpp"

namespace windcoh {

enum class DampingMode {
  None,       // Eq.-(1) classical, undamped
  UniformSlow,  // D_i = 0.26*M_i so swing modes sit near Re = -0.13
  FromCase,   // per-machine damping fields
};

// Full wind-integrated small-signal model, states [ddelta; domega; dz].
struct StateSpaceModel {
  Mat r1, r2, r3, r4;
  Vec m_diag, d_diag;
  int n = 0, nz = 0;
  std::vector<std::string> labels;

  Mat system_matrix() const;  // (2n+nz) square
};

StateSpaceModel assemble_full_model(const NetworkCase& c, const JacobianSet& j,
                                    DampingMode damping = DampingMode::UniformSlow);

struct Disturbance {
  int machine = 0;      // mechanical-power step target
  double magnitude = 1.0;  // pu
};

struct TrajectoryMatrix {
  Mat data;  // signals x samples
  double dt = 0.0;
  std::vector<std::string> labels;
  std::string disturbance;
  bool instability_flag = false;
};

// Fixed-step implicit trapezoidal integration of the step response; the
// stepping matrix is factorized once.
TrajectoryMatrix simulate(const StateSpaceModel& model, const Disturbance& d,
                          double horizon_s, double dt_s);

// Rows of the trajectory restricted to machine angles (the PCA input).
TrajectoryMatrix angle_rows(const TrajectoryMatrix& t, int n);

struct Mode {
  std::complex<double> eigenvalue;
  double frequency_hz = 0.0;  // |Im|/(2*pi), 0 for non-oscillatory
  double damping_ratio = 0.0;
  bool oscillatory = false;
  bool swing = false;        // dominant participation in the angle states
  bool slow = false;         // among the r-1 lowest-frequency swing modes
};

std::vector<Mode> modal_table(const StateSpaceModel& model, int r = 0);

}  // namespace windcoh
