#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "projlab/subspace.hpp"

namespace projlab {

/// Friedrichs angle between two subspaces.
struct AngleReport {
  double phi = 0.0;       // radians, in [0, pi/2]
  double cos_phi = 0.0;
  double sin_phi = 1.0;
  std::size_t intersection_dim = 0;
  double kappa_pair = 2.0;  // 2 / sin_phi
  /// (d0+1)-th singular value of the undeflated cosine matrix, or 0 if there is none.
  double cross_check_cos = 0.0;
  bool nested = false;    // one side vanished after deflation
};

struct PairAngle {
  IndexSet first;
  IndexSet second;
  AngleReport angle;
};

struct RegularityCertificate {
  double kappa_star = 2.0;
  IndexSet worst_first;
  IndexSet worst_second;
  /// One entry per unordered pair (I, J), I <= J by bitmask; the angle is symmetric.
  std::vector<PairAngle> table;
  bool innately_regular = true;
  double min_phi = 1.5707963267948966;
};

/// Principal angles (ascending) from the singular values of Q_V^T Q_W. Empty if either side is {0}.
std::vector<double> principal_angles(const Subspace& v, const Subspace& w);

/// Angle between V and W after removing V ∩ W from both; pi/2 when either remainder is {0}.
AngleReport friedrichs_angle(const Subspace& v, const Subspace& w);

/// Independent estimate of sin phi(V, W): minimizes d(x,V) + d(x,W) over unit x in (V ∩ W)^⊥
/// by smoothed multi-start quasi-Newton search on the sphere. Throws UndefinedOracle if V = W.
double sin_friedrichs_oracle(const Subspace& v, const Subspace& w, int n_restarts = 32, std::uint64_t seed = 0x5eed);

/// max over all subset pairs (I, J) of 2 / sin phi(V_I, V_J), including I or J empty.
RegularityCertificate kappa_star(const SubspaceSystem& system, std::size_t max_subsets = 10);

/// Sampled lower bound on the best regularity constant of the subcollection I:
/// max over random unit x of d(x, V_I) / max_{i in I} d(x, V_i).
double empirical_regularity_kappa(const SubspaceSystem& system, IndexSet subset, std::size_t n_samples,
                                  std::uint64_t rng_seed);

} // namespace projlab
