#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "projlab/bounds.hpp"
#include "projlab/dynamics.hpp"

namespace projlab {

/// Normalized displacement statistics of one trajectory.
struct DisplacementProfile {
  std::size_t n_subspaces = 0;
  double eta = 1.0;
  double x0_norm = 0.0;
  std::vector<double> deltas;          // |x_{n+1} - x_n| / ((2 - eta) |x_0|)
  std::vector<double> sorted_deltas;   // decreasing rearrangement
  std::vector<std::pair<double, double>> moment_sums;    // (gamma, sum |x_{n+1} - x_n|^gamma)
  std::vector<std::pair<double, std::size_t>> s_of_tau;  // (tau, #{n : delta_n >= tau})

  /// #{n : delta_n >= tau} by binary search on the rearrangement.
  std::size_t count_at_least(double tau) const;
};

struct MomentCheck {
  double gamma = 0.0;
  double empirical = 0.0;
  double bound = 0.0;  // C_N |x_0|^gamma
  double ratio = 0.0;
};

struct DistributionCheck {
  double tau = 0.0;
  std::size_t empirical = 0;
  double bound = 0.0;
};

struct RearrangementCheck {
  std::size_t n = 0;
  double value = 0.0;
  double bound = 0.0;
};

struct BoundReport {
  std::vector<TheoreticalConstants> constants;  // one per gamma
  std::vector<MomentCheck> moments;
  std::vector<DistributionCheck> s_tau;
  std::vector<RearrangementCheck> rearrangement;  // nonzero delta*_n only
  double max_moment_ratio = 0.0;
  double max_s_ratio = 0.0;             // over the tau grid
  double max_s_ratio_at_jumps = 0.0;    // S(delta*_n) against the bound at delta*_n
  double max_rearrangement_ratio = 0.0;
  std::size_t s_one = 0;                // empirical S(1); recorded, not part of the verdict
  bool verdict = true;
};

/// Relative slack on every theory-vs-experiment comparison.
inline constexpr double bound_slack = 1e-12;

double moment_sum(const TrajectoryRecord& record, double gamma);

/// Throws DegenerateError when x_0 = 0.
DisplacementProfile profile(const TrajectoryRecord& record, std::span<const double> gammas,
                            std::span<const double> taus);

/// One TheoreticalConstants per profiled gamma; all must share eta and N with the profile.
BoundReport check_bounds(const DisplacementProfile& prof, std::span<const TheoreticalConstants> constants);

struct SegmentInductionReport {
  std::size_t windows = 0;              // windows whose moment sum was checked
  std::size_t translation_windows = 0;  // windows whose translated trajectory was checked
  std::size_t sum_violations = 0;
  std::size_t translation_violations = 0;
  std::size_t base_case_violations = 0;
  std::vector<double> max_ratio_by_level;  // index l-1: max window sum / (C_l |x_p|^gamma)
  bool passed() const { return sum_violations == 0 && translation_violations == 0 && base_case_violations == 0; }
};

struct SegmentInductionOptions {
  std::size_t random_windows = 100;
  /// Change-point windows whose translated trajectory is checked vector by vector
  /// (their moment sums are always checked).
  std::size_t translation_change_windows = 50;
  std::uint64_t seed = 0x5e6;
};

/// Window-by-window check of  sum_{k=p}^{q} |x_{k+1} - x_k|^gamma <= C_l |x_p|^gamma  with
/// l = |{i_k : p <= k <= q}|, plus the translated trajectory y_k = x_k - P_{V_I} x_p:
/// same increments, y_{k+1} = P_{i_k, lambda_k} y_k, y_k in V_I^⊥, and for l = 1 the decay
/// |y_k| <= (1 - eta)^{k-p} |y_p|. Windows: every change point {0} ∪ {k : i_k != i_{k-1}} extended to
/// the longest window with at most l distinct indices for each l, plus random windows.
SegmentInductionReport segment_induction_test(const TrajectoryRecord& record, const SubspaceSystem& system,
                                              std::span<const TheoreticalConstants> constants,
                                              const SegmentInductionOptions& options = {});

// Ensembles

struct SweepConfig {
  std::vector<ControlPolicy> policies;
  std::vector<RelaxationSchedule> schedules;
  std::size_t n_trajectories = 1;
  std::vector<double> gammas{0.5, 1.0, 2.0};
  std::vector<double> taus;  // empty: beta*-grid
  std::uint64_t seed = 0;
  StoppingRule stop;
  std::size_t threads = 0;  // 0: PROJLAB_THREADS or hardware concurrency
};

/// Everything needed to rerun trajectory j of a sweep.
struct TrajectorySpec {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  ControlPolicy policy;
  RelaxationSchedule schedule;
  Vector x0;
};

/// Trajectory j uses policies[j % P] and schedules[(j / P) % S]; random seeds and the Gaussian x_0
/// are derived from (seed, j).
TrajectorySpec make_trajectory_spec(const SweepConfig& config, std::size_t ambient_dim, std::size_t index);

struct TrajectorySummary {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string policy;
  std::string schedule;
  std::size_t steps = 0;
  std::vector<double> moment_ratios;
  double max_s_ratio = 0.0;
  double max_rearrangement_ratio = 0.0;
  std::size_t s_one = 0;
  bool verdict = true;
};

struct SweepResult {
  std::vector<TrajectorySummary> rows;
  std::vector<double> gammas;
  std::vector<double> max_moment_ratio;  // per gamma
  double max_s_ratio = 0.0;
  double max_rearrangement_ratio = 0.0;
  std::size_t max_s_one = 0;
  bool verdict = true;
  std::size_t worst_moment = 0;
  std::size_t worst_s = 0;
  std::size_t worst_rearrangement = 0;
  /// Profile and report of the trajectory with the largest distribution ratio.
  DisplacementProfile worst_profile;
  BoundReport worst_report;
};

std::size_t worker_count(std::size_t requested);

SweepResult ensemble_sweep(const SubspaceSystem& system, double kappa_star, const SweepConfig& config);

} // namespace projlab
