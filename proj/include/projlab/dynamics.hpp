#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "projlab/bounds.hpp"
#include "projlab/subspace.hpp"

namespace projlab {

// Control policies

struct CyclicControl {};
struct UniformRandomControl {
  std::uint64_t seed = 0;
};
/// Picks the index maximizing |x - P_i x|; ties go to the smallest index.
struct GreedyControl {};
/// Repeats the block schedule (index, repeat count) indefinitely.
struct AdversarialGapControl {
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
};
/// Plays the sequence once; the trajectory ends when it is exhausted.
struct ExplicitControl {
  std::vector<std::size_t> sequence;
};

using ControlPolicy =
    std::variant<CyclicControl, UniformRandomControl, GreedyControl, AdversarialGapControl, ExplicitControl>;

// Relaxation schedules; every emitted lambda lies in [eta, 2 - eta].

struct ConstantRelaxation {
  double lambda = 1.0;
};
struct UniformRandomRelaxation {
  std::uint64_t seed = 0;
};
/// eta, 2 - eta, eta, ...
struct AlternatingExtremes {};
/// Played cyclically.
struct ExplicitRelaxation {
  std::vector<double> sequence;
};

struct RelaxationSchedule {
  std::variant<ConstantRelaxation, UniformRandomRelaxation, AlternatingExtremes, ExplicitRelaxation> kind;
  double eta = 1.0;
};

std::string describe(const ControlPolicy& policy);
std::string describe(const RelaxationSchedule& schedule);

/// Throws InvalidInput if the policy references indices outside [0, n) or has empty blocks.
void validate(const ControlPolicy& policy, std::size_t n_subspaces);
/// Throws InvalidInput if eta is outside (0, 1] or any fixed lambda is outside [eta, 2 - eta].
void validate(const RelaxationSchedule& schedule);

/// Stop at max_steps, or once stall_window consecutive displacements are at most
/// stop_tol |x_0| and the current point is within stop_tol |x_0| of every V_i.
struct StoppingRule {
  std::size_t max_steps = 100000;
  double stop_tol = 1e-14;
  std::size_t stall_window = 50;
};

enum class StopReason { max_steps, stalled, sequence_exhausted };

struct TrajectoryRecord {
  std::size_t n_subspaces = 0;
  double eta = 1.0;
  double x0_norm = 0.0;
  std::vector<Vector> iterates;            // x_0 .. x_M when retained, else empty
  std::vector<std::size_t> controls;       // i_n
  std::vector<double> relaxations;         // lambda_n
  std::vector<double> displacement_norms;  // |x_{n+1} - x_n|
  std::vector<double> x_norms;             // |x_n| for n = 0 .. M
  std::vector<IndexSet> index_sets;        // I_n
  std::vector<double> thetas;              // theta_{i_n}(x_n)
  Vector final_point;
  std::size_t steps = 0;
  StopReason stop_reason = StopReason::max_steps;

  bool has_iterates() const { return !iterates.empty(); }
};

/// relaxed_project(V_i, lambda, x).
Vector step(const SubspaceSystem& system, std::size_t i, double lambda, const Vector& x);

TrajectoryRecord run_trajectory(const SubspaceSystem& system, const ControlPolicy& policy,
                                const RelaxationSchedule& schedule, const Vector& x0, const StoppingRule& stop = {},
                                bool retain_iterates = false);

struct GrowthViolation {
  std::size_t step = 0;
  double lhs = 0.0;  // theta_{I_n}(x_{n+1})
  double rhs = 0.0;  // kappa*^{|I_n|} max_{k <= n} theta_{i_k}(x_k)
};

/// Checks theta_{I_n}(x_{n+1}) <= kappa*^{|I_n|} max_{k<=n} theta_{i_k}(x_k) at every step (1e-8 relative
/// slack plus 1e-12 absolute). Empty on conforming trajectories; throws MissingData without iterates.
std::vector<GrowthViolation> verify_growth_lemma(const TrajectoryRecord& record, const SubspaceSystem& system,
                                                 double kappa_star);

/// |P_{V_{I_m}} (x_{m+1} - x_0)| <= 1e-9 |x_0| for every m.
bool verify_displacement_membership(const TrajectoryRecord& record, const SubspaceSystem& system);

/// |x_{n+1} - x_n| = lambda_n theta_{i_n}(x_n) |x_n| at every step. Returns the offending steps.
std::vector<std::size_t> verify_displacement_identity(const TrajectoryRecord& record, double rel_tol = 1e-10);

/// Steps where |x_{n+1}| > |x_n| beyond rounding.
std::vector<std::size_t> verify_monotone_norms(const TrajectoryRecord& record);

struct DichotomyResult {
  bool applicable = false;  // some prefix satisfied max theta < kappa*^{-|I_n|}
  bool holds = true;        // x_0 = 0 or x_0 not in V_{I_n}^⊥ for every such prefix
  std::size_t segment_end = 0;       // last n of the qualifying prefix
  double min_projection_ratio = 1.0;  // min over checked n of |P_{V_{I_n}} x_0| / |x_0|
};

/// On the longest prefix [0, n] where every theta_{i_k}(x_k) stays below kappa*^{-|I_n|}, confirms
/// that x_0 = 0 or x_0 has a nonzero component in V_{I_n}.
DichotomyResult verify_small_theta_dichotomy(const TrajectoryRecord& record, const SubspaceSystem& system,
                                             const TheoreticalConstants& constants);

} // namespace projlab
