#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "projlab/dynamics.hpp"
#include "projlab/report.hpp"
#include "projlab/subspace.hpp"

namespace projlab::cli {

struct ExplicitSystem {
  std::vector<std::vector<Vector>> spans;  // spanning vectors per subspace
};
struct RandomSystem {
  std::size_t n_subspaces = 0;
  std::vector<std::size_t> dims;
  std::uint64_t seed = 0;
};
struct TwoLines {
  double theta = 0.0;
};
struct CoordinatePlanes {};
struct GenericTriple {
  std::uint64_t seed = 0;
};
using SystemSpec = std::variant<ExplicitSystem, RandomSystem, TwoLines, CoordinatePlanes, GenericTriple>;

struct ExplicitX0 {
  Vector coords;
};
struct RandomX0 {
  std::uint64_t seed = 0;
};
struct UnitOnSubspace {
  std::size_t index = 0;
};
using X0Spec = std::variant<ExplicitX0, RandomX0, UnitOnSubspace>;

using RelaxationKind = decltype(RelaxationSchedule::kind);

struct SweepSpec {
  std::size_t n_trajectories = 0;
  std::vector<ControlPolicy> policies;
  std::vector<RelaxationKind> schedules;
  std::vector<double> etas;  // empty: the scenario eta
  std::uint64_t seed = 0;
};

/// One batch run, parsed from a JSON file. All randomness is seeded in the file.
struct Scenario {
  std::size_t ambient_dim = 0;
  SystemSpec system;
  double eta = 1.0;
  std::vector<double> gammas{0.5, 1.0, 2.0};
  std::vector<double> taus;  // empty: beta*-grid
  ControlPolicy policy = CyclicControl{};
  RelaxationKind schedule = ConstantRelaxation{1.0};
  X0Spec x0 = RandomX0{0};
  StoppingRule stopping;
  std::string out_dir = "out";
  int verbosity = 1;
  std::optional<SweepSpec> sweep;
};

/// Throws ConfigError on any schema or range violation.
Scenario parse_scenario(const Json& doc);
Scenario load_scenario(const std::string& path);

/// Replaces every seed in the scenario (system, policy, schedule, x0, sweep) by the override.
void apply_seed_override(Scenario& scenario, std::uint64_t seed);

SubspaceSystem build_system(const Scenario& scenario);
Vector build_x0(const Scenario& scenario, const SubspaceSystem& system);
RelaxationSchedule schedule_for(const RelaxationKind& kind, double eta);

} // namespace projlab::cli
