#include "projlab/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "projlab/error.hpp"

namespace projlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

class Controller {
public:
  Controller(const ControlPolicy& policy, std::size_t n) : policy_(policy), n_(n) {
    if (const auto* r = std::get_if<UniformRandomControl>(&policy_)) rng_.emplace(r->seed, 1);
  }

  std::optional<std::size_t> next(const SubspaceSystem& system, const Vector& x) {
    return std::visit(
        overloaded{
            [&](const CyclicControl&) -> std::optional<std::size_t> { return count_++ % n_; },
            [&](const UniformRandomControl&) -> std::optional<std::size_t> {
              ++count_;
              return static_cast<std::size_t>(rng_->below(n_));
            },
            [&](const GreedyControl&) -> std::optional<std::size_t> {
              std::size_t best = 0;
              double best_d = -1.0;
              for (std::size_t i = 0; i < n_; ++i) {
                const double d = distance(system[i], x);
                if (d > best_d) {
                  best_d = d;
                  best = i;
                }
              }
              ++count_;
              return best;
            },
            [&](const AdversarialGapControl& gap) -> std::optional<std::size_t> {
              const auto& [index, repeats] = gap.blocks[block_];
              const std::size_t out = index;
              if (++within_ >= repeats) {
                within_ = 0;
                block_ = (block_ + 1) % gap.blocks.size();
              }
              return out;
            },
            [&](const ExplicitControl& e) -> std::optional<std::size_t> {
              if (count_ >= e.sequence.size()) return std::nullopt;
              return e.sequence[count_++];
            },
        },
        policy_);
  }

private:
  const ControlPolicy& policy_;
  std::size_t n_;
  std::size_t count_ = 0;
  std::size_t block_ = 0;
  std::size_t within_ = 0;
  std::optional<CounterRng> rng_;
};

class Relaxer {
public:
  explicit Relaxer(const RelaxationSchedule& schedule) : schedule_(schedule) {
    if (const auto* r = std::get_if<UniformRandomRelaxation>(&schedule_.kind)) rng_.emplace(r->seed, 2);
  }

  double next() {
    const double eta = schedule_.eta;
    const std::size_t n = count_++;
    return std::visit(overloaded{
                          [&](const ConstantRelaxation& c) { return c.lambda; },
                          [&](const UniformRandomRelaxation&) { return rng_->uniform(eta, 2.0 - eta); },
                          [&](const AlternatingExtremes&) { return n % 2 == 0 ? eta : 2.0 - eta; },
                          [&](const ExplicitRelaxation& e) { return e.sequence[n % e.sequence.size()]; },
                      },
                      schedule_.kind);
  }

private:
  const RelaxationSchedule& schedule_;
  std::size_t count_ = 0;
  std::optional<CounterRng> rng_;
};

void require_iterates(const TrajectoryRecord& record, const char* what) {
  if (!record.has_iterates() && record.steps > 0) {
    throw MissingData(fmt::format("{}: trajectory was recorded without iterates", what));
  }
  if (record.has_iterates() && record.iterates.size() != record.steps + 1) {
    throw MissingData(fmt::format("{}: iterate history is incomplete", what));
  }
}

bool in_band(double lambda, double eta) { return lambda >= eta && lambda <= 2.0 - eta; }

} // namespace

std::string describe(const ControlPolicy& policy) {
  return std::visit(overloaded{
                        [](const CyclicControl&) { return std::string("cyclic"); },
                        [](const UniformRandomControl& r) { return fmt::format("uniform_random({})", r.seed); },
                        [](const GreedyControl&) { return std::string("greedy"); },
                        [](const AdversarialGapControl& g) {
                          std::string s = "adversarial_gap(";
                          for (std::size_t b = 0; b < g.blocks.size(); ++b) {
                            if (b) s += ";";
                            s += fmt::format("{}x{}", g.blocks[b].first, g.blocks[b].second);
                          }
                          return s + ")";
                        },
                        [](const ExplicitControl& e) { return fmt::format("explicit(len={})", e.sequence.size()); },
                    },
                    policy);
}

std::string describe(const RelaxationSchedule& schedule) {
  const std::string kind = std::visit(
      overloaded{
          [](const ConstantRelaxation& c) { return fmt::format("constant({})", c.lambda); },
          [](const UniformRandomRelaxation& r) { return fmt::format("uniform_random_in_band({})", r.seed); },
          [](const AlternatingExtremes&) { return std::string("alternating_extremes"); },
          [](const ExplicitRelaxation& e) { return fmt::format("explicit(len={})", e.sequence.size()); },
      },
      schedule.kind);
  return fmt::format("{}@eta={}", kind, schedule.eta);
}

void validate(const ControlPolicy& policy, std::size_t n_subspaces) {
  std::visit(overloaded{
                 [](const CyclicControl&) {},
                 [](const UniformRandomControl&) {},
                 [](const GreedyControl&) {},
                 [&](const AdversarialGapControl& g) {
                   if (g.blocks.empty()) throw InvalidInput("adversarial_gap: pattern must contain a block");
                   for (const auto& [index, repeats] : g.blocks) {
                     if (index >= n_subspaces) {
                       throw InvalidInput(fmt::format("adversarial_gap: index {} out of range (N = {})", index,
                                                      n_subspaces));
                     }
                     if (repeats < 1) throw InvalidInput("adversarial_gap: repeat counts must be at least 1");
                   }
                 },
                 [&](const ExplicitControl& e) {
                   for (auto i : e.sequence) {
                     if (i >= n_subspaces) {
                       throw InvalidInput(fmt::format("explicit control: index {} out of range (N = {})", i,
                                                      n_subspaces));
                     }
                   }
                 },
             },
             policy);
}

void validate(const RelaxationSchedule& schedule) {
  const double eta = schedule.eta;
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidInput(fmt::format("relaxation: eta = {} outside (0, 1]", eta));
  std::visit(overloaded{
                 [&](const ConstantRelaxation& c) {
                   if (!in_band(c.lambda, eta)) {
                     throw InvalidInput(fmt::format("relaxation: lambda = {} outside [{}, {}]", c.lambda, eta, 2 - eta));
                   }
                 },
                 [](const UniformRandomRelaxation&) {},
                 [](const AlternatingExtremes&) {},
                 [&](const ExplicitRelaxation& e) {
                   if (e.sequence.empty()) throw InvalidInput("relaxation: explicit sequence is empty");
                   for (double l : e.sequence) {
                     if (!in_band(l, eta)) {
                       throw InvalidInput(fmt::format("relaxation: lambda = {} outside [{}, {}]", l, eta, 2 - eta));
                     }
                   }
                 },
             },
             schedule.kind);
}

Vector step(const SubspaceSystem& system, std::size_t i, double lambda, const Vector& x) {
  return relaxed_project(system[i], lambda, x);
}

TrajectoryRecord run_trajectory(const SubspaceSystem& system, const ControlPolicy& policy,
                                const RelaxationSchedule& schedule, const Vector& x0, const StoppingRule& stop,
                                bool retain_iterates) {
  if (static_cast<std::size_t>(x0.size()) != system.ambient_dim()) {
    throw InvalidInput(fmt::format("run_trajectory: x0 has dimension {}, system lives in R^{}", x0.size(),
                                   system.ambient_dim()));
  }
  if (!x0.allFinite()) throw InvalidInput("run_trajectory: x0 has non-finite coordinates");
  validate(policy, system.size());
  validate(schedule);

  TrajectoryRecord rec;
  rec.n_subspaces = system.size();
  rec.eta = schedule.eta;
  rec.x0_norm = x0.norm();
  const double zero_floor = tol::zero_rel * rec.x0_norm;
  const double stall_level = stop.stop_tol * rec.x0_norm;

  Controller controller(policy, system.size());
  Relaxer relaxer(schedule);

  Vector x = x0;
  IndexSet seen;
  std::size_t stalled = 0;
  rec.x_norms.push_back(rec.x0_norm);
  if (retain_iterates) rec.iterates.push_back(x);

  while (rec.steps < stop.max_steps) {
    const auto i = controller.next(system, x);
    if (!i) {
      rec.stop_reason = StopReason::sequence_exhausted;
      break;
    }
    const double lambda = relaxer.next();
    if (!in_band(lambda, schedule.eta)) {
      throw InvalidInput(fmt::format("run_trajectory: schedule emitted lambda = {} outside [eta, 2 - eta]", lambda));
    }
    const double theta = relative_distance(system[*i], x, zero_floor);
    Vector next = step(system, *i, lambda, x);
    const double disp = (next - x).norm();

    seen = seen.with(*i);
    rec.controls.push_back(*i);
    rec.relaxations.push_back(lambda);
    rec.thetas.push_back(theta);
    rec.displacement_norms.push_back(disp);
    rec.index_sets.push_back(seen);
    x = std::move(next);
    rec.x_norms.push_back(x.norm());
    if (retain_iterates) rec.iterates.push_back(x);
    ++rec.steps;

    stalled = disp <= stall_level ? stalled + 1 : 0;
    if (stalled >= stop.stall_window) {
      double residual = 0.0;
      for (std::size_t k = 0; k < system.size(); ++k) residual = std::max(residual, distance(system[k], x));
      if (residual <= stall_level) {
        rec.stop_reason = StopReason::stalled;
        break;
      }
      stalled = 0;
    }
  }
  rec.final_point = x;
  return rec;
}

std::vector<GrowthViolation> verify_growth_lemma(const TrajectoryRecord& record, const SubspaceSystem& system,
                                                 double kappa_star) {
  require_iterates(record, "verify_growth_lemma");
  const double zero_floor = tol::zero_rel * record.x0_norm;
  std::vector<GrowthViolation> out;
  double max_theta = 0.0;
  for (std::size_t n = 0; n < record.steps; ++n) {
    const auto i = record.controls[n];
    max_theta = std::max(max_theta, relative_distance(system[i], record.iterates[n], zero_floor));
    const IndexSet used = record.index_sets[n];
    const double lhs = relative_distance(system.intersection(used), record.iterates[n + 1], zero_floor);
    const double rhs = std::pow(kappa_star, static_cast<double>(used.size())) * max_theta;
    if (lhs > rhs * (1.0 + 1e-8) + 1e-12) out.push_back({n, lhs, rhs});
  }
  return out;
}

bool verify_displacement_membership(const TrajectoryRecord& record, const SubspaceSystem& system) {
  require_iterates(record, "verify_displacement_membership");
  const double limit = 1e-9 * record.x0_norm;
  for (std::size_t m = 0; m < record.steps; ++m) {
    const Vector moved = record.iterates[m + 1] - record.iterates[0];
    if (project(system.intersection(record.index_sets[m]), moved).norm() > limit) return false;
  }
  return true;
}

std::vector<std::size_t> verify_displacement_identity(const TrajectoryRecord& record, double rel_tol) {
  const double zero_floor = tol::zero_rel * record.x0_norm;
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < record.steps; ++n) {
    const double disp = record.displacement_norms[n];
    const double predicted = record.relaxations[n] * record.thetas[n] * record.x_norms[n];
    const double slack = rel_tol * disp + 1e-13 * record.x_norms[n] + 2.0 * zero_floor;
    if (std::abs(disp - predicted) > slack) out.push_back(n);
  }
  return out;
}

std::vector<std::size_t> verify_monotone_norms(const TrajectoryRecord& record) {
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < record.steps; ++n) {
    if (record.x_norms[n + 1] > record.x_norms[n] * (1.0 + 1e-12)) out.push_back(n);
  }
  return out;
}

DichotomyResult verify_small_theta_dichotomy(const TrajectoryRecord& record, const SubspaceSystem& system,
                                             const TheoreticalConstants& constants) {
  require_iterates(record, "verify_small_theta_dichotomy");
  DichotomyResult result;
  const double zero_floor = tol::zero_rel * record.x0_norm;
  double max_theta = 0.0;
  IndexSet last_checked;
  for (std::size_t n = 0; n < record.steps; ++n) {
    max_theta = std::max(max_theta, relative_distance(system[record.controls[n]], record.iterates[n], zero_floor));
    const IndexSet used = record.index_sets[n];
    const double threshold = std::pow(constants.kappa_star, -static_cast<double>(used.size()));
    if (!(max_theta < threshold)) break;
    result.applicable = true;
    result.segment_end = n;
    if (record.x0_norm == 0.0 || used == last_checked) continue;
    last_checked = used;
    const double ratio = project(system.intersection(used), record.iterates[0]).norm() / record.x0_norm;
    result.min_projection_ratio = std::min(result.min_projection_ratio, ratio);
    if (!(ratio > 1e-9)) result.holds = false;
  }
  return result;
}

} // namespace projlab
