#include "projlab/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <thread>

#include <fmt/format.h>

#include "projlab/error.hpp"

namespace projlab {

namespace {

const TheoreticalConstants& constants_for_gamma(std::span<const TheoreticalConstants> constants, double gamma) {
  for (const auto& c : constants) {
    if (c.gamma == gamma) return c;
  }
  throw ConfigError(fmt::format("no theoretical constants supplied for gamma = {}", gamma));
}

void require_matching(std::span<const TheoreticalConstants> constants, double eta, std::size_t n) {
  if (constants.empty()) throw ConfigError("at least one set of theoretical constants is required");
  for (const auto& c : constants) {
    if (c.eta != eta || c.n_subspaces != n) {
      throw ConfigError(fmt::format("constants built for (eta = {}, N = {}) but the run has (eta = {}, N = {})", c.eta,
                                    c.n_subspaces, eta, n));
    }
  }
}

bool within(double empirical, double bound) { return empirical <= bound * (1.0 + bound_slack); }

// next_occurrence[i][k]: first j >= k with controls[j] == i, or M if none.
std::vector<std::vector<std::size_t>> next_occurrences(const TrajectoryRecord& record) {
  const std::size_t m = record.steps;
  std::vector<std::vector<std::size_t>> next(record.n_subspaces, std::vector<std::size_t>(m + 1, m));
  for (std::size_t k = m; k-- > 0;) {
    for (std::size_t i = 0; i < record.n_subspaces; ++i) next[i][k] = next[i][k + 1];
    next[record.controls[k]][k] = k;
  }
  return next;
}

struct Window {
  std::size_t p = 0;
  std::size_t q_plus_one = 0;  // exclusive end; empty when equal to p
  IndexSet used;
};

class WindowChecker {
public:
  WindowChecker(const TrajectoryRecord& record, const SubspaceSystem& system,
                std::span<const TheoreticalConstants> constants, SegmentInductionReport& report)
      : record_(record), system_(system), constants_(constants), report_(report) {
    for (const auto& c : constants_) {
      std::vector<long double> tail(record.steps + 1, 0.0L);
      for (std::size_t k = record.steps; k-- > 0;) {
        tail[k] = tail[k + 1] + std::pow(static_cast<long double>(record.displacement_norms[k]),
                                         static_cast<long double>(c.gamma));
      }
      tails_.push_back(std::move(tail));
    }
  }

  void check_sum(const Window& w) {
    ++report_.windows;
    const std::size_t level = w.used.size();
    if (level == 0) return;
    const double xp = record_.x_norms[w.p];
    for (std::size_t g = 0; g < constants_.size(); ++g) {
      const auto& c = constants_[g];
      const double window_sum = static_cast<double>(tails_[g][w.p] - tails_[g][w.q_plus_one]);
      const double bound = c.c_seq[level - 1] * std::pow(xp, c.gamma);
      if (!within(window_sum, bound)) ++report_.sum_violations;
      if (bound > 0.0) {
        auto& best = report_.max_ratio_by_level[level - 1];
        best = std::max(best, window_sum / bound);
      }
    }
  }

  void check_translation(const Window& w) {
    if (w.q_plus_one == w.p) return;
    ++report_.translation_windows;
    const Subspace& joint = system_.intersection(w.used);
    const Vector& xp = record_.iterates[w.p];
    const Vector anchor = project(joint, xp);
    const double tol = 1e-9 * xp.norm();
    const double y0 = (xp - anchor).norm();
    const double contraction = 1.0 - record_.eta;

    bool translation_ok = true;
    bool base_ok = true;
    for (std::size_t k = w.p; k <= w.q_plus_one; ++k) {
      const Vector y = record_.iterates[k] - anchor;
      if (project(joint, y).norm() > tol) translation_ok = false;
      if (w.used.size() == 1) {
        const double envelope = std::pow(contraction, static_cast<double>(k - w.p)) * y0;
        if (y.norm() > envelope + tol) base_ok = false;
      }
      if (k == w.q_plus_one) break;
      const Vector y_next = record_.iterates[k + 1] - anchor;
      const Vector dx = record_.iterates[k + 1] - record_.iterates[k];
      if (((y_next - y) - dx).norm() > tol) translation_ok = false;
      const Vector mapped = step(system_, record_.controls[k], record_.relaxations[k], y);
      if ((y_next - mapped).norm() > tol) translation_ok = false;
    }
    if (!translation_ok) ++report_.translation_violations;
    if (!base_ok) ++report_.base_case_violations;
  }

private:
  const TrajectoryRecord& record_;
  const SubspaceSystem& system_;
  std::span<const TheoreticalConstants> constants_;
  SegmentInductionReport& report_;
  std::vector<std::vector<long double>> tails_;
};

} // namespace

std::size_t DisplacementProfile::count_at_least(double tau) const {
  const auto it = std::partition_point(sorted_deltas.begin(), sorted_deltas.end(), [&](double d) { return d >= tau; });
  return static_cast<std::size_t>(it - sorted_deltas.begin());
}

double moment_sum(const TrajectoryRecord& record, double gamma) {
  if (!(gamma > 0.0)) throw InvalidInput(fmt::format("moment_sum: gamma = {} must be positive", gamma));
  double total = 0.0;
  for (double d : record.displacement_norms) total += std::pow(d, gamma);
  return total;
}

DisplacementProfile profile(const TrajectoryRecord& record, std::span<const double> gammas,
                            std::span<const double> taus) {
  if (record.x0_norm == 0.0) throw DegenerateError("profile: x0 = 0 has no normalized displacements");
  DisplacementProfile prof;
  prof.n_subspaces = record.n_subspaces;
  prof.eta = record.eta;
  prof.x0_norm = record.x0_norm;

  const double scale = (2.0 - record.eta) * record.x0_norm;
  prof.deltas.reserve(record.steps);
  for (double d : record.displacement_norms) prof.deltas.push_back(d / scale);
  prof.sorted_deltas = prof.deltas;
  std::stable_sort(prof.sorted_deltas.begin(), prof.sorted_deltas.end(), std::greater<>());

  for (double g : gammas) prof.moment_sums.emplace_back(g, moment_sum(record, g));
  for (double t : taus) prof.s_of_tau.emplace_back(t, prof.count_at_least(t));
  return prof;
}

BoundReport check_bounds(const DisplacementProfile& prof, std::span<const TheoreticalConstants> constants) {
  require_matching(constants, prof.eta, prof.n_subspaces);
  BoundReport rep;
  rep.constants.assign(constants.begin(), constants.end());
  const TheoreticalConstants& base = constants.front();

  for (const auto& [gamma, sum] : prof.moment_sums) {
    const auto& c = constants_for_gamma(constants, gamma);
    MomentCheck m{gamma, sum, moment_bound(c) * std::pow(prof.x0_norm, gamma), 0.0};
    m.ratio = m.empirical / m.bound;
    rep.max_moment_ratio = std::max(rep.max_moment_ratio, m.ratio);
    rep.verdict = rep.verdict && within(m.empirical, m.bound);
    rep.moments.push_back(m);
  }

  for (const auto& [tau, count] : prof.s_of_tau) {
    DistributionCheck s{tau, count, s_tau_bound(base, tau)};
    rep.max_s_ratio = std::max(rep.max_s_ratio, static_cast<double>(count) / s.bound);
    rep.verdict = rep.verdict && within(static_cast<double>(count), s.bound);
    rep.s_tau.push_back(s);
  }

  for (std::size_t n = 0; n < prof.sorted_deltas.size(); ++n) {
    const double value = prof.sorted_deltas[n];
    if (!(value > 0.0)) break;
    const double bound = rearrangement_bound(base, n);
    rep.max_rearrangement_ratio = std::max(rep.max_rearrangement_ratio, value / bound);
    rep.verdict = rep.verdict && within(value, bound);
    rep.rearrangement.push_back({n, value, bound});

    if (n == 0 || value != prof.sorted_deltas[n - 1]) {
      const double tau = std::min(value, 1.0);
      const auto count = static_cast<double>(prof.count_at_least(value));
      const double sb = s_tau_bound(base, tau);
      rep.max_s_ratio_at_jumps = std::max(rep.max_s_ratio_at_jumps, count / sb);
      rep.verdict = rep.verdict && within(count, sb);
    }
  }
  rep.s_one = prof.count_at_least(1.0);
  return rep;
}

SegmentInductionReport segment_induction_test(const TrajectoryRecord& record, const SubspaceSystem& system,
                                              std::span<const TheoreticalConstants> constants,
                                              const SegmentInductionOptions& options) {
  if (!record.has_iterates() || record.iterates.size() != record.steps + 1) {
    throw MissingData("segment_induction_test: trajectory was recorded without iterates");
  }
  require_matching(constants, record.eta, record.n_subspaces);

  SegmentInductionReport report;
  report.max_ratio_by_level.assign(record.n_subspaces, 0.0);
  const std::size_t m = record.steps;
  if (m == 0) return report;

  WindowChecker checker(record, system, constants, report);
  const auto next = next_occurrences(record);

  std::size_t translated = 0;
  for (std::size_t p = 0; p < m; ++p) {
    if (p > 0 && record.controls[p] == record.controls[p - 1]) continue;
    std::vector<std::pair<std::size_t, std::size_t>> arrivals;  // (first position, index)
    for (std::size_t i = 0; i < record.n_subspaces; ++i) {
      if (next[i][p] < m) arrivals.emplace_back(next[i][p], i);
    }
    std::sort(arrivals.begin(), arrivals.end());
    IndexSet used;
    for (std::size_t l = 0; l < arrivals.size(); ++l) {
      used = used.with(arrivals[l].second);
      const std::size_t end = l + 1 < arrivals.size() ? arrivals[l + 1].first : m;
      const Window w{p, end, used};
      checker.check_sum(w);
      if (translated < options.translation_change_windows) {
        checker.check_translation(w);
        ++translated;
      }
    }
  }

  CounterRng rng(options.seed, 0x3d);
  for (std::size_t r = 0; r < options.random_windows; ++r) {
    const auto p = static_cast<std::size_t>(rng.below(m));
    const auto end = p + static_cast<std::size_t>(rng.below(m - p + 1));
    IndexSet used;
    for (std::size_t i = 0; i < record.n_subspaces; ++i) {
      if (next[i][p] < end) used = used.with(i);
    }
    const Window w{p, end, used};
    checker.check_sum(w);
    checker.check_translation(w);
  }
  return report;
}

TrajectorySpec make_trajectory_spec(const SweepConfig& config, std::size_t ambient_dim, std::size_t index) {
  if (config.policies.empty() || config.schedules.empty()) {
    throw InvalidInput("ensemble_sweep: at least one policy and one schedule are required");
  }
  TrajectorySpec spec;
  spec.index = index;
  spec.seed = derive_seed(config.seed, index);
  spec.policy = config.policies[index % config.policies.size()];
  spec.schedule = config.schedules[(index / config.policies.size()) % config.schedules.size()];
  if (auto* r = std::get_if<UniformRandomControl>(&spec.policy)) r->seed = derive_seed(r->seed, spec.seed, 1);
  if (auto* r = std::get_if<UniformRandomRelaxation>(&spec.schedule.kind)) r->seed = derive_seed(r->seed, spec.seed, 2);
  CounterRng rng(spec.seed, 3);
  spec.x0 = random_gaussian(ambient_dim, rng);
  return spec;
}

std::size_t worker_count(std::size_t requested) {
  std::size_t n = requested;
  if (n == 0) n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PROJLAB_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return n;
}

namespace {

struct TrajectoryOutcome {
  TrajectorySummary summary;
  DisplacementProfile prof;
  BoundReport report;
};

TrajectoryOutcome evaluate(const SubspaceSystem& system, double kappa_star, const SweepConfig& config,
                           const TrajectorySpec& spec) {
  std::vector<TheoreticalConstants> constants;
  for (double g : config.gammas) constants.push_back(constants_for(kappa_star, system.size(), spec.schedule.eta, g));
  const auto taus = config.taus.empty() ? beta_tau_grid(constants.front(), config.stop.stop_tol) : config.taus;

  const auto record = run_trajectory(system, spec.policy, spec.schedule, spec.x0, config.stop);
  TrajectoryOutcome out;
  out.prof = profile(record, config.gammas, taus);
  out.report = check_bounds(out.prof, constants);

  auto& s = out.summary;
  s.index = spec.index;
  s.seed = spec.seed;
  s.policy = describe(spec.policy);
  s.schedule = describe(spec.schedule);
  s.steps = record.steps;
  for (const auto& mc : out.report.moments) s.moment_ratios.push_back(mc.ratio);
  s.max_s_ratio = std::max(out.report.max_s_ratio, out.report.max_s_ratio_at_jumps);
  s.max_rearrangement_ratio = out.report.max_rearrangement_ratio;
  s.s_one = out.report.s_one;
  s.verdict = out.report.verdict;
  return out;
}

} // namespace

SweepResult ensemble_sweep(const SubspaceSystem& system, double kappa_star, const SweepConfig& config) {
  if (config.n_trajectories == 0) throw InvalidInput("ensemble_sweep: n_trajectories must be positive");
  if (config.gammas.empty()) throw InvalidInput("ensemble_sweep: at least one gamma is required");
  system.precompute_intersections();

  std::vector<TrajectorySummary> rows(config.n_trajectories);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= config.n_trajectories || failed.load()) return;
      try {
        rows[j] = evaluate(system, kappa_star, config, make_trajectory_spec(config, system.ambient_dim(), j)).summary;
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  const std::size_t n_workers = std::min(worker_count(config.threads), config.n_trajectories);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  SweepResult result;
  result.gammas = config.gammas;
  result.max_moment_ratio.assign(config.gammas.size(), 0.0);
  double worst_moment = -1.0;
  double worst_s = -1.0;
  double worst_rearr = -1.0;
  for (const auto& row : rows) {
    for (std::size_t g = 0; g < row.moment_ratios.size(); ++g) {
      result.max_moment_ratio[g] = std::max(result.max_moment_ratio[g], row.moment_ratios[g]);
      if (row.moment_ratios[g] > worst_moment) {
        worst_moment = row.moment_ratios[g];
        result.worst_moment = row.index;
      }
    }
    if (row.max_s_ratio > worst_s) {
      worst_s = row.max_s_ratio;
      result.worst_s = row.index;
    }
    if (row.max_rearrangement_ratio > worst_rearr) {
      worst_rearr = row.max_rearrangement_ratio;
      result.worst_rearrangement = row.index;
    }
    result.max_s_ratio = std::max(result.max_s_ratio, row.max_s_ratio);
    result.max_rearrangement_ratio = std::max(result.max_rearrangement_ratio, row.max_rearrangement_ratio);
    result.max_s_one = std::max(result.max_s_one, row.s_one);
    result.verdict = result.verdict && row.verdict;
  }
  result.rows = std::move(rows);

  auto worst = evaluate(system, kappa_star, config, make_trajectory_spec(config, system.ambient_dim(), result.worst_s));
  result.worst_profile = std::move(worst.prof);
  result.worst_report = std::move(worst.report);
  return result;
}

} // namespace projlab
