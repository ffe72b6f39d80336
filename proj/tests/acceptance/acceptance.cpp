// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "projlab/analysis.hpp"
#include "projlab/cli/commands.hpp"
#include "projlab/cli/scenario.hpp"
#include "projlab/error.hpp"
#include "projlab/regularity.hpp"

#ifndef PROJLAB_SOURCE_DIR
#define PROJLAB_SOURCE_DIR "."
#endif

using namespace projlab;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// 1. Relaxed-projection identities and the contraction equivalence on random triples.
Outcome identity_suite() {
  const auto t0 = Clock::now();
  CounterRng rng(0x1d);
  std::size_t failures = 0, equivalence_checks = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(trial % 7);
    const auto v = random_subspace(d, rng.below(d + 1), rng);
    const Vector x = random_gaussian(d, rng) * std::exp(rng.uniform(-5.0, 5.0));
    const double lambda = rng.uniform(0.0, 2.0);

    // the projection is recomputed here from the basis by least squares, not via project()
    const Matrix& q = v.basis();
    const Vector px = q.cols() == 0 ? Vector::Zero(static_cast<Eigen::Index>(d))
                                    : Vector(q * q.colPivHouseholderQr().solve(x));
    const Vector r = relaxed_project(v, lambda, x);
    const double n = x.norm(), n2 = x.squaredNorm(), dx = (x - px).norm();

    const double e1 = std::abs((x - r).norm() - lambda * dx) / n;
    const double e2 = std::abs(r.squaredNorm() - (px.squaredNorm() + (1 - lambda) * (1 - lambda) * dx * dx)) / n2;
    const double e3 = std::abs(n2 - r.squaredNorm() - lambda * (2 - lambda) * dx * dx) / n2;
    worst = std::max({worst, e1, e2, e3});
    failures += (e1 > 1e-12) + (e2 > 1e-10) + (e3 > 1e-10);

    // |P_{V,lambda} x| <= sqrt(1 - lambda (2 - lambda) eps^2) |x| iff theta_V(x) >= eps
    const double theta = relative_distance(v, x);
    const double contraction = std::sqrt(std::max(0.0, 1.0 - lambda * (2 - lambda) * theta * theta));
    if (r.norm() > contraction * n * (1 + 1e-10)) ++failures;
    const double eps = rng.uniform(0.0, 1.0);
    const double rhs = std::sqrt(std::max(0.0, 1.0 - lambda * (2 - lambda) * eps * eps)) * n;
    const double gap = lambda * (2 - lambda) * std::abs(eps * eps - theta * theta);
    if (gap > 1e-8) {
      ++equivalence_checks;
      const bool holds = r.norm() <= rhs * (1 + 1e-10);
      if (holds != (theta >= eps)) ++failures;
    }
  }
  const double t = seconds_since(t0);
  return {failures == 0 && t < 10.0,
          fmt::format("10000 triples, d in 2..8, {} equivalence checks, worst relative defect {:.2e}, {} failures, {:.2f} s",
                      equivalence_checks, worst, failures, t)};
}

// 2. Friedrichs angle against the independent minimization oracle.
Outcome angle_oracle() {
  const auto t0 = Clock::now();
  CounterRng rng(0xa2);
  constexpr std::size_t d = 6;
  double worst = 0.0;
  std::size_t pairs = 0, dim_mismatches = 0, nested_failures = 0;
  std::size_t by_meet[3] = {0, 0, 0};

  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = static_cast<std::size_t>(trial % 3);  // engineered intersection dimension
    const std::size_t room = d - k;
    const std::size_t a = 1 + rng.below(room - 1);
    const std::size_t b = 1 + rng.below(room - a);
    Matrix bv(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k + a));
    Matrix bw(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k + b));
    const auto common = random_subspace(d, k, rng);
    bv.leftCols(static_cast<Eigen::Index>(k)) = common.basis();
    bw.leftCols(static_cast<Eigen::Index>(k)) = common.basis();
    for (Eigen::Index j = static_cast<Eigen::Index>(k); j < bv.cols(); ++j) bv.col(j) = random_gaussian(d, rng);
    for (Eigen::Index j = static_cast<Eigen::Index>(k); j < bw.cols(); ++j) bw.col(j) = random_gaussian(d, rng);
    const auto v = make_subspace(bv);
    const auto w = make_subspace(bw);

    const auto rep = friedrichs_angle(v, w);
    if (rep.intersection_dim != k) ++dim_mismatches;
    ++by_meet[k];
    const double oracle = sin_friedrichs_oracle(v, w);
    worst = std::max(worst, std::abs(oracle - rep.sin_phi));
    ++pairs;
  }

  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t small = 1 + rng.below(4);
    const auto inner = random_subspace(d, small, rng);
    Matrix bigger(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(small + 1));
    bigger << inner.basis(), random_gaussian(d, rng);
    const auto outer = make_subspace(bigger);
    for (const auto& rep : {friedrichs_angle(inner, outer), friedrichs_angle(outer, inner),
                            friedrichs_angle(inner, inner)}) {
      if (!(rep.phi == pi / 2 && rep.nested)) ++nested_failures;
    }
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-4 && dim_mismatches == 0 && nested_failures == 0 && t < 60.0,
          fmt::format("{} pairs in R^6 ({}/{}/{} with 0/1/2-dim intersections), max |oracle - sin phi| = {:.2e}, "
                      "{} intersection-dim mismatches, {} nested failures, {:.2f} s",
                      pairs, by_meet[0], by_meet[1], by_meet[2], worst, dim_mismatches, nested_failures, t)};
}

// 3. Two lines at 30 degrees: geometric series.
Outcome two_lines() {
  const auto scenario = cli::load_scenario(PROJLAB_SOURCE_DIR "/scenarios/two_lines.json");
  const auto system = cli::build_system(scenario);
  const auto rec = run_trajectory(system, scenario.policy, cli::schedule_for(scenario.schedule, scenario.eta),
                                  cli::build_x0(scenario, system), scenario.stopping);
  const double s1 = moment_sum(rec, 1.0), s2 = moment_sum(rec, 2.0);
  const double expect1 = 0.5 / (1.0 - std::sqrt(3.0) / 2.0);
  return {std::abs(s1 - expect1) <= 1e-6 && std::abs(s2 - 1.0) <= 1e-8,
          fmt::format("gamma=1 sum {:.10f} (expected {:.10f}), gamma=2 sum {:.12f}, {} steps", s1, expect1, s2,
                      rec.steps)};
}

// Shared ensemble for criteria 4 to 8.

struct Batch {
  std::vector<std::size_t> dims;
  std::uint64_t system_seed = 0;
  double eta = 1.0;
  SubspaceSystem system;
  double kappa = 2.0;
  SweepConfig config;
  SweepResult result;
};

struct Ensemble {
  std::vector<Batch> batches;
  double seconds = 0.0;
  std::size_t trajectories = 0;
};

SubspaceSystem random_system(std::size_t d, const std::vector<std::size_t>& dims, std::uint64_t seed) {
  std::vector<Subspace> members;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    CounterRng rng(seed, k);
    members.push_back(random_subspace(d, dims[k], rng));
  }
  return SubspaceSystem(std::move(members));
}

Ensemble run_ensemble() {
  const auto t0 = Clock::now();
  Ensemble ens;
  const std::vector<std::vector<std::size_t>> shapes{{5, 6, 7}, {3, 4, 5}, {2, 4, 6}, {4, 4, 4}};
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    for (double eta : {0.3, 1.0}) {
      Batch b{shapes[s], 1000 + s, eta, random_system(8, shapes[s], 1000 + s), 2.0, {}, {}};
      b.kappa = kappa_star(b.system).kappa_star;
      b.config.policies = {CyclicControl{}, UniformRandomControl{11}, GreedyControl{},
                           AdversarialGapControl{{{0, 1000}, {1, 1}, {2, 1}}}};
      b.config.schedules = {{ConstantRelaxation{1.0}, eta}, {UniformRandomRelaxation{12}, eta}};
      b.config.n_trajectories = 25;
      b.config.gammas = {0.5, 1.0, 2.0};
      b.config.seed = derive_seed(77, s, static_cast<std::uint64_t>(eta * 10));
      b.result = ensemble_sweep(b.system, b.kappa, b.config);
      ens.trajectories += b.result.rows.size();
      ens.batches.push_back(std::move(b));
    }
  }
  ens.seconds = seconds_since(t0);
  return ens;
}

// 4. Moment bound over the ensemble.
Outcome moment_bound_holds(const Ensemble& ens) {
  std::size_t violations = 0;
  double worst[3] = {0, 0, 0};
  for (const auto& b : ens.batches) {
    for (const auto& row : b.result.rows) {
      for (std::size_t g = 0; g < 3; ++g) {
        worst[g] = std::max(worst[g], row.moment_ratios[g]);
        if (row.moment_ratios[g] > 1.0) ++violations;
      }
    }
  }
  return {violations == 0 && ens.trajectories == 200 && ens.seconds < 300.0,
          fmt::format("{} trajectories, max ratio sum/(C_N |x0|^gamma) = {:.2e} / {:.2e} / {:.2e} for gamma = 0.5 / 1 / 2, "
                      "{} violations, {:.1f} s",
                      ens.trajectories, worst[0], worst[1], worst[2], violations, ens.seconds)};
}

struct Rerun {
  const Batch* batch;
  TrajectorySpec spec;
  TrajectoryRecord record;
};

// 20 trajectories spread over batches, policies and schedules, rerun with iterates.
std::vector<Rerun> subsample(const Ensemble& ens) {
  std::vector<Rerun> out;
  for (std::size_t k = 0; k < 200; k += 10) {
    const auto& b = ens.batches[k / 25];
    const std::size_t local = (k % 25 + k / 25) % 25;
    auto spec = make_trajectory_spec(b.config, 8, local);
    auto rec = run_trajectory(b.system, spec.policy, spec.schedule, spec.x0, b.config.stop, true);
    out.push_back({&b, std::move(spec), std::move(rec)});
  }
  return out;
}

// 5. Per-step inequalities with iterates retained.
Outcome per_step(const std::vector<Rerun>& sample) {
  std::size_t growth = 0, identity = 0, membership = 0, monotone = 0, energy = 0, dichotomy = 0, mismatched = 0;
  std::size_t steps = 0;
  for (const auto& r : sample) {
    const auto& rec = r.record;
    steps += rec.steps;
    if (rec.steps != r.batch->result.rows[r.spec.index].steps) ++mismatched;
    growth += verify_growth_lemma(rec, r.batch->system, r.batch->kappa).size();
    identity += verify_displacement_identity(rec).size();
    membership += verify_displacement_membership(rec, r.batch->system) ? 0 : 1;
    monotone += verify_monotone_norms(rec).size();

    long double lhs = 0.0L;
    for (std::size_t n = 0; n < rec.steps; ++n) {
      const double lam = rec.relaxations[n];
      const double d = distance(r.batch->system[rec.controls[n]], rec.iterates[n]);
      lhs += static_cast<long double>(lam * (2 - lam) * d * d);
    }
    const double rhs = rec.x0_norm * rec.x0_norm - rec.final_point.squaredNorm();
    if (std::abs(static_cast<double>(lhs) - rhs) > 1e-8 * rec.x0_norm * rec.x0_norm) ++energy;

    const auto c = constants_for(r.batch->kappa, 3, r.batch->eta, 1.0);
    if (!verify_small_theta_dichotomy(rec, r.batch->system, c).holds) ++dichotomy;
  }
  const std::size_t total = growth + identity + membership + monotone + energy + dichotomy + mismatched;
  return {total == 0,
          fmt::format("{} trajectories, {} steps: growth {}, displacement identity {}, membership {}, monotone {}, "
                      "energy {}, dichotomy {}, replay mismatches {}",
                      sample.size(), steps, growth, identity, membership, monotone, energy, dichotomy, mismatched)};
}

// 6. Segment-wise induction.
Outcome segment_induction(const std::vector<Rerun>& sample) {
  std::size_t windows = 0, translated = 0, sum_v = 0, trans_v = 0, base_v = 0;
  std::vector<double> worst(3, 0.0);
  for (const auto& r : sample) {
    std::vector<TheoreticalConstants> cs{constants_for(r.batch->kappa, 3, r.batch->eta, 1.0),
                                         constants_for(r.batch->kappa, 3, r.batch->eta, 2.0)};
    SegmentInductionOptions opt;
    opt.random_windows = 100;
    opt.seed = r.spec.seed;
    const auto rep = segment_induction_test(r.record, r.batch->system, cs, opt);
    windows += rep.windows;
    translated += rep.translation_windows;
    sum_v += rep.sum_violations;
    trans_v += rep.translation_violations;
    base_v += rep.base_case_violations;
    for (std::size_t l = 0; l < 3; ++l) worst[l] = std::max(worst[l], rep.max_ratio_by_level[l]);
  }
  return {sum_v + trans_v + base_v == 0,
          fmt::format("{} windows ({} with translated trajectories), gamma in {{1, 2}}: max ratio by level "
                      "{:.2e} / {:.2e} / {:.2e}; violations: sums {}, translation {}, base case {}",
                      windows, translated, worst[0], worst[1], worst[2], sum_v, trans_v, base_v)};
}

// 7. Distribution function S(tau).
Outcome distribution(const Ensemble& ens, std::size_t& s_one_max) {
  double worst = 0.0;
  std::size_t violations = 0, grid_points = 0;
  s_one_max = 0;
  for (const auto& b : ens.batches) {
    for (const auto& row : b.result.rows) {
      worst = std::max(worst, row.max_s_ratio);
      if (row.max_s_ratio > 1.0 + bound_slack) ++violations;
      s_one_max = std::max(s_one_max, row.s_one);
    }
    grid_points = std::max(grid_points, b.result.worst_report.s_tau.size());
  }
  return {violations == 0,
          fmt::format("max S(tau)/bound = {:.2e} over the beta*-grid (up to {} points) and every jump delta*_n; "
                      "{} violations",
                      worst, grid_points, violations)};
}

// 8. Decreasing rearrangement.
Outcome rearrangement(const Ensemble& ens) {
  double worst = 0.0;
  std::size_t violations = 0;
  for (const auto& b : ens.batches) {
    for (const auto& row : b.result.rows) {
      worst = std::max(worst, row.max_rearrangement_ratio);
      if (!(row.max_rearrangement_ratio < 1.0)) ++violations;
    }
  }
  return {violations == 0, fmt::format("max delta*_n / (c* exp(-rho* n^(1/N))) = {:.6f}, {} violations", worst,
                                       violations)};
}

// 9. Constants on an (eta, gamma) grid.
Outcome constants_grid() {
  std::size_t checked = 0, failures = 0;
  double tightest = 0.0;
  for (double kappa : {2.0, 4.0, 10.0}) {
    for (std::size_t n : {1, 2, 3, 4}) {
      for (int i = 1; i <= 10; ++i) {
        const double eta = 0.1 * i;
        for (int j = 1; j <= 10; ++j) {
          const double gamma = 0.25 * j * j / 5.0 + 0.05 * j;  // 0.1 .. 5.5, denser near 0
          const auto c = constants_for(kappa, n, eta, gamma);
          ++checked;
          const double cn = moment_bound(c);
          tightest = std::max(tightest, cn / c.c_closed);
          if (cn > c.c_closed * (1 + 1e-12)) ++failures;
          if (!(c.beta_star > 1.0 - eta && c.beta_star < 1.0)) ++failures;
          if (std::abs(c.eps_star - 0.5 * std::pow(kappa, -static_cast<double>(n))) > 1e-12 * c.eps_star) ++failures;
        }
      }
    }
  }
  return {failures == 0, fmt::format("{} (kappa*, N, eta, gamma) points, max C_N / closed form = {:.12f}, {} failures",
                                     checked, tightest, failures)};
}

// 10. Byte-identical sweep summaries.
Outcome determinism() {
  const fs::path base = fs::temp_directory_path() / "projlab_acceptance_determinism";
  fs::remove_all(base);
  const std::string scenario = PROJLAB_SOURCE_DIR "/scenarios/acceptance_sweep.json";
  std::string files[2];
  int codes[2];
  for (int k = 0; k < 2; ++k) {
    std::ostringstream out, err;
    const auto dir = base / fmt::format("run{}", k);
    codes[k] = cli::run_cli({"sweep", "--quiet", "--config", scenario, "--out", dir.string()}, out, err);
    std::ifstream f(dir / "summary.csv", std::ios::binary);
    files[k].assign(std::istreambuf_iterator<char>(f), {});
  }
  fs::remove_all(base);
  const bool same = !files[0].empty() && files[0] == files[1];
  return {same && codes[0] == 0 && codes[1] == 0,
          fmt::format("two sweeps of scenarios/acceptance_sweep.json: exit codes {} and {}, summary.csv {} bytes, {}",
                      codes[0], codes[1], files[0].size(), same ? "identical" : "DIFFERENT")};
}

} // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    fmt::print("{} {:>2} {}: {}\n", o.pass ? "PASS" : "FAIL", id, name, o.detail);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  };

  report(1, "identity suite", identity_suite);
  report(2, "angle oracle", angle_oracle);
  report(3, "two-line closed form", two_lines);

  Ensemble ens;
  std::vector<Rerun> sample;
  bool ensemble_ok = true;
  try {
    ens = run_ensemble();
    sample = subsample(ens);
  } catch (const std::exception& e) {
    ensemble_ok = false;
    fmt::print("ensemble failed: {}\n", e.what());
  }
  auto needs_ensemble = [&](auto fn) {
    return [&, fn]() -> Outcome {
      if (!ensemble_ok) return {false, "ensemble did not run"};
      return fn();
    };
  };
  std::size_t s_one_max = 0;
  report(4, "moment bound", needs_ensemble([&] { return moment_bound_holds(ens); }));
  report(5, "per-step theory", needs_ensemble([&] { return per_step(sample); }));
  report(6, "segment induction", needs_ensemble([&] { return segment_induction(sample); }));
  report(7, "distribution bound", needs_ensemble([&] { return distribution(ens, s_one_max); }));
  if (ensemble_ok) {
    fmt::print("     side-check S(1) <= 1: max empirical S(1) = {} ({})\n", s_one_max,
               s_one_max <= 1 ? "holds" : "exceeded, reported only");
  }
  report(8, "rearrangement bound", needs_ensemble([&] { return rearrangement(ens); }));
  report(9, "constants grid", constants_grid);
  report(10, "determinism", determinism);

  fmt::print("{} of 10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
