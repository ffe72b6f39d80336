#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <numeric>

#include "projlab/analysis.hpp"
#include "projlab/error.hpp"

using namespace projlab;

namespace {

constexpr double pi = std::numbers::pi;

Subspace line2(double theta) {
  Matrix b(2, 1);
  b << std::cos(theta), std::sin(theta);
  return Subspace::from_orthonormal(b);
}

TrajectoryRecord synthetic(std::vector<double> displacements, double eta, std::size_t n) {
  TrajectoryRecord r;
  r.n_subspaces = n;
  r.eta = eta;
  r.x0_norm = 1.0;
  r.steps = displacements.size();
  r.displacement_norms = std::move(displacements);
  return r;
}

std::size_t brute_count(const std::vector<double>& deltas, double tau) {
  return static_cast<std::size_t>(std::count_if(deltas.begin(), deltas.end(), [&](double d) { return d >= tau; }));
}

SubspaceSystem random_system(std::size_t d, std::vector<std::size_t> dims, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<Subspace> members;
  for (auto k : dims) members.push_back(random_subspace(d, k, rng));
  return SubspaceSystem(std::move(members));
}

} // namespace

TEST_CASE("moment sums") {
  CHECK(moment_sum(synthetic({}, 1.0, 1), 1.0) == 0.0);
  CHECK(moment_sum(synthetic({0.5, 0.25}, 1.0, 1), 2.0) == doctest::Approx(0.3125));
  CHECK_THROWS_AS(moment_sum(synthetic({0.5}, 1.0, 1), 0.0), InvalidInput);

  // alternating projections between lines at 30 degrees from a unit vector on line 0
  SubspaceSystem sys({line2(0.0), line2(pi / 6)});
  const auto rec = run_trajectory(sys, CyclicControl{}, {ConstantRelaxation{1.0}, 1.0}, sys[0].basis().col(0));
  CHECK(moment_sum(rec, 1.0) == doctest::Approx(0.5 / (1.0 - std::sqrt(3.0) / 2.0)).epsilon(1e-10));
  CHECK(moment_sum(rec, 2.0) == doctest::Approx(1.0).epsilon(1e-12));

  double prev = 0.0;
  for (std::size_t m = 1; m <= rec.steps; m += 5) {
    auto prefix = rec;
    prefix.displacement_norms.resize(m);
    prefix.steps = m;
    const double s = moment_sum(prefix, 0.5);
    CHECK(s >= prev);
    prev = s;
  }
}

TEST_CASE("profile") {
  SUBCASE("one full-size step") {
    const auto rec = synthetic({1.5}, 0.5, 1);
    const std::vector<double> taus{1.0};
    const auto p = profile(rec, std::vector<double>{1.0}, taus);
    CHECK(p.deltas[0] == 1.0);
    CHECK(p.s_of_tau[0].second == 1);
  }
  SUBCASE("geometric sequence against the closed-form count") {
    const double r = 0.8, d0 = 0.9;
    std::vector<double> disp;
    for (int n = 0; n < 200; ++n) disp.push_back(d0 * std::pow(r, n));
    const auto rec = synthetic(disp, 1.0, 1);
    std::vector<double> taus;
    for (double t = 0.95; t > 1e-15; t *= 0.37) taus.push_back(t);
    const auto p = profile(rec, std::vector<double>{}, taus);
    for (const auto& [tau, count] : p.s_of_tau) {
      const auto expected =
          tau > d0 ? 0 : std::min<std::size_t>(200, static_cast<std::size_t>(std::floor(std::log(tau / d0) / std::log(r))) + 1);
      CHECK(count == expected);
      CHECK(count == brute_count(p.deltas, tau));
    }
  }
  SUBCASE("rearrangement") {
    const auto sorted = synthetic({0.9, 0.5, 0.5, 0.1, 0.0}, 1.0, 1);
    const auto p = profile(sorted, std::vector<double>{}, std::vector<double>{});
    CHECK(p.sorted_deltas == p.deltas);

    CounterRng rng(12);
    std::vector<double> disp(300);
    for (auto& d : disp) d = rng.uniform() * (rng.uniform() < 0.2 ? 0.0 : 1.0);
    const std::vector<double> gammas{0.5, 1.0, 3.0};
    const auto q = profile(synthetic(disp, 0.6, 2), gammas, std::vector<double>{});
    CHECK(std::is_sorted(q.sorted_deltas.rbegin(), q.sorted_deltas.rend()));
    CHECK(std::is_permutation(q.deltas.begin(), q.deltas.end(), q.sorted_deltas.begin()));
    for (double g : gammas) {
      double a = 0.0, b = 0.0;
      for (double d : q.deltas) a += std::pow(d, g);
      for (double d : q.sorted_deltas) b += std::pow(d, g);
      CHECK(a == doctest::Approx(b).epsilon(1e-14));
    }
    for (std::size_t n = 0; n < q.sorted_deltas.size(); ++n) {
      if (q.sorted_deltas[n] > 0.0) CHECK(q.count_at_least(q.sorted_deltas[n]) >= n + 1);
    }
    double prev = 1e9;
    for (double t = 1e-6; t <= 1.0; t *= 1.5) {
      const double s = static_cast<double>(q.count_at_least(t));
      CHECK(s <= prev);
      prev = s;
    }
  }
  SUBCASE("zero start") {
    auto rec = synthetic({}, 1.0, 1);
    rec.x0_norm = 0.0;
    CHECK_THROWS_AS(profile(rec, std::vector<double>{1.0}, std::vector<double>{}), DegenerateError);
  }
}

TEST_CASE("check bounds") {
  SubspaceSystem sys({line2(0.0), line2(pi / 6)});
  const auto rec = run_trajectory(sys, CyclicControl{}, {ConstantRelaxation{1.0}, 1.0}, sys[0].basis().col(0));
  const std::vector<double> gammas{0.5, 1.0, 2.0};
  std::vector<TheoreticalConstants> cs;
  for (double g : gammas) cs.push_back(constants_for(4.0, 2, 1.0, g));
  const auto taus = beta_tau_grid(cs.front(), 1e-14);
  const auto rep = check_bounds(profile(rec, gammas, taus), cs);
  CHECK(rep.verdict);
  CHECK(rep.moments.size() == 3);
  CHECK(rep.moments[1].ratio < 1e-2);
  CHECK(rep.s_one <= 1);
  CHECK(rep.max_s_ratio <= 1.0);
  CHECK(rep.max_rearrangement_ratio < 1.0);
  CHECK(rep.s_tau.size() == taus.size());

  std::vector<TheoreticalConstants> wrong_eta{constants_for(4.0, 2, 0.5, 1.0)};
  std::vector<TheoreticalConstants> wrong_n{constants_for(4.0, 3, 1.0, 1.0)};
  const auto prof = profile(rec, std::vector<double>{1.0}, taus);
  CHECK_THROWS_AS(check_bounds(prof, wrong_eta), ConfigError);
  CHECK_THROWS_AS(check_bounds(prof, wrong_n), ConfigError);

  // an over-sized displacement sequence trips the verdict
  std::vector<double> big(5000, 1.0);
  const auto bad = check_bounds(profile(synthetic(big, 1.0, 2), std::vector<double>{1.0}, taus),
                                std::vector<TheoreticalConstants>{cs[1]});
  CHECK_FALSE(bad.verdict);
}

TEST_CASE("segment induction") {
  SUBCASE("passes on random trajectories") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      auto sys = random_system(6, {4, 5, 3}, 300 + seed);
      const double kappa = kappa_star(sys).kappa_star;
      const double eta = seed % 2 == 0 ? 0.3 : 1.0;
      std::vector<TheoreticalConstants> cs{constants_for(kappa, 3, eta, 1.0), constants_for(kappa, 3, eta, 2.0)};
      CounterRng rng(seed);
      const ControlPolicy policy =
          seed % 3 == 0 ? ControlPolicy{AdversarialGapControl{{{0, 40}, {1, 3}, {2, 1}}}} : ControlPolicy{UniformRandomControl{seed}};
      const auto rec = run_trajectory(sys, policy, {UniformRandomRelaxation{seed}, eta}, random_gaussian(6, rng),
                                      {.max_steps = 2000}, true);
      const auto rep = segment_induction_test(rec, sys, cs);
      CHECK(rep.passed());
      CHECK(rep.windows > 100);
      CHECK(rep.translation_windows > 0);
      for (double r : rep.max_ratio_by_level) CHECK(r <= 1.0);
    }
  }
  SUBCASE("missing iterates and trivial records") {
    auto sys = random_system(3, {2}, 1);
    std::vector<TheoreticalConstants> cs{constants_for(2.0, 1, 1.0, 1.0)};
    const auto rec = run_trajectory(sys, CyclicControl{}, {ConstantRelaxation{1.0}, 1.0}, Vector::Ones(3), {.max_steps = 3});
    CHECK_THROWS_AS(segment_induction_test(rec, sys, cs), MissingData);
    const auto none = run_trajectory(sys, ExplicitControl{}, {ConstantRelaxation{1.0}, 1.0}, Vector::Ones(3), {}, true);
    CHECK(segment_induction_test(none, sys, cs).passed());
    CHECK(segment_induction_test(none, sys, cs).windows == 0);
  }
}

TEST_CASE("ensemble sweep") {
  auto sys = random_system(5, {3, 4, 3}, 9);
  const double kappa = kappa_star(sys).kappa_star;
  SweepConfig cfg;
  cfg.policies = {CyclicControl{}, UniformRandomControl{1}, GreedyControl{}};
  cfg.schedules = {{ConstantRelaxation{1.0}, 0.5}, {UniformRandomRelaxation{2}, 0.5}};
  cfg.n_trajectories = 12;
  cfg.seed = 77;
  cfg.stop.max_steps = 3000;

  SUBCASE("ensemble of one equals a direct check") {
    cfg.n_trajectories = 1;
    const auto res = ensemble_sweep(sys, kappa, cfg);
    const auto spec = make_trajectory_spec(cfg, 5, 0);
    const auto rec = run_trajectory(sys, spec.policy, spec.schedule, spec.x0, cfg.stop);
    std::vector<TheoreticalConstants> cs;
    for (double g : cfg.gammas) cs.push_back(constants_for(kappa, 3, 0.5, g));
    const auto taus = beta_tau_grid(cs.front(), cfg.stop.stop_tol);
    const auto rep = check_bounds(profile(rec, cfg.gammas, taus), cs);
    REQUIRE(res.rows.size() == 1);
    CHECK(res.rows[0].steps == rec.steps);
    CHECK(res.max_moment_ratio[1] == rep.moments[1].ratio);
    CHECK(res.max_s_ratio == std::max(rep.max_s_ratio, rep.max_s_ratio_at_jumps));
    CHECK(res.max_rearrangement_ratio == rep.max_rearrangement_ratio);
    CHECK(res.verdict == rep.verdict);
  }
  SUBCASE("deterministic and independent of the worker count") {
    cfg.threads = 1;
    const auto a = ensemble_sweep(sys, kappa, cfg);
    cfg.threads = 4;
    const auto b = ensemble_sweep(sys, kappa, cfg);
    REQUIRE(a.rows.size() == 12);
    CHECK(a.verdict);
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
      CHECK(a.rows[k].steps == b.rows[k].steps);
      CHECK(a.rows[k].moment_ratios == b.rows[k].moment_ratios);
      CHECK(a.rows[k].policy == b.rows[k].policy);
    }
    CHECK(a.max_moment_ratio == b.max_moment_ratio);
    CHECK(a.worst_s == b.worst_s);
    CHECK(a.rows[0].policy == "cyclic");
    CHECK(a.rows[1].policy != a.rows[0].policy);
  }
  SUBCASE("worker count honours the environment cap") {
    CHECK(worker_count(3) == 3);
    setenv("PROJLAB_THREADS", "2", 1);
    CHECK(worker_count(0) <= 2);
    CHECK(worker_count(8) == 2);
    CHECK(worker_count(1) == 1);
    unsetenv("PROJLAB_THREADS");
    CHECK(worker_count(0) >= 1);
  }
}
