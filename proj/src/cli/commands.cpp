#include "projlab/cli/commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "projlab/analysis.hpp"
#include "projlab/error.hpp"

namespace projlab::cli {

namespace fs = std::filesystem;

namespace {

fs::path output_dir(const Scenario& s, const CommandOptions& o) {
  fs::path dir = o.out_dir ? fs::path(*o.out_dir) : fs::path(s.out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const Json& doc) {
  std::ofstream f(path);
  if (!f) throw Error(fmt::format("cannot write {}", path.string()));
  f << doc.dump(2) << '\n';
}

template <class Writer, class T>
void write_csv(const fs::path& path, Writer writer, const T& data) {
  std::ofstream f(path);
  if (!f) throw Error(fmt::format("cannot write {}", path.string()));
  writer(f, data);
}

std::vector<TheoreticalConstants> constants_per_gamma(const RegularityCertificate& cert, std::size_t n, double eta,
                                                      const std::vector<double>& gammas) {
  std::vector<TheoreticalConstants> out;
  for (double g : gammas) out.push_back(constants_for(cert, n, eta, g));
  return out;
}

std::string trajectory_file(std::size_t index) { return fmt::format("trajectory_{:04d}.csv", index); }

} // namespace

int cmd_angles(const Scenario& scenario, const CommandOptions& options, std::ostream& out) {
  const auto system = build_system(scenario);
  const auto cert = kappa_star(system);
  const auto dir = output_dir(scenario, options);
  write_json(dir / "report.json", Json{{"system", to_json(system)}, {"certificate", to_json(cert)}});
  if (!options.quiet) {
    fmt::print(out, "kappa_star = {:.12g}  worst_pair = ({}, {})  min_phi = {:.12g}\n", cert.kappa_star,
               cert.worst_first.to_string(), cert.worst_second.to_string(), cert.min_phi);
    for (const auto& e : cert.table) {
      if (e.angle.nested) continue;
      fmt::print(out, "  {} {}  phi = {:.12g}  kappa = {:.12g}  dim(V_I ∩ V_J) = {}\n", e.first.to_string(),
                 e.second.to_string(), e.angle.phi, e.angle.kappa_pair, e.angle.intersection_dim);
    }
  }
  return exit_ok;
}

int cmd_constants(const Scenario& scenario, const CommandOptions& options, std::ostream& out) {
  const auto system = build_system(scenario);
  const auto cert = kappa_star(system);
  const auto table = constants_per_gamma(cert, system.size(), scenario.eta, scenario.gammas);

  Json theory = Json::array();
  bool consistent = true;
  for (const auto& c : table) {
    theory.push_back(to_json(c));
    consistent = consistent && moment_bound(c) <= c.c_closed * (1.0 + 1e-12);
  }
  const auto dir = output_dir(scenario, options);
  write_json(dir / "report.json",
             Json{{"certificate", Json{{"kappa_star", cert.kappa_star}}}, {"theory", theory},
                  {"closed_form_consistent", consistent}});
  if (!options.quiet) {
    const auto& c0 = table.front();
    fmt::print(out, "N = {}  eta = {}  kappa_star = {:.12g}  eps_star = {:.12g}  beta_star = {:.17g}\n",
               c0.n_subspaces, c0.eta, c0.kappa_star, c0.eps_star, c0.beta_star);
    fmt::print(out, "rho_star = {:.12g}  c_star = {:.12g}\n", c0.rho_star, c0.c_star);
    for (const auto& c : table) {
      fmt::print(out, "gamma = {}:", c.gamma);
      for (std::size_t l = 0; l < c.c_seq.size(); ++l) fmt::print(out, "  C_{} = {:.12g}", l + 1, c.c_seq[l]);
      fmt::print(out, "  closed form = {:.12g}\n", c.c_closed);
    }
  }
  return consistent ? exit_ok : exit_violation;
}

int cmd_simulate(const Scenario& scenario, const CommandOptions& options, std::ostream& out) {
  const auto system = build_system(scenario);
  const auto cert = kappa_star(system);
  const auto constants = constants_per_gamma(cert, system.size(), scenario.eta, scenario.gammas);
  const auto schedule = schedule_for(scenario.schedule, scenario.eta);
  const Vector x0 = build_x0(scenario, system);
  const auto record =
      run_trajectory(system, scenario.policy, schedule, x0, scenario.stopping, options.retain_iterates);
  const auto dir = output_dir(scenario, options);

  Json report{{"scenario",
               Json{{"policy", describe(scenario.policy)}, {"schedule", describe(schedule)}, {"eta", scenario.eta}}},
              {"system", to_json(system)},
              {"certificate", to_json(cert)},
              {"theory", Json::array()},
              {"trajectory", trajectory_summary_json(record)}};
  for (const auto& c : constants) report["theory"].push_back(to_json(c));

  if (record.x0_norm == 0.0) {
    report["degenerate"] = true;
    report["profile"] = nullptr;
    write_json(dir / "report.json", report);
    if (!options.quiet) fmt::print(out, "x0 = 0: degenerate profile, {} steps recorded\n", record.steps);
    return exit_ok;
  }
  report["degenerate"] = false;

  const auto taus = scenario.taus.empty() ? beta_tau_grid(constants.front(), scenario.stopping.stop_tol) : scenario.taus;
  const auto prof = profile(record, scenario.gammas, taus);
  const auto bounds = check_bounds(prof, constants);
  report["bounds"] = to_json(bounds);
  bool ok = bounds.verdict;

  if (options.retain_iterates) {
    const auto growth = verify_growth_lemma(record, system, cert.kappa_star);
    const bool membership = verify_displacement_membership(record, system);
    const auto identity = verify_displacement_identity(record);
    const auto monotone = verify_monotone_norms(record);
    const auto segments = segment_induction_test(record, system, constants);
    report["verification"] = Json{{"growth_violations", growth.size()},
                                  {"displacement_membership", membership},
                                  {"displacement_identity_violations", identity.size()},
                                  {"monotone_norm_violations", monotone.size()},
                                  {"segment_induction", to_json(segments)}};
    ok = ok && growth.empty() && membership && identity.empty() && monotone.empty() && segments.passed();
  }

  write_json(dir / "report.json", report);
  write_csv(dir / "s_tau.csv", write_s_tau_csv, bounds);
  write_csv(dir / "rearrangement.csv", write_rearrangement_csv, bounds);
  if (scenario.verbosity >= 2 || !ok) write_csv(dir / trajectory_file(0), write_trajectory_csv, record);

  if (!options.quiet) {
    double path = 0.0;
    for (double d : record.displacement_norms) path += d;
    fmt::print(out, "steps = {}  path_length = {:.12g}  final_norm = {:.6g}\n", record.steps, path,
               record.final_point.norm());
    for (const auto& m : bounds.moments) {
      fmt::print(out, "gamma = {}: sum = {:.12g}  bound = {:.6g}  ratio = {:.3g}\n", m.gamma, m.empirical, m.bound,
                 m.ratio);
    }
    fmt::print(out, "max S ratio = {:.3g}  max rearrangement ratio = {:.3g}  S(1) = {}\n", bounds.max_s_ratio,
               bounds.max_rearrangement_ratio, bounds.s_one);
    fmt::print(out, "verdict: {}\n", ok ? "all bounds hold" : "BOUND VIOLATION");
  }
  return ok ? exit_ok : exit_violation;
}

int cmd_sweep(const Scenario& scenario, const CommandOptions& options, std::ostream& out) {
  if (!scenario.sweep) throw ConfigError("sweep: scenario has no 'sweep' section");
  const auto& spec = *scenario.sweep;
  const auto system = build_system(scenario);
  const auto cert = kappa_star(system);
  const auto dir = output_dir(scenario, options);
  const std::vector<double> etas = spec.etas.empty() ? std::vector<double>{scenario.eta} : spec.etas;

  Json runs = Json::array();
  SweepResult merged;
  merged.gammas = scenario.gammas;
  merged.max_moment_ratio.assign(scenario.gammas.size(), 0.0);
  std::optional<BoundReport> worst_report;
  std::string summary;
  bool ok = true;

  for (std::size_t e = 0; e < etas.size(); ++e) {
    SweepConfig config;
    config.policies = spec.policies;
    for (const auto& kind : spec.schedules) config.schedules.push_back(schedule_for(kind, etas[e]));
    config.n_trajectories = spec.n_trajectories;
    config.gammas = scenario.gammas;
    config.taus = scenario.taus;
    config.seed = derive_seed(spec.seed, e);
    config.stop = scenario.stopping;

    const auto result = ensemble_sweep(system, cert.kappa_star, config);
    Json run = to_json(result);
    run["eta"] = etas[e];
    Json theory = Json::array();
    for (double g : scenario.gammas) theory.push_back(to_json(constants_for(cert, system.size(), etas[e], g)));
    run["theory"] = std::move(theory);
    runs.push_back(std::move(run));

    for (std::size_t g = 0; g < result.gammas.size(); ++g) {
      merged.max_moment_ratio[g] = std::max(merged.max_moment_ratio[g], result.max_moment_ratio[g]);
    }
    if (!worst_report || result.max_s_ratio > merged.max_s_ratio) worst_report = result.worst_report;
    merged.max_s_ratio = std::max(merged.max_s_ratio, result.max_s_ratio);
    merged.max_rearrangement_ratio = std::max(merged.max_rearrangement_ratio, result.max_rearrangement_ratio);
    merged.verdict = merged.verdict && result.verdict;
    ok = ok && result.verdict;
    merged.rows.insert(merged.rows.end(), result.rows.begin(), result.rows.end());

    for (const auto& row : result.rows) {
      if (scenario.verbosity < 2 && row.verdict) continue;
      const auto traj = make_trajectory_spec(config, system.ambient_dim(), row.index);
      const auto record = run_trajectory(system, traj.policy, traj.schedule, traj.x0, config.stop);
      write_csv(dir / fmt::format("eta{}_{}", e, trajectory_file(row.index)), write_trajectory_csv, record);
    }
  }

  write_json(dir / "report.json", Json{{"certificate", Json{{"kappa_star", cert.kappa_star}}},
                                       {"verdict", ok},
                                       {"runs", std::move(runs)}});
  write_csv(dir / "summary.csv", write_summary_csv, merged);
  write_csv(dir / "s_tau.csv", write_s_tau_csv, *worst_report);
  write_csv(dir / "rearrangement.csv", write_rearrangement_csv, *worst_report);

  if (!options.quiet) {
    fmt::print(out, "trajectories = {}  kappa_star = {:.12g}\n", merged.rows.size(), cert.kappa_star);
    for (std::size_t g = 0; g < merged.gammas.size(); ++g) {
      fmt::print(out, "gamma = {}: max moment ratio = {:.3g}\n", merged.gammas[g], merged.max_moment_ratio[g]);
    }
    fmt::print(out, "max S ratio = {:.3g}  max rearrangement ratio = {:.3g}\n", merged.max_s_ratio,
               merged.max_rearrangement_ratio);
    fmt::print(out, "verdict: {}\n", ok ? "all bounds hold" : "BOUND VIOLATION");
  }
  return ok ? exit_ok : exit_violation;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"projlab: relaxed projections onto subspaces, regularity constants, and displacement bounds"};
  app.require_subcommand(1);

  std::string config;
  CommandOptions options;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "scenario file (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides outputs.dir)");
    sub->add_option("--seed-override", seed_override, "replace every seed in the scenario");
    sub->add_flag("--retain-iterates", options.retain_iterates, "keep iterates and run per-step verification");
    sub->add_flag("--quiet", options.quiet, "suppress console summary");
  };
  auto* angles = app.add_subcommand("angles", "Friedrichs angles and kappa*");
  auto* constants = app.add_subcommand("constants", "theoretical constants per gamma");
  auto* simulate = app.add_subcommand("simulate", "single trajectory with bound report");
  auto* sweep = app.add_subcommand("sweep", "seeded ensemble of trajectories");
  for (auto* sub : {angles, constants, simulate, sweep}) add_common(sub);

  std::vector<std::string> argv_store{"projlab"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return exit_error;
  }
  if (!out_dir.empty()) options.out_dir = out_dir;

  try {
    Scenario scenario = load_scenario(config);
    if (seed_override) apply_seed_override(scenario, *seed_override);
    if (angles->parsed()) return cmd_angles(scenario, options, out);
    if (constants->parsed()) return cmd_constants(scenario, options, out);
    if (simulate->parsed()) return cmd_simulate(scenario, options, out);
    return cmd_sweep(scenario, options, out);
  } catch (const CapacityError& e) {
    err << "capacity error: " << e.what() << '\n';
    return exit_capacity;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const InvalidInput& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_error;
  }
}

} // namespace projlab::cli
