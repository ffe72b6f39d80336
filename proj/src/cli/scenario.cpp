#include "projlab/cli/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "projlab/error.hpp"

namespace projlab::cli {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const Json& require(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw ConfigError(fmt::format("{}: missing required key '{}'", where, key));
  return obj.at(key);
}

template <class T>
T get_as(const Json& value, const std::string& where) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", where, e.what()));
  }
}

double get_number(const Json& value, const std::string& where) {
  if (!value.is_number()) throw ConfigError(fmt::format("{}: expected a number", where));
  return value.get<double>();
}

std::uint64_t get_seed(const Json& obj, const std::string& where) {
  const Json& s = require(obj, "seed", where);
  if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
    throw ConfigError(fmt::format("{}: seed must be a nonnegative integer", where));
  }
  return s.get<std::uint64_t>();
}

std::size_t get_count(const Json& value, const std::string& where) {
  if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
    throw ConfigError(fmt::format("{}: expected a nonnegative integer", where));
  }
  return value.get<std::size_t>();
}

Vector get_vector(const Json& value, const std::string& where) {
  if (!value.is_array()) throw ConfigError(fmt::format("{}: expected an array of numbers", where));
  Vector v(static_cast<Eigen::Index>(value.size()));
  for (std::size_t i = 0; i < value.size(); ++i) v(static_cast<Eigen::Index>(i)) = get_number(value[i], where);
  return v;
}

std::vector<double> get_numbers(const Json& value, const std::string& where) {
  if (!value.is_array()) throw ConfigError(fmt::format("{}: expected an array of numbers", where));
  std::vector<double> out;
  for (const auto& v : value) out.push_back(get_number(v, where));
  return out;
}

std::string get_kind(const Json& obj, const std::string& where) {
  return get_as<std::string>(require(obj, "kind", where), where + ".kind");
}

SystemSpec parse_system(const Json& j) {
  const std::string where = "system";
  const std::string kind = get_kind(j, where);
  if (kind == "explicit") {
    ExplicitSystem s;
    const Json& subs = require(j, "subspaces", where);
    if (!subs.is_array() || subs.empty()) throw ConfigError("system.subspaces: expected a nonempty array");
    for (std::size_t k = 0; k < subs.size(); ++k) {
      if (!subs[k].is_array()) throw ConfigError(fmt::format("system.subspaces[{}]: expected a list of vectors", k));
      std::vector<Vector> span;
      for (const auto& v : subs[k]) span.push_back(get_vector(v, fmt::format("system.subspaces[{}]", k)));
      s.spans.push_back(std::move(span));
    }
    return s;
  }
  if (kind == "random") {
    RandomSystem s;
    s.n_subspaces = get_count(require(j, "n_subspaces", where), "system.n_subspaces");
    if (s.n_subspaces == 0) throw ConfigError("system.n_subspaces must be positive");
    const Json& dims = require(j, "dims", where);
    if (dims.is_array()) {
      for (const auto& d : dims) s.dims.push_back(get_count(d, "system.dims"));
      if (s.dims.size() != s.n_subspaces) throw ConfigError("system.dims: one dimension per subspace required");
    } else {
      s.dims.assign(s.n_subspaces, get_count(dims, "system.dims"));
    }
    s.seed = get_seed(j, where);
    return s;
  }
  if (kind == "two_lines") {
    TwoLines s;
    if (j.contains("theta_deg")) {
      s.theta = get_number(j.at("theta_deg"), "system.theta_deg") * std::numbers::pi / 180.0;
    } else {
      s.theta = get_number(require(j, "theta", where), "system.theta");
    }
    return s;
  }
  if (kind == "coordinate_planes") return CoordinatePlanes{};
  if (kind == "generic_triple") return GenericTriple{get_seed(j, where)};
  throw ConfigError(fmt::format("system.kind: unknown kind '{}'", kind));
}

ControlPolicy parse_policy(const Json& j, const std::string& where) {
  const std::string kind = get_kind(j, where);
  if (kind == "cyclic") return CyclicControl{};
  if (kind == "greedy") return GreedyControl{};
  if (kind == "uniform_random") return UniformRandomControl{get_seed(j, where)};
  if (kind == "adversarial_gap") {
    AdversarialGapControl g;
    const Json& pattern = require(j, "pattern", where);
    if (!pattern.is_array() || pattern.empty()) throw ConfigError(where + ".pattern: expected a nonempty array");
    for (const auto& block : pattern) {
      if (!block.is_array() || block.size() != 2) {
        throw ConfigError(where + ".pattern: each block is [index, repeat_count]");
      }
      g.blocks.emplace_back(get_count(block[0], where + ".pattern"), get_count(block[1], where + ".pattern"));
    }
    return g;
  }
  if (kind == "explicit") {
    ExplicitControl e;
    const Json& seq = require(j, "sequence", where);
    if (!seq.is_array()) throw ConfigError(where + ".sequence: expected an array");
    for (const auto& i : seq) e.sequence.push_back(get_count(i, where + ".sequence"));
    return e;
  }
  throw ConfigError(fmt::format("{}.kind: unknown policy '{}'", where, kind));
}

RelaxationKind parse_schedule(const Json& j, const std::string& where) {
  const std::string kind = get_kind(j, where);
  if (kind == "constant") return ConstantRelaxation{get_number(require(j, "lambda", where), where + ".lambda")};
  if (kind == "uniform_random_in_band") return UniformRandomRelaxation{get_seed(j, where)};
  if (kind == "alternating_extremes") return AlternatingExtremes{};
  if (kind == "explicit") return ExplicitRelaxation{get_numbers(require(j, "sequence", where), where + ".sequence")};
  throw ConfigError(fmt::format("{}.kind: unknown schedule '{}'", where, kind));
}

X0Spec parse_x0(const Json& j) {
  const std::string kind = get_kind(j, "x0");
  if (kind == "explicit") return ExplicitX0{get_vector(require(j, "coords", "x0"), "x0.coords")};
  if (kind == "random") return RandomX0{get_seed(j, "x0")};
  if (kind == "unit_on_subspace") return UnitOnSubspace{get_count(require(j, "index", "x0"), "x0.index")};
  throw ConfigError(fmt::format("x0.kind: unknown kind '{}'", kind));
}

void check_eta(double eta, const std::string& where) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw ConfigError(fmt::format(
        "{}: eta = {} outside (0, 1]; the C_1 denominator 1 - (1 - eta)^gamma vanishes at eta = 0", where, eta));
  }
}

std::size_t implied_dim(const SystemSpec& spec) {
  return std::visit(overloaded{
                        [](const ExplicitSystem& s) -> std::size_t {
                          for (const auto& span : s.spans) {
                            if (!span.empty()) return static_cast<std::size_t>(span.front().size());
                          }
                          return 0;
                        },
                        [](const RandomSystem&) -> std::size_t { return 0; },
                        [](const TwoLines&) -> std::size_t { return 2; },
                        [](const CoordinatePlanes&) -> std::size_t { return 3; },
                        [](const GenericTriple&) -> std::size_t { return 3; },
                    },
                    spec);
}

} // namespace

Scenario parse_scenario(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("scenario: top level must be an object");
  Scenario s;
  s.system = parse_system(require(doc, "system", "scenario"));

  const std::size_t implied = implied_dim(s.system);
  if (doc.contains("ambient_dim")) {
    s.ambient_dim = get_count(doc.at("ambient_dim"), "ambient_dim");
    if (implied != 0 && implied != s.ambient_dim) {
      throw ConfigError(fmt::format("ambient_dim = {} conflicts with the system (R^{})", s.ambient_dim, implied));
    }
  } else {
    s.ambient_dim = implied;
  }
  if (s.ambient_dim == 0) throw ConfigError("ambient_dim: required and positive");

  if (doc.contains("eta")) s.eta = get_number(doc.at("eta"), "eta");
  check_eta(s.eta, "eta");
  if (doc.contains("gammas")) s.gammas = get_numbers(doc.at("gammas"), "gammas");
  if (s.gammas.empty()) throw ConfigError("gammas: at least one moment order required");
  for (double g : s.gammas) {
    if (!(g > 0.0) || !std::isfinite(g)) throw ConfigError(fmt::format("gammas: {} is not a positive number", g));
  }
  if (doc.contains("taus")) s.taus = get_numbers(doc.at("taus"), "taus");
  for (double t : s.taus) {
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError(fmt::format("taus: {} outside (0, 1]", t));
  }
  if (doc.contains("policy")) s.policy = parse_policy(doc.at("policy"), "policy");
  if (doc.contains("schedule")) s.schedule = parse_schedule(doc.at("schedule"), "schedule");
  if (doc.contains("x0")) s.x0 = parse_x0(doc.at("x0"));

  if (doc.contains("stopping")) {
    const Json& st = doc.at("stopping");
    if (st.contains("max_steps")) s.stopping.max_steps = get_count(st.at("max_steps"), "stopping.max_steps");
    if (st.contains("stop_tol")) s.stopping.stop_tol = get_number(st.at("stop_tol"), "stopping.stop_tol");
    if (st.contains("stall_window")) {
      s.stopping.stall_window = get_count(st.at("stall_window"), "stopping.stall_window");
    }
    if (!(s.stopping.stop_tol > 0.0 && s.stopping.stop_tol < 1.0)) throw ConfigError("stopping.stop_tol outside (0, 1)");
    if (s.stopping.stall_window == 0) throw ConfigError("stopping.stall_window must be positive");
  }
  if (doc.contains("outputs")) {
    const Json& out = doc.at("outputs");
    if (out.contains("dir")) s.out_dir = get_as<std::string>(out.at("dir"), "outputs.dir");
    if (out.contains("verbosity")) s.verbosity = get_as<int>(out.at("verbosity"), "outputs.verbosity");
  }
  if (doc.contains("sweep")) {
    const Json& sw = doc.at("sweep");
    SweepSpec spec;
    spec.n_trajectories = get_count(require(sw, "n_trajectories", "sweep"), "sweep.n_trajectories");
    if (spec.n_trajectories == 0) throw ConfigError("sweep.n_trajectories must be positive");
    spec.seed = get_seed(sw, "sweep");
    if (sw.contains("policies")) {
      for (const auto& p : sw.at("policies")) spec.policies.push_back(parse_policy(p, "sweep.policies"));
    } else {
      spec.policies.push_back(s.policy);
    }
    if (sw.contains("schedules")) {
      for (const auto& p : sw.at("schedules")) spec.schedules.push_back(parse_schedule(p, "sweep.schedules"));
    } else {
      spec.schedules.push_back(s.schedule);
    }
    if (spec.policies.empty() || spec.schedules.empty()) throw ConfigError("sweep: empty policy or schedule list");
    if (sw.contains("etas")) spec.etas = get_numbers(sw.at("etas"), "sweep.etas");
    for (double e : spec.etas) check_eta(e, "sweep.etas");
    s.sweep = std::move(spec);
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open scenario file '{}'", path));
  Json doc;
  try {
    doc = Json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
  return parse_scenario(doc);
}

void apply_seed_override(Scenario& s, std::uint64_t seed) {
  std::visit(overloaded{
                 [&](RandomSystem& r) { r.seed = seed; },
                 [&](GenericTriple& g) { g.seed = seed; },
                 [](auto&) {},
             },
             s.system);
  auto reseed_policy = [&](ControlPolicy& p) {
    if (auto* r = std::get_if<UniformRandomControl>(&p)) r->seed = seed;
  };
  auto reseed_schedule = [&](RelaxationKind& k) {
    if (auto* r = std::get_if<UniformRandomRelaxation>(&k)) r->seed = seed;
  };
  reseed_policy(s.policy);
  reseed_schedule(s.schedule);
  if (auto* r = std::get_if<RandomX0>(&s.x0)) r->seed = seed;
  if (s.sweep) {
    s.sweep->seed = seed;
    for (auto& p : s.sweep->policies) reseed_policy(p);
    for (auto& k : s.sweep->schedules) reseed_schedule(k);
  }
}

SubspaceSystem build_system(const Scenario& s) {
  const std::size_t d = s.ambient_dim;
  std::vector<Subspace> members;
  std::visit(overloaded{
                 [&](const ExplicitSystem& e) {
                   for (const auto& span : e.spans) members.push_back(make_subspace(span, d));
                 },
                 [&](const RandomSystem& r) {
                   for (std::size_t k = 0; k < r.n_subspaces; ++k) {
                     if (r.dims[k] > d) {
                       throw ConfigError(fmt::format("system.dims[{}] = {} exceeds ambient_dim {}", k, r.dims[k], d));
                     }
                     CounterRng rng(r.seed, k);
                     members.push_back(random_subspace(d, r.dims[k], rng));
                   }
                 },
                 [&](const TwoLines& t) {
                   members.push_back(Subspace::from_orthonormal(Vector{{1.0, 0.0}}));
                   members.push_back(Subspace::from_orthonormal(Vector{{std::cos(t.theta), std::sin(t.theta)}}));
                 },
                 [&](const CoordinatePlanes&) {
                   const Matrix eye = Matrix::Identity(3, 3);
                   Matrix xy(3, 2), yz(3, 2), xz(3, 2);
                   xy << eye.col(0), eye.col(1);
                   yz << eye.col(1), eye.col(2);
                   xz << eye.col(0), eye.col(2);
                   members.push_back(Subspace::from_orthonormal(xy));
                   members.push_back(Subspace::from_orthonormal(yz));
                   members.push_back(Subspace::from_orthonormal(xz));
                 },
                 [&](const GenericTriple& g) {
                   for (std::size_t k = 0; k < 3; ++k) {
                     CounterRng rng(g.seed, k);
                     members.push_back(random_subspace(3, 2, rng));
                   }
                 },
             },
             s.system);
  return SubspaceSystem(std::move(members));
}

Vector build_x0(const Scenario& s, const SubspaceSystem& system) {
  return std::visit(overloaded{
                        [&](const ExplicitX0& e) -> Vector {
                          if (static_cast<std::size_t>(e.coords.size()) != system.ambient_dim()) {
                            throw ConfigError(fmt::format("x0.coords has {} entries, ambient_dim is {}",
                                                          e.coords.size(), system.ambient_dim()));
                          }
                          return e.coords;
                        },
                        [&](const RandomX0& r) -> Vector {
                          CounterRng rng(r.seed, 0x70);
                          return random_gaussian(system.ambient_dim(), rng);
                        },
                        [&](const UnitOnSubspace& u) -> Vector {
                          if (u.index >= system.size()) {
                            throw ConfigError(fmt::format("x0.index {} out of range (N = {})", u.index, system.size()));
                          }
                          const Subspace& v = system[u.index];
                          if (v.is_zero()) throw ConfigError("x0: unit_on_subspace needs a nonzero subspace");
                          return v.basis().col(0);
                        },
                    },
                    s.x0);
}

RelaxationSchedule schedule_for(const RelaxationKind& kind, double eta) { return RelaxationSchedule{kind, eta}; }

} // namespace projlab::cli
