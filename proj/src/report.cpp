#include "projlab/report.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

namespace projlab {

namespace {

Json subset_json(IndexSet s) {
  Json arr = Json::array();
  for (auto i : s.members()) arr.push_back(i);
  return arr;
}

const char* stop_reason_name(StopReason r) {
  switch (r) {
  case StopReason::max_steps: return "max_steps";
  case StopReason::stalled: return "stalled";
  case StopReason::sequence_exhausted: return "sequence_exhausted";
  }
  return "unknown";
}

} // namespace

Json number_or_overflow(double value) {
  if (!std::isfinite(value) || std::abs(value) > overflow_threshold) return "overflow";
  return value;
}

std::string format_number(double value) { return fmt::format("{:.17g}", value); }

Json to_json(const Subspace& v) {
  Json basis = Json::array();
  for (Eigen::Index j = 0; j < v.basis().cols(); ++j) {
    Json row = Json::array();
    for (Eigen::Index i = 0; i < v.basis().rows(); ++i) row.push_back(v.basis()(i, j));
    basis.push_back(std::move(row));
  }
  return Json{{"ambient_dim", v.ambient_dim()}, {"dim", v.dim()}, {"basis", std::move(basis)}};
}

Json to_json(const SubspaceSystem& system) {
  Json members = Json::array();
  for (const auto& v : system.members()) members.push_back(to_json(v));
  return Json{{"ambient_dim", system.ambient_dim()}, {"n_subspaces", system.size()}, {"subspaces", std::move(members)}};
}

Json to_json(const AngleReport& a) {
  return Json{{"phi", a.phi},
              {"cos_phi", a.cos_phi},
              {"sin_phi", a.sin_phi},
              {"intersection_dim", a.intersection_dim},
              {"kappa", a.kappa_pair},
              {"nested", a.nested}};
}

Json to_json(const RegularityCertificate& cert) {
  Json table = Json::array();
  for (const auto& e : cert.table) {
    Json row{{"I", subset_json(e.first)}, {"J", subset_json(e.second)}};
    row.update(to_json(e.angle));
    table.push_back(std::move(row));
  }
  return Json{{"kappa_star", cert.kappa_star},
              {"worst_pair", Json::array({subset_json(cert.worst_first), subset_json(cert.worst_second)})},
              {"innately_regular", cert.innately_regular},
              {"min_phi", cert.min_phi},
              {"table", std::move(table)}};
}

Json to_json(const TheoreticalConstants& c) {
  Json seq = Json::array();
  for (double v : c.c_seq) seq.push_back(number_or_overflow(v));
  return Json{{"N", c.n_subspaces},
              {"eta", c.eta},
              {"gamma", c.gamma},
              {"kappa_star", number_or_overflow(c.kappa_star)},
              {"eps_star", c.eps_star},
              {"beta_star", c.beta_star},
              {"log_beta_star", c.log_beta_star},
              {"c_seq", std::move(seq)},
              {"c_N", number_or_overflow(c.c_seq.back())},
              {"c_closed", number_or_overflow(c.c_closed)},
              {"rho_star", c.rho_star},
              {"c_star", number_or_overflow(c.c_star)}};
}

Json to_json(const BoundReport& r) {
  Json moments = Json::array();
  for (const auto& m : r.moments) {
    moments.push_back(Json{{"gamma", m.gamma},
                           {"empirical", m.empirical},
                           {"bound", number_or_overflow(m.bound)},
                           {"ratio", m.ratio}});
  }
  Json s_tau = Json::array();
  for (const auto& s : r.s_tau) {
    s_tau.push_back(Json{{"tau", s.tau}, {"empirical", s.empirical}, {"bound", number_or_overflow(s.bound)}});
  }
  return Json{{"verdict", r.verdict},
              {"moments", std::move(moments)},
              {"max_moment_ratio", r.max_moment_ratio},
              {"s_tau", std::move(s_tau)},
              {"max_s_ratio", r.max_s_ratio},
              {"max_s_ratio_at_jumps", r.max_s_ratio_at_jumps},
              {"rearrangement_points", r.rearrangement.size()},
              {"max_rearrangement_ratio", r.max_rearrangement_ratio},
              {"s_one", r.s_one},
              {"s_one_at_most_one", r.s_one <= 1}};
}

Json to_json(const SegmentInductionReport& r) {
  Json levels = Json::array();
  for (double v : r.max_ratio_by_level) levels.push_back(v);
  return Json{{"passed", r.passed()},
              {"windows", r.windows},
              {"translation_windows", r.translation_windows},
              {"sum_violations", r.sum_violations},
              {"translation_violations", r.translation_violations},
              {"base_case_violations", r.base_case_violations},
              {"max_ratio_by_level", std::move(levels)}};
}

Json trajectory_summary_json(const TrajectoryRecord& record) {
  double path_length = 0.0;
  for (double d : record.displacement_norms) path_length += d;
  Json final_point = Json::array();
  for (Eigen::Index i = 0; i < record.final_point.size(); ++i) final_point.push_back(record.final_point(i));
  return Json{{"steps", record.steps},
              {"stop_reason", stop_reason_name(record.stop_reason)},
              {"x0_norm", record.x0_norm},
              {"final_norm", record.final_point.norm()},
              {"path_length", path_length},
              {"distinct_indices", record.index_sets.empty() ? 0 : record.index_sets.back().size()},
              {"final_point", std::move(final_point)}};
}

Json to_json(const SweepResult& s) {
  Json per_gamma = Json::array();
  for (std::size_t g = 0; g < s.gammas.size(); ++g) {
    per_gamma.push_back(Json{{"gamma", s.gammas[g]}, {"max_moment_ratio", s.max_moment_ratio[g]}});
  }
  std::size_t failures = 0;
  for (const auto& r : s.rows) failures += r.verdict ? 0 : 1;
  return Json{{"verdict", s.verdict},
              {"n_trajectories", s.rows.size()},
              {"violating_trajectories", failures},
              {"moments", std::move(per_gamma)},
              {"max_s_ratio", s.max_s_ratio},
              {"max_rearrangement_ratio", s.max_rearrangement_ratio},
              {"max_s_one", s.max_s_one},
              {"worst_trajectory",
               Json{{"moment", s.worst_moment}, {"s_tau", s.worst_s}, {"rearrangement", s.worst_rearrangement}}},
              {"worst_report", to_json(s.worst_report)}};
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& record) {
  os << "step,i_n,lambda_n,displacement_norm,x_norm,theta_in\n";
  for (std::size_t n = 0; n < record.steps; ++n) {
    os << n << ',' << record.controls[n] << ',' << format_number(record.relaxations[n]) << ','
       << format_number(record.displacement_norms[n]) << ',' << format_number(record.x_norms[n]) << ','
       << format_number(record.thetas[n]) << '\n';
  }
}

void write_summary_csv(std::ostream& os, const SweepResult& result) {
  os << "index,seed,policy,schedule,steps";
  for (double g : result.gammas) os << ",moment_ratio_g" << format_number(g);
  os << ",max_s_ratio,max_rearrangement_ratio,s_one,verdict\n";
  for (const auto& r : result.rows) {
    os << r.index << ',' << r.seed << ',' << r.policy << ',' << r.schedule << ',' << r.steps;
    for (double v : r.moment_ratios) os << ',' << format_number(v);
    os << ',' << format_number(r.max_s_ratio) << ',' << format_number(r.max_rearrangement_ratio) << ',' << r.s_one
       << ',' << (r.verdict ? "true" : "false") << '\n';
  }
}

void write_s_tau_csv(std::ostream& os, const BoundReport& report) {
  os << "tau,empirical_s,bound\n";
  for (const auto& s : report.s_tau) {
    os << format_number(s.tau) << ',' << s.empirical << ',' << format_number(s.bound) << '\n';
  }
}

void write_rearrangement_csv(std::ostream& os, const BoundReport& report) {
  os << "n,delta_star,bound\n";
  for (const auto& r : report.rearrangement) {
    os << r.n << ',' << format_number(r.value) << ',' << format_number(r.bound) << '\n';
  }
}

} // namespace projlab
