#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "projlab/analysis.hpp"
#include "projlab/bounds.hpp"
#include "projlab/dynamics.hpp"
#include "projlab/regularity.hpp"
#include "projlab/subspace.hpp"

namespace projlab {

using Json = nlohmann::ordered_json;

/// Finite values below the overflow threshold as numbers, everything else as "overflow".
Json number_or_overflow(double value);

/// Basis vectors as rows.
Json to_json(const Subspace& v);
Json to_json(const SubspaceSystem& system);
Json to_json(const AngleReport& angle);
/// {kappa_star, worst_pair, innately_regular, min_phi, table: [{I, J, phi, kappa, ...}]}
Json to_json(const RegularityCertificate& cert);
Json to_json(const TheoreticalConstants& c);
/// Moment and distribution checks in full; the rearrangement list is summarized (see the CSV writer).
Json to_json(const BoundReport& report);
Json to_json(const SegmentInductionReport& report);
Json trajectory_summary_json(const TrajectoryRecord& record);
Json to_json(const SweepResult& result);

/// "%.17g"; shortest round-trip formatting is not needed, only determinism.
std::string format_number(double value);

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& record);
void write_summary_csv(std::ostream& os, const SweepResult& result);
void write_s_tau_csv(std::ostream& os, const BoundReport& report);
void write_rearrangement_csv(std::ostream& os, const BoundReport& report);

} // namespace projlab
