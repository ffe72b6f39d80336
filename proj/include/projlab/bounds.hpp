#pragma once

#include <cstddef>
#include <vector>

#include "projlab/regularity.hpp"

namespace projlab {

/// Every closed-form constant attached to a system (through kappa*), a relaxation floor eta,
/// and a moment order gamma.
struct TheoreticalConstants {
  std::size_t n_subspaces = 1;
  double eta = 1.0;
  double gamma = 1.0;
  double kappa_star = 2.0;
  double eps_star = 0.25;       // kappa*^-N / 2
  double beta_star = 0.0;       // sqrt(1 - eta (2 - eta) eps*^2)
  double log_beta_star = 0.0;   // kept separately: beta* rounds to 1 long before its log underflows
  std::vector<double> c_seq;    // C_1 .. C_N
  double c_closed = 0.0;        // (3 / (1 - beta*^gamma))^(N-1) C_1
  double rho_star = 0.0;        // (N / 9) log(1 / beta*)
  double c_star = 1.0;          // beta*^-N
};

TheoreticalConstants constants_for(double kappa_star, std::size_t n_subspaces, double eta, double gamma);
TheoreticalConstants constants_for(const RegularityCertificate& cert, std::size_t n_subspaces, double eta,
                                   double gamma);

/// 3^(N-1) e^N (1 + log tau / (N log beta*))^(N-1) (1 + log tau / (N log(1 - eta))); the last factor is 1 at eta = 1.
double s_tau_bound_refined(const TheoreticalConstants& c, double tau);
/// 9^N (1 + log tau / (N log beta*))^N.
double s_tau_bound_coarse(const TheoreticalConstants& c, double tau);
/// Sharper of the two distribution-function bounds, for tau in (0, 1].
double s_tau_bound(const TheoreticalConstants& c, double tau);

/// c* exp(-rho* n^(1/N)).
double rearrangement_bound(const TheoreticalConstants& c, std::size_t n);

/// C_N: the moment sum of order gamma is at most C_N |x_0|^gamma.
double moment_bound(const TheoreticalConstants& c);

/// tau values beta*^k, k = 0..K with beta*^K > floor. When K+1 exceeds max_points the
/// exponents are thinned to max_points evenly spaced values of k (always keeping 0 and K).
std::vector<double> beta_tau_grid(const TheoreticalConstants& c, double floor, std::size_t max_points = 256);

/// Values above this are written as an overflow sentinel in reports.
inline constexpr double overflow_threshold = 1e300;

} // namespace projlab
