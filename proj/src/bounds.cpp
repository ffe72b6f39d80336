#include "projlab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "projlab/error.hpp"

namespace projlab {

namespace {

// 1 - r^gamma for r = exp(log_r), accurate when r is within rounding of 1.
double one_minus_pow(double log_r, double gamma) { return -std::expm1(gamma * log_r); }

void validate(double kappa_star, std::size_t n, double eta, double gamma) {
  if (n == 0) throw InvalidInput("constants_for: N must be at least 1");
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw InvalidInput(fmt::format(
        "constants_for: eta = {} outside (0, 1]; the C_1 denominator 1 - (1 - eta)^gamma vanishes as eta -> 0", eta));
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw InvalidInput(fmt::format("constants_for: gamma = {} must be positive and finite", gamma));
  }
  if (!(kappa_star >= 2.0) || !std::isfinite(kappa_star)) {
    throw InvalidInput(fmt::format("constants_for: kappa* = {} must be finite and at least 2", kappa_star));
  }
}

void validate_tau(double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidInput(fmt::format("s_tau_bound: tau = {} outside (0, 1]", tau));
}

} // namespace

TheoreticalConstants constants_for(double kappa_star, std::size_t n_subspaces, double eta, double gamma) {
  validate(kappa_star, n_subspaces, eta, gamma);
  TheoreticalConstants c;
  c.n_subspaces = n_subspaces;
  c.eta = eta;
  c.gamma = gamma;
  c.kappa_star = kappa_star;

  const double n = static_cast<double>(n_subspaces);
  c.eps_star = 0.5 * std::pow(kappa_star, -n);
  c.log_beta_star = 0.5 * std::log1p(-eta * (2.0 - eta) * c.eps_star * c.eps_star);
  c.beta_star = std::exp(c.log_beta_star);

  const double lead = std::pow(2.0 - eta, gamma);
  const double log_one_minus_eta = std::log1p(-eta);  // -inf at eta = 1
  const double c1 = lead / one_minus_pow(log_one_minus_eta, gamma);
  const double contraction_gap = one_minus_pow(c.log_beta_star, gamma);

  c.c_seq.reserve(n_subspaces);
  c.c_seq.push_back(c1);
  for (std::size_t l = 1; l < n_subspaces; ++l) {
    const double prev = c.c_seq.back();
    c.c_seq.push_back(prev + (prev + lead) / contraction_gap);
  }
  c.c_closed = std::pow(3.0 / contraction_gap, n - 1.0) * c1;
  c.rho_star = (n / 9.0) * (-c.log_beta_star);
  c.c_star = std::exp(-n * c.log_beta_star);
  return c;
}

TheoreticalConstants constants_for(const RegularityCertificate& cert, std::size_t n_subspaces, double eta,
                                   double gamma) {
  return constants_for(cert.kappa_star, n_subspaces, eta, gamma);
}

double s_tau_bound_refined(const TheoreticalConstants& c, double tau) {
  validate_tau(tau);
  const double n = static_cast<double>(c.n_subspaces);
  const double log_tau = std::log(tau);
  const double beta_factor = 1.0 + log_tau / (n * c.log_beta_star);
  const double eta_factor = c.eta >= 1.0 ? 1.0 : 1.0 + log_tau / (n * std::log1p(-c.eta));
  return std::pow(3.0, n - 1.0) * std::exp(n) * std::pow(beta_factor, n - 1.0) * eta_factor;
}

double s_tau_bound_coarse(const TheoreticalConstants& c, double tau) {
  validate_tau(tau);
  const double n = static_cast<double>(c.n_subspaces);
  const double beta_factor = 1.0 + std::log(tau) / (n * c.log_beta_star);
  return std::pow(9.0, n) * std::pow(beta_factor, n);
}

double s_tau_bound(const TheoreticalConstants& c, double tau) {
  return std::min(s_tau_bound_refined(c, tau), s_tau_bound_coarse(c, tau));
}

double rearrangement_bound(const TheoreticalConstants& c, std::size_t n) {
  const double root = std::pow(static_cast<double>(n), 1.0 / static_cast<double>(c.n_subspaces));
  return c.c_star * std::exp(-c.rho_star * root);
}

double moment_bound(const TheoreticalConstants& c) { return c.c_seq.back(); }

std::vector<double> beta_tau_grid(const TheoreticalConstants& c, double floor, std::size_t max_points) {
  if (!(floor > 0.0 && floor < 1.0)) throw InvalidInput("beta_tau_grid: floor must lie in (0, 1)");
  if (max_points < 2) throw InvalidInput("beta_tau_grid: need at least two points");
  // largest K with K log beta* > log floor
  const double k_real = std::log(floor) / c.log_beta_star;
  double k_max = std::ceil(k_real) - 1.0;
  if (k_max < 0.0) k_max = 0.0;

  std::vector<double> exponents;
  if (k_max + 1.0 <= static_cast<double>(max_points)) {
    for (double k = 0.0; k <= k_max; k += 1.0) exponents.push_back(k);
  } else {
    for (std::size_t j = 0; j < max_points; ++j) {
      const double k = std::round(k_max * static_cast<double>(j) / static_cast<double>(max_points - 1));
      if (exponents.empty() || k > exponents.back()) exponents.push_back(k);
    }
  }
  std::vector<double> taus;
  taus.reserve(exponents.size());
  for (double k : exponents) taus.push_back(std::min(1.0, std::exp(k * c.log_beta_star)));
  return taus;
}

} // namespace projlab
