#include "projlab/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "projlab/error.hpp"

namespace projlab {

namespace {

constexpr double half_pi = std::numbers::pi / 2.0;

AngleReport nested_report(std::size_t intersection_dim, double cross_check) {
  AngleReport r;
  r.phi = half_pi;
  r.cos_phi = 0.0;
  r.sin_phi = 1.0;
  r.intersection_dim = intersection_dim;
  r.kappa_pair = 2.0;
  r.cross_check_cos = cross_check;
  r.nested = true;
  return r;
}

/// Smallest sine of the principal angles between a and b, computed from the side with
/// fewer dimensions so that directions of the larger side orthogonal to the smaller do not count.
double min_principal_sine(const Subspace& a, const Subspace& b) {
  const Subspace& small = a.dim() <= b.dim() ? a : b;
  const Subspace& large = a.dim() <= b.dim() ? b : a;
  const Matrix residual = small.basis() - large.basis() * (large.basis().transpose() * small.basis());
  Eigen::JacobiSVD<Matrix> svd(residual);
  const auto& s = svd.singularValues();
  return std::clamp(s(s.size() - 1), 0.0, 1.0);
}

// Objective for the sine oracle, restricted to span(q) and evaluated at x = q z / |z|.
class SineObjective {
public:
  SineObjective(const Subspace& v, const Subspace& w, Matrix q) : v_(v), w_(w), q_(std::move(q)) {}

  Eigen::Index dim() const { return q_.cols(); }

  double exact(const Vector& z) const {
    const Vector x = q_ * (z / z.norm());
    return distance(v_, x) + distance(w_, x);
  }

  // Smoothed value plus a radial penalty pinning |z| near 1; gradient written to grad.
  double smoothed(const Vector& z, double mu, Vector& grad) const {
    const double r = z.norm();
    const Vector zh = z / r;
    const Vector x = q_ * zh;
    const Vector ax = x - project(v_, x);
    const Vector bx = x - project(w_, x);
    const double sa = std::sqrt(ax.squaredNorm() + mu * mu);
    const double sb = std::sqrt(bx.squaredNorm() + mu * mu);
    const Vector gx = ax / sa + bx / sb;
    const Vector gq = q_.transpose() * gx;
    const double radial = r * r - 1.0;
    grad = (gq - zh * zh.dot(gq)) / r + 4.0 * radial * z;
    return sa + sb + radial * radial;
  }

private:
  const Subspace& v_;
  const Subspace& w_;
  Matrix q_;
};

Vector bfgs(const SineObjective& obj, Vector z, double mu, int max_iter) {
  const Eigen::Index m = obj.dim();
  Matrix h = Matrix::Identity(m, m);
  Vector g(m);
  double f = obj.smoothed(z, mu, g);
  for (int it = 0; it < max_iter; ++it) {
    if (g.norm() < 1e-13) break;
    Vector p = -h * g;
    if (g.dot(p) >= 0.0) {
      h.setIdentity();
      p = -g;
    }
    double t = 1.0;
    Vector z_new(m), g_new(m);
    double f_new = 0.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      z_new = z + t * p;
      if (z_new.norm() > 1e-8) {
        f_new = obj.smoothed(z_new, mu, g_new);
        if (f_new <= f + 1e-4 * t * g.dot(p)) {
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted) break;
    const Vector s = z_new - z;
    const Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-18) {
      const double rho = 1.0 / sy;
      const Matrix eye = Matrix::Identity(m, m);
      h = (eye - rho * s * y.transpose()) * h * (eye - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    const double df = f - f_new;
    z = z_new;
    g = g_new;
    f = f_new;
    if (df >= 0.0 && df < 1e-16 * std::max(1.0, std::abs(f))) break;
  }
  return z;
}

// The smoothed search stalls where the objective is nearly flat along the geodesic from V toward W
// (slope 1 - cos phi). Finish on the face F: step x <- P_{Z^⊥} P_F P_G x, renormalized, while the
// exact objective keeps decreasing.
double polish_on_face(const Subspace& f, const Subspace& g, const Subspace& domain, Vector x) {
  auto restrict = [&](const Vector& y) -> Vector { return domain.basis() * (domain.basis().transpose() * y); };
  auto value = [&](const Vector& y) { return distance(f, y) + distance(g, y); };
  x = restrict(project(f, x));
  if (x.norm() < 1e-12) return std::numeric_limits<double>::infinity();
  x.normalize();
  double fx = value(x);
  for (int it = 0; it < 200000; ++it) {
    Vector y = restrict(project(f, project(g, x)));
    const double ny = y.norm();
    if (ny < 1e-12) break;
    y /= ny;
    const double fy = value(y);
    if (!(fy < fx)) break;
    const double gain = fx - fy;
    x = std::move(y);
    fx = fy;
    if (gain < 1e-17) break;
  }
  return fx;
}

} // namespace

std::vector<double> principal_angles(const Subspace& v, const Subspace& w) {
  if (v.ambient_dim() != w.ambient_dim()) throw InvalidInput("principal_angles: ambient dimensions differ");
  if (v.is_zero() || w.is_zero()) return {};
  const Matrix m = v.basis().transpose() * w.basis();
  Eigen::JacobiSVD<Matrix> svd(m);
  std::vector<double> angles;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    angles.push_back(std::acos(std::clamp(svd.singularValues()(i), 0.0, 1.0)));
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

AngleReport friedrichs_angle(const Subspace& v, const Subspace& w) {
  if (v.ambient_dim() != w.ambient_dim()) throw InvalidInput("friedrichs_angle: ambient dimensions differ");
  if (v.is_zero() || w.is_zero()) return nested_report(0, 0.0);

  const Subspace common = intersect(v, w);
  const std::size_t d0 = common.dim();

  double cross = 0.0;
  {
    Eigen::JacobiSVD<Matrix> svd(v.basis().transpose() * w.basis());
    const auto& s = svd.singularValues();
    if (static_cast<Eigen::Index>(d0) < s.size()) cross = std::clamp(s(static_cast<Eigen::Index>(d0)), 0.0, 1.0);
  }

  const Subspace common_perp = complement(common);
  const Subspace v_rest = d0 == 0 ? v : intersect(v, common_perp);
  const Subspace w_rest = d0 == 0 ? w : intersect(w, common_perp);
  if (v_rest.is_zero() || w_rest.is_zero()) return nested_report(d0, cross);

  Eigen::JacobiSVD<Matrix> svd(v_rest.basis().transpose() * w_rest.basis());
  AngleReport r;
  r.intersection_dim = d0;
  r.cross_check_cos = cross;
  r.cos_phi = std::clamp(svd.singularValues()(0), 0.0, 1.0);
  r.sin_phi = min_principal_sine(v_rest, w_rest);
  r.phi = std::atan2(r.sin_phi, r.cos_phi);
  r.kappa_pair = 2.0 / r.sin_phi;
  return r;
}

double sin_friedrichs_oracle(const Subspace& v, const Subspace& w, int n_restarts, std::uint64_t seed) {
  if (v.ambient_dim() != w.ambient_dim()) throw InvalidInput("sin_friedrichs_oracle: ambient dimensions differ");
  if (n_restarts < 1) throw InvalidInput("sin_friedrichs_oracle: need at least one restart");
  const Subspace common = intersect(v, w);
  if (common.dim() == v.dim() && common.dim() == w.dim()) {
    throw UndefinedOracle("sin_friedrichs_oracle: V and W span the same subspace");
  }
  const Subspace domain = complement(common);
  const SineObjective obj(v, w, domain.basis());

  CounterRng rng(seed, 0xa11e);
  double best = std::numeric_limits<double>::infinity();
  Vector best_z;
  for (int restart = 0; restart < n_restarts; ++restart) {
    Vector z = random_unit_vector(static_cast<std::size_t>(obj.dim()), rng);
    for (double mu = 1e-2; mu >= 1e-11; mu *= 0.1) {
      z = bfgs(obj, z, mu, 300);
    }
    if (const double f = obj.exact(z); f < best) {
      best = f;
      best_z = z;
    }
  }
  const Vector x = domain.basis() * best_z.normalized();
  return std::min({best, polish_on_face(v, w, domain, x), polish_on_face(w, v, domain, x)});
}

RegularityCertificate kappa_star(const SubspaceSystem& system, std::size_t max_subsets) {
  const std::size_t n = system.size();
  if (n > max_subsets) {
    throw CapacityError(fmt::format(
        "kappa_star: N = {} exceeds the enumeration limit {} (4^N subset pairs); pass an explicit subset family "
        "or raise the limit",
        n, max_subsets));
  }
  system.precompute_intersections();

  RegularityCertificate cert;
  cert.kappa_star = 0.0;
  const std::uint32_t last = IndexSet::all(n).bits();
  for (std::uint32_t i = 0; i <= last; ++i) {
    for (std::uint32_t j = i; j <= last; ++j) {
      const IndexSet a(i), b(j);
      PairAngle entry{a, b, friedrichs_angle(system.intersection(a), system.intersection(b))};
      if (entry.angle.kappa_pair > cert.kappa_star) {
        cert.kappa_star = entry.angle.kappa_pair;
        cert.worst_first = a;
        cert.worst_second = b;
      }
      cert.min_phi = std::min(cert.min_phi, entry.angle.phi);
      if (!(entry.angle.phi > 0.0)) cert.innately_regular = false;
      cert.table.push_back(entry);
    }
  }
  return cert;
}

double empirical_regularity_kappa(const SubspaceSystem& system, IndexSet subset, std::size_t n_samples,
                                  std::uint64_t rng_seed) {
  if (subset.empty()) throw InvalidInput("empirical_regularity_kappa: index set must be nonempty");
  const Subspace& joint = system.intersection(subset);
  const auto members = subset.members();

  CounterRng rng(rng_seed, 0x4e6);
  double best = 0.0;
  std::size_t used = 0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const Vector x = random_unit_vector(system.ambient_dim(), rng);
    double worst = 0.0;
    for (auto i : members) worst = std::max(worst, distance(system[i], x));
    if (worst <= 1e-12) continue;
    best = std::max(best, distance(joint, x) / worst);
    ++used;
  }
  if (used == 0) throw DegenerateError("empirical_regularity_kappa: every sample lay in all subspaces");
  return best;
}

} // namespace projlab
