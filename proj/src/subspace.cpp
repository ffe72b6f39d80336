#include "projlab/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <fmt/format.h>

#include "projlab/error.hpp"

namespace projlab {

namespace {

void require_finite(const Vector& x, const char* what) {
  if (!x.allFinite()) {
    throw InvalidInput(fmt::format("{}: non-finite coordinates", what));
  }
}

void require_dims(const Subspace& v, const Vector& x, const char* what) {
  if (static_cast<std::size_t>(x.size()) != v.ambient_dim()) {
    throw InvalidInput(fmt::format("{}: vector has dimension {}, subspace lives in R^{}", what, x.size(),
                                   v.ambient_dim()));
  }
}

void require_same_space(const Subspace& v, const Subspace& w, const char* what) {
  if (v.ambient_dim() != w.ambient_dim()) {
    throw InvalidInput(fmt::format("{}: ambient dimensions differ ({} vs {})", what, v.ambient_dim(), w.ambient_dim()));
  }
}

} // namespace

// IndexSet

IndexSet IndexSet::of(std::initializer_list<std::size_t> members) {
  IndexSet s;
  for (auto i : members) {
    if (i >= max_members) throw InvalidInput(fmt::format("IndexSet: index {} exceeds capacity", i));
    s = s.with(i);
  }
  return s;
}

IndexSet IndexSet::from(std::span<const std::size_t> members) {
  IndexSet s;
  for (auto i : members) {
    if (i >= max_members) throw InvalidInput(fmt::format("IndexSet: index {} exceeds capacity", i));
    s = s.with(i);
  }
  return s;
}

IndexSet IndexSet::all(std::size_t n) {
  if (n > max_members) throw InvalidInput(fmt::format("IndexSet: {} members exceeds capacity", n));
  return IndexSet(n == max_members ? ~std::uint32_t{0} : ((std::uint32_t{1} << n) - 1U));
}

std::vector<std::size_t> IndexSet::members() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < max_members; ++i) {
    if (contains(i)) out.push_back(i);
  }
  return out;
}

std::string IndexSet::to_string() const {
  std::string s = "{";
  bool first = true;
  for (auto i : members()) {
    if (!first) s += ",";
    s += std::to_string(i);
    first = false;
  }
  return s + "}";
}

// Subspace

Subspace::Subspace(std::size_t ambient_dim, Matrix basis) : ambient_dim_(ambient_dim), basis_(std::move(basis)) {}

Subspace Subspace::zero(std::size_t ambient_dim) {
  if (ambient_dim == 0) throw InvalidInput("Subspace: ambient dimension must be positive");
  return Subspace(ambient_dim, Matrix(static_cast<Eigen::Index>(ambient_dim), 0));
}

Subspace Subspace::full(std::size_t ambient_dim) {
  if (ambient_dim == 0) throw InvalidInput("Subspace: ambient dimension must be positive");
  const auto d = static_cast<Eigen::Index>(ambient_dim);
  return Subspace(ambient_dim, Matrix::Identity(d, d));
}

Subspace Subspace::from_orthonormal(Matrix basis) {
  if (basis.rows() == 0) throw InvalidInput("Subspace: ambient dimension must be positive");
  if (basis.cols() > basis.rows()) throw InvalidInput("Subspace: more basis vectors than ambient dimension");
  if (!basis.allFinite()) throw InvalidInput("Subspace: non-finite basis");
  const auto d = static_cast<std::size_t>(basis.rows());
  Subspace s(d, std::move(basis));
  if (s.orthonormality_defect() > tol::ortho) {
    throw InvalidInput(fmt::format("Subspace: basis is not orthonormal (defect {:.3g})", s.orthonormality_defect()));
  }
  return s;
}

double Subspace::orthonormality_defect() const {
  if (dim() == 0) return 0.0;
  const Matrix gram = basis_.transpose() * basis_;
  return (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

// Construction

Subspace make_subspace(const Matrix& columns) {
  if (columns.rows() == 0) throw InvalidInput("make_subspace: ambient dimension must be positive");
  if (!columns.allFinite()) throw InvalidInput("make_subspace: non-finite input coordinates");
  const auto d = static_cast<std::size_t>(columns.rows());
  if (columns.cols() == 0) return Subspace::zero(d);

  Eigen::JacobiSVD<Matrix> svd(columns, Eigen::ComputeThinU);
  const auto& sigma = svd.singularValues();
  if (sigma.size() == 0 || sigma(0) == 0.0) return Subspace::zero(d);

  Eigen::Index rank = 0;
  const double cut = tol::rank * sigma(0);
  while (rank < sigma.size() && sigma(rank) > cut) ++rank;
  return Subspace::from_orthonormal(svd.matrixU().leftCols(rank));
}

Subspace make_subspace(std::span<const Vector> spanning, std::size_t ambient_dim) {
  if (ambient_dim == 0) throw InvalidInput("make_subspace: ambient dimension must be positive");
  const auto d = static_cast<Eigen::Index>(ambient_dim);
  Matrix cols(d, static_cast<Eigen::Index>(spanning.size()));
  for (std::size_t j = 0; j < spanning.size(); ++j) {
    if (spanning[j].size() != d) {
      throw InvalidInput(fmt::format("make_subspace: vector {} has dimension {}, expected {}", j, spanning[j].size(), d));
    }
    require_finite(spanning[j], "make_subspace");
    cols.col(static_cast<Eigen::Index>(j)) = spanning[j];
  }
  return make_subspace(cols);
}

// Projections and distances

Vector project(const Subspace& v, const Vector& x) {
  require_dims(v, x, "project");
  if (v.is_zero()) return Vector::Zero(x.size());
  const Matrix& q = v.basis();
  return q * (q.transpose() * x);
}

Vector relaxed_project(const Subspace& v, double lambda, const Vector& x) {
  if (!(lambda >= 0.0 && lambda <= 2.0)) {
    throw InvalidInput(fmt::format("relaxed_project: lambda = {} outside [0, 2]", lambda));
  }
  return (1.0 - lambda) * x + lambda * project(v, x);
}

double distance(const Subspace& v, const Vector& x) { return (x - project(v, x)).norm(); }

double relative_distance(const Subspace& v, const Vector& x, double zero_floor) {
  const double nx = x.norm();
  if (nx == 0.0 || nx <= zero_floor) return 0.0;
  return std::clamp(distance(v, x) / nx, 0.0, 1.0);
}

// Lattice operations

Subspace intersect(const Subspace& v, const Subspace& w) {
  require_same_space(v, w, "intersect");
  const std::size_t d = v.ambient_dim();
  if (v.is_zero() || w.is_zero()) return Subspace::zero(d);

  const Matrix m = v.basis().transpose() * w.basis();
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();

  Eigen::Index common = 0;
  while (common < sigma.size() && sigma(common) >= 1.0 - tol::intersect) ++common;
  if (common == 0) return Subspace::zero(d);

  // Average the paired principal vectors so the result sits symmetrically between V and W.
  const Matrix pv = v.basis() * svd.matrixU().leftCols(common);
  const Matrix pw = w.basis() * svd.matrixV().leftCols(common);
  return make_subspace(0.5 * (pv + pw));
}

Subspace complement(const Subspace& v) {
  const std::size_t d = v.ambient_dim();
  if (v.is_zero()) return Subspace::full(d);
  if (v.is_full()) return Subspace::zero(d);
  Eigen::JacobiSVD<Matrix> svd(v.basis(), Eigen::ComputeFullU);
  const auto k = static_cast<Eigen::Index>(v.dim());
  return Subspace::from_orthonormal(svd.matrixU().rightCols(static_cast<Eigen::Index>(d) - k));
}

Subspace sum(const Subspace& v, const Subspace& w) {
  require_same_space(v, w, "sum");
  Matrix cols(static_cast<Eigen::Index>(v.ambient_dim()), static_cast<Eigen::Index>(v.dim() + w.dim()));
  cols << v.basis(), w.basis();
  return make_subspace(cols);
}

bool contains(const Subspace& outer, const Subspace& inner, double tolerance) {
  require_same_space(outer, inner, "contains");
  for (Eigen::Index j = 0; j < inner.basis().cols(); ++j) {
    if (distance(outer, inner.basis().col(j)) > tolerance) return false;
  }
  return true;
}

bool span_equal(const Subspace& a, const Subspace& b, double tolerance) {
  return a.dim() == b.dim() && contains(a, b, tolerance) && contains(b, a, tolerance);
}

// Random generation

Vector random_gaussian(std::size_t ambient_dim, CounterRng& rng) {
  Vector x(static_cast<Eigen::Index>(ambient_dim));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
  return x;
}

Vector random_unit_vector(std::size_t ambient_dim, CounterRng& rng) {
  for (;;) {
    Vector x = random_gaussian(ambient_dim, rng);
    const double n = x.norm();
    if (n > 1e-12) return x / n;
  }
}

Subspace random_subspace(std::size_t ambient_dim, std::size_t dim, CounterRng& rng) {
  if (dim > ambient_dim) {
    throw InvalidInput(fmt::format("random_subspace: dimension {} exceeds ambient {}", dim, ambient_dim));
  }
  const auto d = static_cast<Eigen::Index>(ambient_dim);
  Matrix g(d, static_cast<Eigen::Index>(dim));
  for (Eigen::Index j = 0; j < g.cols(); ++j) g.col(j) = random_gaussian(ambient_dim, rng);
  return make_subspace(g);
}

// SubspaceSystem

SubspaceSystem::SubspaceSystem(std::vector<Subspace> members)
    : members_(std::move(members)), cache_(std::make_unique<Cache>()) {
  if (members_.empty()) throw InvalidInput("SubspaceSystem: at least one subspace required");
  if (members_.size() > IndexSet::max_members) {
    throw CapacityError(fmt::format("SubspaceSystem: at most {} subspaces supported", IndexSet::max_members));
  }
  ambient_dim_ = members_.front().ambient_dim();
  for (const auto& m : members_) {
    if (m.ambient_dim() != ambient_dim_) throw InvalidInput("SubspaceSystem: members live in different ambient spaces");
  }
}

const Subspace& SubspaceSystem::operator[](std::size_t i) const {
  if (i >= members_.size()) {
    throw InvalidInput(fmt::format("SubspaceSystem: index {} out of range (N = {})", i, members_.size()));
  }
  return members_[i];
}

const Subspace& SubspaceSystem::intersection(IndexSet subset) const {
  if (!subset.is_subset_of(IndexSet::all(members_.size()))) {
    throw InvalidInput(fmt::format("intersect_many: subset {} not contained in [0, {})", subset.to_string(),
                                   members_.size()));
  }
  {
    std::shared_lock lock(cache_->mutex);
    if (auto it = cache_->entries.find(subset.bits()); it != cache_->entries.end()) return *it->second;
  }

  std::unique_ptr<const Subspace> computed;
  if (subset.empty()) {
    computed = std::make_unique<const Subspace>(Subspace::full(ambient_dim_));
  } else if (subset.size() == 1) {
    computed = std::make_unique<const Subspace>(members_[subset.members().front()]);
  } else {
    const std::size_t last = subset.members().back();
    const Subspace& head = intersection(subset.without(last));
    computed = std::make_unique<const Subspace>(intersect(head, members_[last]));
  }

  std::unique_lock lock(cache_->mutex);
  auto [it, inserted] = cache_->entries.try_emplace(subset.bits(), std::move(computed));
  return *it->second;
}

void SubspaceSystem::precompute_intersections() const {
  if (members_.size() > 20) throw CapacityError("precompute_intersections: N > 20 would need over 10^6 subsets");
  const std::uint32_t count = IndexSet::all(members_.size()).bits();
  for (std::uint32_t bits = 0;; ++bits) {
    intersection(IndexSet(bits));
    if (bits == count) break;
  }
}

const Subspace& intersect_many(const SubspaceSystem& system, IndexSet subset) { return system.intersection(subset); }

} // namespace projlab
