#pragma once

#include <Eigen/Dense>

#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "projlab/rng.hpp"

namespace projlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Fixed numerical tolerances shared by every module.
namespace tol {
inline constexpr double rank = 1e-10;      // relative to the largest singular value
inline constexpr double intersect = 1e-8;  // sigma >= 1 - intersect counts as a common direction
inline constexpr double ortho = 1e-10;     // max-norm deviation of a basis Gram matrix from I
inline constexpr double zero_rel = 1e-14;  // relative norm floor below which a trajectory point is 0
} // namespace tol

/// Subset of [0, N) stored as a bitmask; N is limited to 32.
class IndexSet {
public:
  static constexpr std::size_t max_members = 32;

  constexpr IndexSet() = default;
  constexpr explicit IndexSet(std::uint32_t bits) : bits_(bits) {}
  static IndexSet of(std::initializer_list<std::size_t> members);
  static IndexSet from(std::span<const std::size_t> members);
  static IndexSet all(std::size_t n);

  constexpr bool contains(std::size_t i) const { return i < max_members && ((bits_ >> i) & 1U) != 0; }
  constexpr IndexSet with(std::size_t i) const { return IndexSet(bits_ | (1U << i)); }
  constexpr IndexSet without(std::size_t i) const { return IndexSet(bits_ & ~(1U << i)); }
  constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint32_t bits() const { return bits_; }
  constexpr bool is_subset_of(IndexSet other) const { return (bits_ & ~other.bits_) == 0; }

  std::vector<std::size_t> members() const;
  std::string to_string() const;

  constexpr auto operator<=>(const IndexSet&) const = default;

private:
  std::uint32_t bits_ = 0;
};

/// Linear subspace of R^d held as a d x k matrix with orthonormal columns.
class Subspace {
public:
  static Subspace zero(std::size_t ambient_dim);
  static Subspace full(std::size_t ambient_dim);

  /// Wraps a basis that is already orthonormal; throws if it is not (within tol::ortho).
  static Subspace from_orthonormal(Matrix basis);

  std::size_t ambient_dim() const { return ambient_dim_; }
  std::size_t dim() const { return static_cast<std::size_t>(basis_.cols()); }
  const Matrix& basis() const { return basis_; }
  bool is_zero() const { return dim() == 0; }
  bool is_full() const { return dim() == ambient_dim_; }

  /// Max-norm deviation of the Gram matrix from the identity.
  double orthonormality_defect() const;

private:
  Subspace(std::size_t ambient_dim, Matrix basis);

  std::size_t ambient_dim_ = 0;
  Matrix basis_;
};

/// Orthonormal basis of span(spanning); rank cut at tol::rank times the largest singular value.
Subspace make_subspace(std::span<const Vector> spanning, std::size_t ambient_dim);
Subspace make_subspace(const Matrix& columns);

Vector project(const Subspace& v, const Vector& x);

/// (1 - lambda) x + lambda P_V x for lambda in [0, 2].
Vector relaxed_project(const Subspace& v, double lambda, const Vector& x);

double distance(const Subspace& v, const Vector& x);

/// d(x, V) / |x|, clamped to [0, 1]. Returns 0 when |x| <= zero_floor (and for x = 0).
double relative_distance(const Subspace& v, const Vector& x, double zero_floor = 0.0);

Subspace intersect(const Subspace& v, const Subspace& w);
Subspace complement(const Subspace& v);
Subspace sum(const Subspace& v, const Subspace& w);

/// True when every basis vector of inner lies in outer up to tolerance.
bool contains(const Subspace& outer, const Subspace& inner, double tolerance = 1e-9);
bool span_equal(const Subspace& a, const Subspace& b, double tolerance = 1e-9);

Subspace random_subspace(std::size_t ambient_dim, std::size_t dim, CounterRng& rng);
Vector random_gaussian(std::size_t ambient_dim, CounterRng& rng);
Vector random_unit_vector(std::size_t ambient_dim, CounterRng& rng);

/// Ordered collection (V_0, ..., V_{N-1}) in a common ambient space.
///
/// Intersections V_I are computed lazily by left-folding `intersect` in increasing index
/// order and memoized. The cache is guarded by a shared mutex: concurrent readers are safe,
/// and `precompute_intersections()` fills it completely before sharing when N is small.
class SubspaceSystem {
public:
  explicit SubspaceSystem(std::vector<Subspace> members);

  SubspaceSystem(SubspaceSystem&&) noexcept = default;
  SubspaceSystem& operator=(SubspaceSystem&&) noexcept = default;

  std::size_t size() const { return members_.size(); }
  std::size_t ambient_dim() const { return ambient_dim_; }
  const Subspace& operator[](std::size_t i) const;
  const std::vector<Subspace>& members() const { return members_; }

  /// V_I; V_{} is the full space.
  const Subspace& intersection(IndexSet subset) const;
  void precompute_intersections() const;

private:
  struct Cache {
    std::shared_mutex mutex;
    std::map<std::uint32_t, std::unique_ptr<const Subspace>> entries;
  };

  std::size_t ambient_dim_ = 0;
  std::vector<Subspace> members_;
  std::unique_ptr<Cache> cache_;
};

const Subspace& intersect_many(const SubspaceSystem& system, IndexSet subset);

} // namespace projlab
