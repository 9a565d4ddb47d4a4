/// Shared types: complex matrices, k-space grids, lattice boxes and error kinds.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace bloch {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the input was violated.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not reach its target (gap too small, grid too coarse, ...).
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// A topological invariant forbids the requested construction. Carries the computed invariants.
class TopologicalObstruction : public Error {
 public:
  TopologicalObstruction(const std::string& what, std::vector<int> invariants)
      : Error(what), invariants_(std::move(invariants)) {}
  const std::vector<int>& invariants() const { return invariants_; }

 private:
  std::vector<int> invariants_;
};

using Index3 = std::array<int, 3>;

/// Uniform grid on the torus [0,1)^d with k_j = i_j / N_j. Flat index is row-major, axis 0 outermost.
class KGrid {
 public:
  KGrid() = default;
  explicit KGrid(std::vector<int> sizes);
  static KGrid cube(int dim, int n) { return KGrid(std::vector<int>(dim, n)); }

  int dim() const { return dim_; }
  int size(int axis) const { return n_[axis]; }
  int total() const { return total_; }
  std::vector<int> sizes() const { return {n_.begin(), n_.begin() + dim_}; }

  /// Flat index of a multi-index; coordinates are reduced modulo N.
  int flat(const Index3& i) const;
  Index3 coords(int flat) const;
  std::array<double, 3> point(int flat) const;
  /// Neighbour of `flat` displaced by `step` along `axis`, with periodic wrap.
  int shift(int flat, int axis, int step) const;

  /// Grid obtained by removing one axis.
  KGrid drop_axis(int axis) const;
  /// Flat index of the point with coordinate j along `axis` and the given transverse flat index.
  int join(int axis, int j, int transverse) const;
  /// Transverse flat index of `flat` with respect to `axis`.
  int transverse(int flat, int axis) const;

  bool operator==(const KGrid& o) const { return dim_ == o.dim_ && n_ == o.n_; }

 private:
  int dim_ = 0;
  Index3 n_{1, 1, 1};
  int total_ = 1;
};

/// Finite box {-L..L}^dim of lattice cells, each carrying a fiber of `fiber_dim` components.
struct LatticeBox {
  int dim = 2;
  int radius = 0;
  int fiber_dim = 1;

  int side() const { return 2 * radius + 1; }
  int sites() const;
  int size() const { return sites() * fiber_dim; }
  bool contains(const Index3& g) const;
  /// Site index of a cell, row-major with axis 0 outermost.
  int site(const Index3& g) const;
  Index3 cell(int site) const;
};

/// Complex field on a lattice box; values stored site-major then fiber component.
struct LatticeFunction {
  LatticeBox box;
  Vec values;

  cplx& at(const Index3& g, int x) { return values[box.site(g) * box.fiber_dim + x]; }
  cplx at(const Index3& g, int x) const;
};

/// Largest singular value.
double op_norm(const Mat& a);
/// Unitary factor U of the polar decomposition X = U |X|.
Mat polar_unitary(const Mat& x);
/// Defect ||U* U - 1|| in operator norm.
double unitarity_defect(const Mat& u);
/// Principal value of an angle in (-pi, pi].
double wrap_angle(double a);

}  // namespace bloch
