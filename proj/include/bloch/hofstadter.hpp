/// Hofstadter-like magnetic Hamiltonians on Z^2, the rational-flux supercell reduction,
/// magnetic translations and fiber band structure.
#pragma once

#include "bloch/families.hpp"

#include <Eigen/SparseCore>

#include <optional>

namespace bloch {

using SpMat = Eigen::SparseMatrix<cplx, Eigen::ColMajor, int>;

/// phi(x, x') = (x'_1 x_2 - x'_2 x_1) / 2.
inline double peierls(double x1, double x2, double y1, double y2) { return 0.5 * (y1 * x2 - y2 * x1); }
inline double peierls(const Index3& a, const Index3& b) { return peierls(a[0], a[1], b[0], b[1]); }

/// Periodic hopping model on Z^2: orbitals at positions y in [0,1)^2 and hopping blocks T(g).
struct HoppingModel {
  std::vector<std::array<double, 2>> sites;
  std::map<Index3, Mat> hoppings;

  int orbitals() const { return static_cast<int>(sites.size()); }
  int support_radius() const;
  /// max ||T(-g) - T(g)^*||
  double hermiticity_defect() const;
  /// Zero-field Bloch matrix h(k) = sum_g e^{-i 2 pi k.g} T(g).
  TightBinding bloch() const;
  Mat block(const Index3& g) const;

  /// Square lattice, one orbital, nearest-neighbour hopping t.
  static HoppingModel square(double t = 1.0);
};

/// Sparse operator on a truncated box (open boundary).
struct LatticeMatrix {
  LatticeBox box;
  SpMat m;

  double hermiticity_defect() const;
};

/// Covariant operator with elements e^{i eps phi(g, g')} a(g - g') on Z^2 x C^Q.
struct LatticeOperator {
  double epsilon = 0.0;
  int orbitals = 1;
  std::map<Index3, Mat> kernel;

  int support_radius() const;
  LatticeMatrix realize(const LatticeBox& box) const;
  /// Block of the realized matrix between cells g and g'.
  Mat element(const Index3& g, const Index3& gp) const;
};

/// H_b(g, y; g', y') = e^{i b phi(g + y, g' + y')} T(g - g'; y, y') on the box.
LatticeMatrix build_hofstadter(const HoppingModel& model, double b, const LatticeBox& box);

/// Supercell reduction at flux b = 2 pi p / q + eps. Reduced orbitals are (x, y) with
/// x in {0..q-1} outermost; the reduced cell g maps to the original cell (q g_1 + x, g_2).
struct SupercellReduction {
  HoppingModel source;
  int p = 0, q = 1;
  double epsilon = 0.0;
  /// Fiber h_{k, b0 + eps} of size qN, as hopping blocks over reduced displacements.
  TightBinding fiber;
  /// Realized operator e^{i eps q phi(g, g')} fiber block(g - g').
  LatticeOperator reduced;

  double b0() const { return two_pi * p / q; }
  int orbitals() const { return fiber.orbitals; }
  /// Position of reduced orbital o relative to its supercell origin, x + y.
  std::array<double, 2> offset(int orbital) const;
  /// Original cell of reduced cell g and orbital o.
  Index3 original_cell(const Index3& g, int orbital) const;
  /// Phase of the unitary U_b at reduced cell g and orbital o.
  cplx ub_phase(const Index3& g, int orbital) const;
};

SupercellReduction supercell_reduce(const HoppingModel& model, int p, int q, double epsilon = 0.0);

/// max |(U_b H_b U_b^*)(g, o; g', o') - reduced(g, o; g', o')| over reduced cells with
/// |g|_inf <= radius and every kernel displacement.
double supercell_consistency(const SupercellReduction& red, int radius);

/// max_k ||h_{k, b0 + eps} - h_{k, b0}|| / eps on the grid.
double fiber_epsilon_constant(const HoppingModel& model, int p, int q, double epsilon, const KGrid& grid);

/// (tau f)(g, x) = e^{i eps phi(g, eta)} f(g - eta, x); zero where g - eta leaves the box.
LatticeFunction magnetic_translation(double epsilon, const Index3& eta, const LatticeFunction& f);

/// Band energies with per-band ranges and the gaps of their union.
struct BandScan {
  KGrid grid;
  std::vector<RVec> energies;
  std::vector<std::pair<double, double>> ranges;  // per band
  std::vector<std::pair<double, double>> islands; // connected components of the union
  std::vector<std::pair<double, double>> gaps;    // between consecutive islands
};

BandScan fiber_bands(const TightBinding& fiber, const KGrid& grid);

/// Symmetric Hausdorff distance between a finite set and a union of closed intervals.
double hausdorff_distance(const std::vector<double>& points, const std::vector<std::pair<double, double>>& intervals);

/// Spectrum of a truncated operator with a boundary-weight filter: an eigenvector whose weight on
/// cells with |g|_inf > radius - width exceeds `max_boundary_weight` is flagged as a boundary mode.
struct TruncatedSpectrum {
  std::vector<double> values;
  std::vector<double> boundary_weight;
  std::vector<double> interior;  // values passing the filter
  bool rotation_reduced = false;
  double rotation_residual = 0.0;
};

/// Uses the four C4 rotation sectors when the matrix commutes with the rotation of the box
/// (checked to 1e-10), otherwise a dense eigensolve.
TruncatedSpectrum truncated_spectrum(const LatticeMatrix& h, int width, double max_boundary_weight = 0.5);

/// Periodic realization of a covariant operator at eps = 0 on the torus (Z/M)^2, block-diagonalized
/// by the discrete Bloch-Floquet transform. Reports the largest off-diagonal block and the largest
/// deviation of the diagonal blocks from the fiber.
struct BlockDiagonalization {
  double off_diagonal = 0.0;
  double fiber_mismatch = 0.0;
};

BlockDiagonalization torus_block_diagonalization(const TightBinding& fiber, int cells);

/// Flux-versus-energy point cloud: for every q <= q_max and coprime 0 <= p < q, eigenvalues of the
/// supercell fiber on an n x n grid.
struct ButterflyPoint {
  int p, q;
  double energy;
};
std::vector<ButterflyPoint> butterfly(const HoppingModel& model, int q_max, int n);

}  // namespace bloch
