/// Localized generalized Wannier frames for magnetically perturbed periodic operators on Z^2.
///
/// Operators commuting with the magnetic translations are handled through their kernels:
/// A(g, g') = e^{i eps phi(g, g')} a(g - g'). Products, adjoints and power series act on the
/// kernel a alone; every kernel is truncated to a box {-R..R}^2 of displacements.
#pragma once

#include "bloch/hofstadter.hpp"
#include "bloch/wannier.hpp"

namespace bloch {

/// Kernel a(d) with rows x cols blocks on displacements |d|_inf <= radius.
class CovariantKernel {
 public:
  CovariantKernel() = default;
  CovariantKernel(double epsilon, int radius, int rows, int cols);
  static CovariantKernel identity(double epsilon, int radius, int n);

  double epsilon() const { return eps_; }
  int radius() const { return radius_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int side() const { return 2 * radius_ + 1; }
  int blocks() const { return side() * side(); }
  bool contains(int d1, int d2) const { return std::abs(d1) <= radius_ && std::abs(d2) <= radius_; }
  int index(int d1, int d2) const { return (d1 + radius_) * side() + (d2 + radius_); }
  Index3 displacement(int index) const { return {index / side() - radius_, index % side() - radius_, 0}; }

  /// Block at displacement d (column-major, rows x cols).
  Eigen::Map<Mat> block(int d1, int d2);
  Eigen::Map<const Mat> block(int d1, int d2) const;
  Mat at(int d1, int d2) const;  // zero outside the stored box

  CovariantKernel adjoint() const;  // a*(d) = a(-d)^*
  CovariantKernel operator+(const CovariantKernel& o) const;
  CovariantKernel operator-(const CovariantKernel& o) const;
  CovariantKernel operator*(cplx s) const;
  /// Rows [first, first + count) of every block.
  CovariantKernel row_block(int first, int count) const;
  /// Columns [first, first + count) of every block.
  CovariantKernel col_block(int first, int count) const;
  /// Blocks of two kernels with equal rows placed side by side.
  static CovariantKernel hstack(const CovariantKernel& a, const CovariantKernel& b);

  /// Sum_d ||a(d)||_F: bounds the operator norm on l^2(Z^2).
  double schur_norm() const;
  /// Same sum restricted to |d|_inf <= within, away from the truncation rim of composed kernels.
  double schur_norm(int within) const;
  double block_norm(int index) const;
  /// Largest ||a(d)||_F over |d|_inf >= r.
  double tail(int r) const;
  /// Zeroes blocks with Frobenius norm below `tol`.
  void trim(double tol);

  /// Column x of the kernel as a lattice function on the box {-R..R}^2 (fiber = rows).
  LatticeFunction column(int x) const;

  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }

 private:
  double eps_ = 0.0;
  int radius_ = 0, rows_ = 0, cols_ = 0;
  std::vector<cplx> data_;
};

/// Twisted convolution (a o b)(d) = sum_{u + v = d} e^{i eps phi(u, v)} a(u) b(v), truncated to
/// `radius` (default: the larger input radius).
CovariantKernel compose(const CovariantKernel& a, const CovariantKernel& b, int radius = -1);

/// (1 + x)^{-1/2} by its binomial series; requires schur_norm(x) < 1. Stops when the Schur norm of
/// the next term is below `tol`.
CovariantKernel inv_sqrt_series(const CovariantKernel& x, double tol = 1e-14, int max_terms = 400);

/// (A f)(g) = sum_{g'} e^{i eps phi(g, g')} a(g - g') f(g') on the box of f.
LatticeFunction apply(const CovariantKernel& a, const LatticeFunction& f);

/// Kernel of a periodic matrix family F(k): (1/|grid|) sum_k e^{i 2 pi k.d} F(k), with phase eps.
CovariantKernel kernel_of_family(const KGrid& grid, const std::vector<Mat>& family, double epsilon, int radius);

/// Kernel realized on a box: the element block for cells g, g'.
Mat kernel_element(const CovariantKernel& a, const Index3& g, const Index3& gp);

/// Decay fit of d -> ||a(d)||_F.
DecayFit kernel_decay(const CovariantKernel& a, const DecayOptions& opts = {});

// ---------------------------------------------------------------------------------------------
// Spectral projections on a box

/// Rectangle {lo <= Re z <= hi, |Im z| <= half_height} traversed counter-clockwise. Gauss-Legendre
/// nodes on the three upper-half segments; the lower half follows from R(conj z) = R(z)^*.
struct ContourOptions {
  double lo = 0.0, hi = 0.0;
  double half_height = 1.0;
  int nodes = 16;      // per segment, doubled until converged
  int max_nodes = 64;
  double tol = 1e-10;  // max entry change between successive doublings
};

struct RieszColumns {
  Mat columns;  // Pi rhs
  int nodes = 0;
  double convergence = 0.0;
};

/// Pi rhs with Pi = -1/(2 pi i) oint (H - z)^{-1} dz, by sparse LU at every node.
RieszColumns riesz_columns(const LatticeMatrix& h, const Mat& rhs, const ContourOptions& opts);

/// Dense spectral projection onto eigenvalues in (lo, hi).
Mat spectral_window_dense(const LatticeMatrix& h, double lo, double hi);

/// Unit vectors on every orbital of a cell, as box.size() x fiber_dim columns.
Mat cell_columns(const LatticeBox& box, const Index3& cell);

/// Kernel read off the columns of the centre cell: a(d) = A(d, 0).
CovariantKernel kernel_from_columns(const LatticeBox& box, const Mat& centre_columns, double epsilon, int radius);

/// max over g in the box with |g - eta|_inf <= radius of |A(g, eta) - e^{i eps phi(g, eta)} a(g - eta)|.
double covariance_residual(const LatticeBox& box, const Mat& columns_at_eta, const Index3& eta,
                           const CovariantKernel& a);

// ---------------------------------------------------------------------------------------------
// Resolvent decay

/// Column (H - z)^{-1} e_{0, orbital} as a lattice function.
LatticeFunction resolvent_column(const LatticeMatrix& h, cplx z, int orbital = 0);

/// Decay fit of the shell maxima of the resolvent columns of every orbital of the centre cell.
DecayFit resolvent_decay(const LatticeMatrix& h, cplx z, const DecayOptions& opts = {});

/// sup_{|g| <= radius / 2} |G_eps(g, 0) - G_0(g, 0)| e^{alpha |g|_2} over all centre orbitals.
double resolvent_difference_bound(const LatticeMatrix& h_eps, const LatticeMatrix& h_0, cplx z, double alpha);

// ---------------------------------------------------------------------------------------------
// Orthonormalization and projections

/// K = (1 - D^2)^{-1/2} (Q P + (1 - Q)(1 - P)) with D = Q - P; K P = Q K. Requires ||P - Q|| < 1.
Mat kato_nagy(const Mat& target, const Mat& source);
/// Lattice version; requires ||D||_Schur <= 1/2.
CovariantKernel kato_nagy(const CovariantKernel& target, const CovariantKernel& source, double tol = 1e-14);

/// Spectral projection of a near-projection t onto (1/2, inf):
/// t + (t - 1/2)((1 + 4 Delta)^{-1/2} - 1), Delta = t^2 - t. Requires ||Delta||_Schur < 1/4.
struct NenciuProjection {
  CovariantKernel projection;
  double delta = 0.0;  // ||Delta||_Schur
};
NenciuProjection nenciu_projection(const CovariantKernel& t, double tol = 1e-14);

/// Orthonormal magnetic translates spanning the range of pi restricted to span{tau w}:
/// w' = pi o w o m^{-1/2} with m = w* o pi o w. Requires ||m - 1||_Schur < 1.
struct OrthonormalTranslates {
  CovariantKernel functions;
  double overlap_defect = 0.0;  // ||m - 1||_Schur
};
OrthonormalTranslates orthonormalize_translates(const CovariantKernel& w, const CovariantKernel& pi,
                                                double tol = 1e-14);

// ---------------------------------------------------------------------------------------------
// Generalized frames for the perturbed operator

struct MagneticOptions {
  double lo = 0.0, hi = 0.0;  // spectral window of the isolated island
  FrameKind mode = FrameKind::parseval;
  int box_radius = 40;
  int kernel_radius = -1;     // default: box radius
  int grid = 96;              // k-grid of the unperturbed seeds, at least twice the kernel radius
  double half_height = 1.0;
  int contour_nodes = 16;
  int test_vectors = 20;
  std::vector<Index3> covariance_shifts{{1, 0, 0}, {0, 1, 0}, {-2, 1, 0}, {0, -3, 0}, {2, 2, 0}};
  double series_tol = 1e-14;
  double trim = 1e-18;
  unsigned seed = 5;
};

struct MagneticCertificate {
  int rank = 0;
  int chern = 0;
  double epsilon = 0.0;
  bool supercell_phase_flag = false;  // q > 1 with the unscaled phase
  int contour_nodes = 0;
  double contour_convergence = 0.0;
  double overlap_defect = 0.0;        // ||M - 1||, 0 without orthonormal seeds
  double nenciu_delta = 0.0;          // ||Delta||
  double kato_nagy_distance = 0.0;    // ||Pi_2 - P_2||
  double intertwining = 0.0;          // ||K P_2 - Pi_2 K||
  double intertwining_interior = 0.0; // the same on |d| <= R / 2
  DecayFit kato_nagy_decay;           // decay of K - 1
  double orthogonality = 0.0;         // ||Pi_1 Pi_2||
  double frame_defect = 0.0;          // ||sum tau w><tau w - Pi|| on kernels
  double frame_defect_interior = 0.0; // the same on |d| <= R / 2
  double reconstruction = 0.0;        // max relative residual on the test vectors
  double covariance = 0.0;
  double periodic_deviation = 0.0;    // max block distance of the seeds from their eps = 0 counterparts
  std::vector<DecayFit> seed_decay;

  bool hypotheses_hold() const {
    return overlap_defect < 1.0 && nenciu_delta < 0.25 && kato_nagy_distance <= 0.5;
  }
};

struct MagneticFrame {
  int orthonormal = 0;     // leading seeds spanning Pi_1 by orthonormal translates
  CovariantKernel seeds;   // Q x M: orthonormal seeds then the two Parseval seeds
  CovariantKernel projection;
  MagneticCertificate certificate;
};

/// Frame for the island of `op` (kernel at eps) inside the window, seeded by the eps = 0 fiber.
MagneticFrame magnetic_frame(const LatticeOperator& op, const TightBinding& fiber0, const MagneticOptions& opts);

/// Supercell reduction at flux 2 pi p / q followed by magnetic_frame at the perturbation eps.
/// With `scaled_phase` the reduced phase is q eps (exact for the model); otherwise eps.
MagneticFrame magnetic_perturb(const HoppingModel& model, int p, int q, double epsilon, const MagneticOptions& opts,
                               bool scaled_phase = false);

}  // namespace bloch
