/// Wannier functions from Bloch frames, decay certification, effective Hamiltonians and
/// Fourier interpolation of bands.
#pragma once

#include "bloch/framesyn.hpp"
#include "bloch/kspace.hpp"

#include <limits>

namespace bloch {

/// Exponential fit log max_{shell r} |w| ~ log C - rate * r over Euclidean shells.
struct DecayFit {
  double rate = 0.0;
  double prefactor = 0.0;
  double r2 = 0.0;
  int shells = 0;
  bool trivially_localized = false;  // fewer than two shells above the noise floor
  bool boundary_polluted = false;    // non-negligible weight on the outermost layer of the box

  bool localized() const { return trivially_localized || rate > 0.0; }
};

struct DecayOptions {
  /// Largest shell radius used; negative means half the box radius.
  double max_radius = -1.0;
  /// Smallest shell radius used; the core shell r = 0 does not follow the tail.
  double min_radius = 1.0;
  /// Values below floor * max |w| are excluded from the regression.
  double floor = 1e-13;
  /// Pollution: the outermost layer exceeds boundary_tol * max |w| and does not decrease from the
  /// layer just inside it.
  double boundary_tol = 1e-8;
};

/// Largest |w(g, x)| over x and cells with round(|g|_2) = r, with the distance |g|_2 where it occurs.
struct ShellMax {
  double radius = 0.0;
  double value = 0.0;
};

/// One entry per shell r = 0..ceil(L sqrt d); empty shells have value 0.
std::vector<ShellMax> shell_maxima(const LatticeFunction& w);
DecayFit decay_fit(const LatticeFunction& w, const DecayOptions& opts = {});
/// Fit on shell maxima of a function living in a box of the given radius.
DecayFit decay_fit_shells(const std::vector<ShellMax>& shells, int box_radius, const DecayOptions& opts = {});

struct WannierSet {
  LatticeBox box;
  FrameKind kind = FrameKind::basis;
  KGrid grid;
  std::vector<LatticeFunction> functions;
  std::vector<DecayFit> fits;
  DecayFit combined;  // fit of the pointwise maximum over all functions
};

WannierSet frame_to_wannier(const BlochFrame& frame, int radius, const DecayOptions& opts = {});

/// Sum_g |c(g)|^2 over the full periodic index set against (1/|grid|) sum_k |xi(k)|^2, max over columns.
double plancherel_defect(const BlochFrame& frame);

/// Reconstruction psi = sum_g sum_a <T_g w_a, psi> T_g w_a on the periodic lattice (Z/N)^d for
/// random psi in Ran P; returns the largest relative residual over `samples` vectors.
double wannier_reconstruction_residual(const BlochFrame& frame, const ProjectionFamily& family, int samples = 20,
                                       unsigned seed = 11);

/// Max |<T_g w_a, w_b> - delta| over all lattice translates on the periodic lattice.
double translate_gram_defect(const BlochFrame& frame);

/// h_eff(k) = X(k)^* (h(k) + shift) X(k) for a Parseval frame X of a band projection of h.
struct EffectiveHamiltonian {
  KGrid grid;
  std::vector<Mat> h;
  double shift = 0.0;
  /// Largest deviation of the non-zero spectrum from the occupied bands (after removing the shift).
  double spectral_error = 0.0;
  /// Number of eigenvalues below the zero threshold per k (constant M - m when the identity holds).
  int zero_modes = 0;
};

/// `first` and the frame's rank select the occupied bands. Rejects frames whose Parseval residual
/// exceeds `parseval_tol`.
EffectiveHamiltonian effective_hamiltonian(const BlochFrame& frame, const TightBinding& model, int first,
                                           double parseval_tol = 1e-8);

/// Non-zero eigenvalues of a Hermitian matrix (threshold relative to its spectral radius), ascending.
RVec nonzero_eigenvalues(const Mat& h, double rel_threshold = 1e-6);

/// Trigonometric interpolation of a periodic matrix family from its grid to `fine` (same dimension,
/// each fine size a multiple of the coarse one). The Nyquist mode of even grids is split evenly.
std::vector<Mat> interpolate_family(const KGrid& coarse, const std::vector<Mat>& samples, const KGrid& fine);

/// Interpolated bands: eigenvalues of the interpolated h_eff minus the shift, zero modes removed.
struct InterpolatedBands {
  KGrid fine;
  std::vector<RVec> bands;
  double max_error = 0.0;  // against direct diagonalisation of the model on the fine grid
};

InterpolatedBands interpolate_bands(const EffectiveHamiltonian& coarse, const TightBinding& model, int first,
                                    int rank, const KGrid& fine);

}  // namespace bloch
