/// Synthesis of smooth periodic Bloch bases, reduced subframes and Parseval frames.
#pragma once

#include "bloch/transport.hpp"

#include <map>
#include <string>

namespace bloch {

struct NondegenerateApproximation {
  UnitaryFamily family;
  double epsilon = 0.0;   // size of the constant perturbation e^{i eps K}; 0 if none was needed
  double min_gap = 0.0;   // smallest chordal eigenvalue gap over the grid
  double distance = 0.0;  // max_k ||alpha'(k) - alpha(k)||
};

/// alpha' = alpha e^{i eps K} with a fixed seeded Hermitian K (restricted to the common commutant
/// of the twist) and eps doubled from 1e-3 until every eigenvalue gap is at least `gap_tol`.
NondegenerateApproximation nondegenerate_approximation(const UnitaryFamily& alpha, double gap_tol = 1e-3,
                                                       unsigned seed = 7);

/// Continuous real eigenphase branches of a non-degenerate family. Branch b at grid point k is
/// phases[k][b]; branches keep their cyclic order and each has zero winding.
struct EigenphaseBranches {
  KGrid grid;
  std::vector<RVec> phases;
  double min_gap = 2.0;          // chordal
  std::vector<double> ccw_gap;   // per branch: min over k of the angle to the next branch
};

EigenphaseBranches track_eigenphases(const UnitaryFamily& alpha);

enum class LogRoute { trivial, fixed_line, moving_line };

struct TwoStepOptions {
  double gap_tol = 1e-3;
  /// Skip the single-log shortcut when a fixed gap line exists.
  bool force_moving_line = false;
  /// Minimal angular clearance for the single-log shortcut.
  double fixed_line_clearance = 0.1;
  /// Moving line: seeded generators K and eps on a quarter-octave ladder from 1e-3 with
  /// ||e^{i eps K} - 1|| < max_distance; the widest gap whose branches can be followed wins.
  int generator_seeds = 16;
  unsigned seed = 7;
  double max_distance = 1.9;
};

/// alpha = e^{i h1} e^{i h2} with h1, h2 continuous (twisted-)periodic Hermitian families.
struct TwoStepLog {
  KGrid grid;
  std::vector<Mat> h1, h2;
  std::vector<Mat> twist;
  LogRoute route = LogRoute::trivial;
  double perturbation = 0.0;  // eps used for the non-degenerate approximation
  double min_gap = 2.0;
  double residual = 0.0;      // max_k ||e^{ih1} e^{ih2} - alpha||
  bool continuous = true;     // false: a fixed-line branch jumps between samples and no moving line was found
  std::vector<int> degrees;
};

/// Throws TopologicalObstruction carrying the degrees of det alpha when one is non-zero.
TwoStepLog two_step_log(const UnitaryFamily& alpha, const TwoStepOptions& opts = {});

/// beta(t, k) on t in [0, 1) with beta(0) = 1 and alpha1 = beta(t) alpha0 beta(t + 1)^{-1};
/// built from the two-step log of alpha1^{-1} alpha0 as beta(t) = e^{i s(t) h1} e^{i s(t) h2}, where
/// s is a smooth step from 0 to 1 that is flat at both ends.
class BetaInterpolant {
 public:
  BetaInterpolant() = default;
  BetaInterpolant(const UnitaryFamily& alpha0, const UnitaryFamily& alpha1, const TwoStepOptions& opts = {});

  /// beta(t) for any real t, using beta(t + 1) = alpha1^{-1} beta(t) alpha0 outside [0, 1).
  Mat at(double t, int transverse) const;
  const TwoStepLog& log() const { return log_; }
  /// max_k ||alpha1 - beta(t) alpha0 beta(t+1)^{-1}|| over t on the given samples, with
  /// beta(t + 1) evaluated from the closed formula at t + 1 = 1.
  double matching_residual() const;

 private:
  Mat closed(double t, int transverse) const;
  UnitaryFamily alpha0_, alpha1_;
  TwoStepLog log_;
  std::vector<EigenDecomposition> e1_, e2_;
};

enum class FrameKind { basis, subframe, parseval };
std::string to_string(FrameKind k);

/// Placement of the conjugate copy in the doubled family used for Parseval frames.
enum class Doubling { conjugate_second, conjugate_first };

struct FrameCertificate {
  std::map<std::string, int> chern;     // "12", "13", "23"
  std::vector<int> degrees;
  std::vector<int> discarded_degrees;   // winding of det alpha carried by the column a subframe drops
  double orthonormality = 0.0;          // max_k ||X* X - 1|| (bases and subframes)
  double parseval = 0.0;                // max_k ||X X* - P|| (bases and Parseval frames)
  double range = 0.0;                   // max_k ||(1 - P) X||
  double matching = 0.0;                // continuity defect across k_1 = 1
  double smoothness = 0.0;              // max_{k, axis} N ||X(k + e) - X(k)||
  double min_gap = 2.0;
  double perturbation = 0.0;
  std::vector<std::string> routes;
};

/// Frame vectors X(k) (n x M per grid point) for a projection family.
struct BlochFrame {
  KGrid grid;
  FrameKind kind = FrameKind::basis;
  int ambient = 0;
  int rank = 0;
  std::vector<Mat> vectors;
  FrameCertificate certificate;

  int count() const { return vectors.empty() ? 0 : static_cast<int>(vectors.front().cols()); }
};

struct FrameOptions {
  TwoStepOptions log;
  Doubling doubling = Doubling::conjugate_second;
};

/// Chern numbers c_ij for all axis pairs, keyed "ij" with 1-based axes.
std::map<std::string, int> chern_numbers(const ProjectionFamily& family);

/// Smooth periodic orthonormal basis of Ran P(k); d = 1..3; all Chern numbers must vanish.
BlochFrame construct_bloch_basis(const ProjectionFamily& family, const FrameOptions& opts = {});
/// m - 1 smooth periodic orthonormal vectors in Ran P(k); d = 2 or 3.
BlochFrame construct_subframe(const ProjectionFamily& family, const FrameOptions& opts = {});
/// m + 1 smooth periodic vectors forming a Parseval frame of Ran P(k); d <= 3.
BlochFrame construct_parseval_frame(const ProjectionFamily& family, const FrameOptions& opts = {});

/// Rank-one projection family Q(k) = conj(P(-k)) (entrywise complex conjugation).
ProjectionFamily conjugate_reflection(const ProjectionFamily& family);
/// P (+) Q on C^{2n}, with Q = conjugate_reflection(P) placed according to `doubling`.
ProjectionFamily doubled_family(const ProjectionFamily& family, Doubling doubling);

/// Residual checks for a frame against its projection family.
void certify_frame(BlochFrame& frame, const ProjectionFamily& family);

}  // namespace bloch
