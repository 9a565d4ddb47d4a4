/// Discrete Bloch-Floquet transform, Fejer smoothing and Gram-matrix reorthonormalisation.
///
/// A k-field is stored as a matrix with one row per grid point (flat index) and one
/// column per component.
#pragma once

#include "bloch/core.hpp"
#include "bloch/families.hpp"

namespace bloch {

/// c(g) = (1/|grid|) sum_k e^{+i 2 pi k.g} f(k) for g on the periodic index set (row order of the grid).
Mat lattice_coefficients(const KGrid& grid, const Mat& field);
/// Inverse of lattice_coefficients: f(k) = sum_g e^{-i 2 pi k.g} c(g).
Mat bloch_sum(const KGrid& grid, const Mat& coefficients);

/// Lattice function w(g, x) on {-L..L}^d from samples of a vector field. Requires L <= N_j / 2.
LatticeFunction inverse_bloch_floquet(const KGrid& grid, const Mat& field, int radius);

/// Fejer kernel of the given order on an N-point periodic grid, K(j/N) / N; non-negative, sums to 1.
RVec fejer_kernel(int n, int order);
/// Periodic convolution with the Fejer kernel along every axis (Fourier mode n scaled by 1 - |n|/order).
Mat fejer_smooth(const KGrid& grid, const Mat& field, int order);

/// Projects each column set into Ran P(k) and applies the inverse square root of its Gram matrix.
/// `vectors[k]` is n x m. Throws if ||S(k) - 1|| >= 1 at some k.
std::vector<Mat> reorthonormalize(const ProjectionFamily& family, const std::vector<Mat>& vectors,
                                  InvSqrtMethod method = InvSqrtMethod::eigen);

/// Column `c` of a per-k frame as a k-field (rows = grid points).
Mat frame_column(const std::vector<Mat>& frame, int c);

}  // namespace bloch
