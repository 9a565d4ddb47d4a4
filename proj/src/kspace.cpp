#include "bloch/kspace.hpp"

#include <algorithm>

namespace bloch {

namespace {

// Direct DFT along one axis: out(.., j, ..) = sum_i e^{sign i 2 pi i j / N} in(.., i, ..)
Mat dft_axis(const KGrid& grid, const Mat& in, int axis, double sign) {
  const int n = grid.size(axis);
  const KGrid tr = grid.drop_axis(axis);
  std::vector<cplx> tw(n);
  for (int j = 0; j < n; ++j) tw[j] = std::exp(I * (sign * two_pi * j / n));
  Mat out = Mat::Zero(in.rows(), in.cols());
  Mat line(n, in.cols());
  for (int t = 0; t < tr.total(); ++t) {
    for (int i = 0; i < n; ++i) line.row(i) = in.row(grid.join(axis, i, t));
    for (int j = 0; j < n; ++j) {
      Eigen::RowVectorXcd acc = Eigen::RowVectorXcd::Zero(in.cols());
      for (int i = 0; i < n; ++i) acc += tw[(static_cast<long>(i) * j) % n] * line.row(i);
      out.row(grid.join(axis, j, t)) = acc;
    }
  }
  return out;
}

// Signed Fourier mode for residue j on an N-point grid, in (-N/2, N/2].
int signed_mode(int j, int n) { return (j > n / 2) ? j - n : j; }

}  // namespace

Mat lattice_coefficients(const KGrid& grid, const Mat& field) {
  if (field.rows() != grid.total()) throw InvalidInput("lattice_coefficients: field size does not match grid");
  Mat c = field;
  for (int a = 0; a < grid.dim(); ++a) c = dft_axis(grid, c, a, +1.0);
  return c / static_cast<double>(grid.total());
}

Mat bloch_sum(const KGrid& grid, const Mat& coefficients) {
  Mat f = coefficients;
  for (int a = 0; a < grid.dim(); ++a) f = dft_axis(grid, f, a, -1.0);
  return f;
}

LatticeFunction inverse_bloch_floquet(const KGrid& grid, const Mat& field, int radius) {
  for (int a = 0; a < grid.dim(); ++a)
    if (2 * radius > grid.size(a))
      throw InvalidInput("inverse_bloch_floquet: box radius exceeds half the grid size");
  const Mat c = lattice_coefficients(grid, field);
  LatticeFunction w{LatticeBox{grid.dim(), radius, static_cast<int>(field.cols())}, Vec()};
  w.values = Vec::Zero(w.box.size());
  for (int s = 0; s < w.box.sites(); ++s) {
    const Index3 g = w.box.cell(s);
    const int row = grid.flat(g);
    for (int x = 0; x < w.box.fiber_dim; ++x) w.values[s * w.box.fiber_dim + x] = c(row, x);
  }
  return w;
}

RVec fejer_kernel(int n, int order) {
  if (order < 1) throw InvalidInput("fejer_kernel: order must be positive");
  RVec k(n);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int m = -(order - 1); m <= order - 1; ++m)
      s += (1.0 - std::abs(m) / static_cast<double>(order)) * std::cos(two_pi * m * j / n);
    k[j] = s / n;
  }
  return k;
}

Mat fejer_smooth(const KGrid& grid, const Mat& field, int order) {
  for (int a = 0; a < grid.dim(); ++a)
    if (2 * order > grid.size(a)) throw InvalidInput("fejer_smooth: order must not exceed N/2");
  Mat c = lattice_coefficients(grid, field);
  for (int r = 0; r < grid.total(); ++r) {
    const Index3 j = grid.coords(r);
    double w = 1.0;
    for (int a = 0; a < grid.dim(); ++a)
      w *= std::max(0.0, 1.0 - std::abs(signed_mode(j[a], grid.size(a))) / static_cast<double>(order));
    c.row(r) *= w;
  }
  return bloch_sum(grid, c);
}

std::vector<Mat> reorthonormalize(const ProjectionFamily& family, const std::vector<Mat>& vectors,
                                  InvSqrtMethod method) {
  if (vectors.size() != family.p.size()) throw InvalidInput("reorthonormalize: size mismatch");
  std::vector<Mat> out(vectors.size());
  for (size_t k = 0; k < vectors.size(); ++k) {
    const Mat phi = family.p[k] * vectors[k];
    const Mat s = phi.adjoint() * phi;
    const double dev = op_norm(s - Mat::Identity(s.rows(), s.cols()));
    if (dev >= 1.0)
      throw NumericalFailure("reorthonormalize: ||S - 1|| = " + std::to_string(dev) + " at k index " +
                             std::to_string(k));
    out[k] = phi * inv_sqrt_psd(s, method);
  }
  return out;
}

Mat frame_column(const std::vector<Mat>& frame, int c) {
  Mat f(frame.size(), frame.front().rows());
  for (size_t k = 0; k < frame.size(); ++k) f.row(k) = frame[k].col(c).transpose();
  return f;
}

}  // namespace bloch
