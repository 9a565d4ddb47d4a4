/// Discrete parallel transport, obstruction matrices, Chern numbers and winding degrees.
#pragma once

#include "bloch/families.hpp"

namespace bloch {

/// Transport unitaries T(k_a = j/N, 0) along every line parallel to `axis`, j = 0..N.
/// T(0) = 1; each step is the unitary part of P(k+)P(k) + (1-P(k+))(1-P(k)).
struct TransportLines {
  KGrid grid;
  int axis = 0;
  std::vector<Mat> t;  // index transverse * (N + 1) + j

  int steps() const { return grid.size(axis); }
  int lines() const { return grid.total() / grid.size(axis); }
  const Mat& at(int transverse, int j) const { return t[static_cast<size_t>(transverse) * (steps() + 1) + j]; }
  /// T(1, 0) on the given line.
  const Mat& holonomy(int transverse) const { return at(transverse, steps()); }
};

TransportLines parallel_transport(const ProjectionFamily& family, int axis = 0);

/// alpha_ab(k) = <xi_a(0,k), T(1,0) xi_b(0,k)> on the transverse grid, for a face basis
/// given as n x m matrices per transverse point.
UnitaryFamily obstruction_matrix(const TransportLines& lines, const std::vector<Mat>& face_basis,
                                 const std::vector<Mat>& twist = {});

/// Chern number on the 2-torus of axes (i, j) (other coordinates at index 0), from plaquette
/// products of link determinants. `raw` receives the unrounded value.
int chern_number(const ProjectionFamily& family, int i = 0, int j = 1, double* raw = nullptr);
/// Riemann sum of (1/2 pi i) Tr(P [d_i P, d_j P]) with central differences.
double chern_riemann_sum(const ProjectionFamily& family, int i = 0, int j = 1);

/// Winding number of det u along `axis`, checked to be the same on every transverse line.
int winding_degree(const UnitaryFamily& family, int axis = 0, double max_phase_step = pi);

}  // namespace bloch
