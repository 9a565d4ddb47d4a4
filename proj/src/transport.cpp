#include "bloch/transport.hpp"

#include <algorithm>

namespace bloch {

TransportLines parallel_transport(const ProjectionFamily& family, int axis) {
  const KGrid& g = family.grid;
  if (axis < 0 || axis >= g.dim()) throw InvalidInput("parallel_transport: bad axis");
  const int n = g.size(axis);
  const int dim = family.ambient;
  const Mat one = Mat::Identity(dim, dim);
  TransportLines out{g, axis, {}};
  const int lines = g.total() / n;
  out.t.resize(static_cast<size_t>(lines) * (n + 1));
  for (int tr = 0; tr < lines; ++tr) {
    Mat cur = one;
    out.t[static_cast<size_t>(tr) * (n + 1)] = cur;
    for (int j = 0; j < n; ++j) {
      const Mat& p0 = family.p[g.join(axis, j, tr)];
      const Mat& p1 = family.p[g.join(axis, j + 1, tr)];
      const Mat step = polar_unitary(p1 * p0 + (one - p1) * (one - p0));
      cur = step * cur;
      out.t[static_cast<size_t>(tr) * (n + 1) + j + 1] = cur;
    }
  }
  return out;
}

UnitaryFamily obstruction_matrix(const TransportLines& lines, const std::vector<Mat>& face_basis,
                                 const std::vector<Mat>& twist) {
  const int count = lines.lines();
  if (static_cast<int>(face_basis.size()) != count) throw InvalidInput("obstruction_matrix: face basis size mismatch");
  UnitaryFamily a;
  a.grid = lines.grid.dim() > 1 ? lines.grid.drop_axis(lines.axis) : KGrid({1});
  a.u.resize(count);
  for (int t = 0; t < count; ++t) a.u[t] = face_basis[t].adjoint() * lines.holonomy(t) * face_basis[t];
  a.twist = twist;
  return a;
}

namespace {

// Orthonormal bases of Ran P(k) on the (i, j) slice, indexed [a * nj + b].
std::vector<Mat> slice_bases(const ProjectionFamily& f, int i, int j) {
  const KGrid& g = f.grid;
  std::vector<Mat> out(static_cast<size_t>(g.size(i)) * g.size(j));
  for (int a = 0; a < g.size(i); ++a)
    for (int b = 0; b < g.size(j); ++b) {
      Index3 c{0, 0, 0};
      c[i] = a;
      c[j] = b;
      out[static_cast<size_t>(a) * g.size(j) + b] = f.range_basis(g.flat(c));
    }
  return out;
}

cplx link(const Mat& u, const Mat& v) {
  const cplx d = (u.adjoint() * v).determinant();
  const double m = std::abs(d);
  if (m < 1e-10) throw NumericalFailure("chern_number: vanishing link variable, refine the grid");
  return d / m;
}

}  // namespace

int chern_number(const ProjectionFamily& family, int i, int j, double* raw) {
  const KGrid& g = family.grid;
  if (g.dim() < 2 || i == j || i < 0 || j < 0 || i >= g.dim() || j >= g.dim())
    throw InvalidInput("chern_number: needs two distinct axes");
  const int ni = g.size(i), nj = g.size(j);
  const std::vector<Mat> b = slice_bases(family, i, j);
  auto at = [&](int a, int c) -> const Mat& { return b[static_cast<size_t>((a + ni) % ni) * nj + (c + nj) % nj]; };
  double sum = 0.0;
  for (int a = 0; a < ni; ++a)
    for (int c = 0; c < nj; ++c) {
      const cplx u1 = link(at(a, c), at(a + 1, c));
      const cplx u2 = link(at(a + 1, c), at(a + 1, c + 1));
      const cplx u3 = link(at(a, c + 1), at(a + 1, c + 1));
      const cplx u4 = link(at(a, c), at(a, c + 1));
      sum += std::arg(u1 * u2 * std::conj(u3) * std::conj(u4));
    }
  const double c = sum / two_pi;
  if (raw) *raw = c;
  const long r = std::lround(c);
  if (std::abs(c - r) > 1e-6) throw NumericalFailure("chern_number: plaquette sum is not an integer");
  return static_cast<int>(r);
}

double chern_riemann_sum(const ProjectionFamily& family, int i, int j) {
  const KGrid& g = family.grid;
  const int ni = g.size(i), nj = g.size(j);
  auto p = [&](int a, int c) -> const Mat& {
    Index3 x{0, 0, 0};
    x[i] = a;
    x[j] = c;
    return family.p[g.flat(x)];
  };
  cplx sum = 0.0;
  for (int a = 0; a < ni; ++a)
    for (int c = 0; c < nj; ++c) {
      const Mat di = (p(a + 1, c) - p(a - 1, c)) * (0.5 * ni);
      const Mat dj = (p(a, c + 1) - p(a, c - 1)) * (0.5 * nj);
      sum += (p(a, c) * (di * dj - dj * di)).trace();
    }
  return (sum / (two_pi * I * (static_cast<double>(ni) * nj))).real();
}

int winding_degree(const UnitaryFamily& family, int axis, double max_phase_step) {
  const KGrid& g = family.grid;
  if (axis < 0 || axis >= g.dim()) throw InvalidInput("winding_degree: bad axis");
  const int n = g.size(axis);
  const KGrid tr = g.drop_axis(axis);
  int degree = 0;
  for (int t = 0; t < tr.total(); ++t) {
    double total = 0.0;
    cplx prev = family.u[g.join(axis, 0, t)].determinant();
    for (int j = 1; j <= n; ++j) {
      // det is invariant under the twist, so periodic wrap is exact
      const cplx cur = family.u[g.join(axis, j, t)].determinant();
      const double step = std::arg(cur / prev);
      if (std::abs(step) >= max_phase_step - 1e-12)
        throw NumericalFailure("winding_degree: phase jump too large, refine the grid");
      total += step;
      prev = cur;
    }
    const int w = static_cast<int>(std::lround(total / two_pi));
    if (t == 0)
      degree = w;
    else if (w != degree)
      throw NumericalFailure("winding_degree: degree depends on the transverse coordinate");
  }
  return degree;
}

}  // namespace bloch
