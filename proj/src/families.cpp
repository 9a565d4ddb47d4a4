#include "bloch/families.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>

namespace bloch {

namespace {

void fix_phase(Mat& v) {
  for (int c = 0; c < v.cols(); ++c) {
    double best = -1.0;
    int at = 0;
    for (int r = 0; r < v.rows(); ++r) {
      const double m = std::abs(v(r, c));
      if (m > best + 1e-12) {
        best = m;
        at = r;
      }
    }
    if (best > 0.0) v.col(c) *= std::conj(v(at, c)) / best;
  }
}

double hermitian_defect(const Mat& a) { return (a - a.adjoint()).cwiseAbs().maxCoeff(); }

}  // namespace

EigenDecomposition eig_hermitian(const Mat& a, double hermiticity_tol) {
  if (a.rows() != a.cols()) throw InvalidInput("eig_hermitian: matrix is not square");
  if (a.size() == 0) return {};
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (hermitian_defect(a) > hermiticity_tol * scale)
    throw InvalidInput("eig_hermitian: matrix is not Hermitian");
  const Mat h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  if (es.info() != Eigen::Success) throw NumericalFailure("eig_hermitian: solver did not converge");
  EigenDecomposition out{es.eigenvalues(), es.eigenvectors()};
  fix_phase(out.vectors);
  return out;
}

Mat expm_hermitian(const Mat& h, double t) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint()));
  Vec d(h.rows());
  for (int i = 0; i < h.rows(); ++i) d[i] = std::exp(I * (t * es.eigenvalues()[i]));
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

Mat cayley_log(const Mat& u, double min_distance) {
  const int n = static_cast<int>(u.rows());
  if (u.rows() != u.cols()) throw InvalidInput("cayley_log: matrix is not square");
  if (n == 0) return u;
  if (unitarity_defect(u) > 1e-8) throw InvalidInput("cayley_log: matrix is not unitary");
  const Mat one = Mat::Identity(n, n);
  const Mat plus = one + u;
  Eigen::JacobiSVD<Mat> svd(plus);
  if (svd.singularValues()(n - 1) <= min_distance)
    throw InvalidInput("cayley_log: -1 is within " + std::to_string(min_distance) + " of the spectrum");
  Mat s = I * (one - u) * plus.inverse();
  s = 0.5 * (s + s.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  RVec ang(n);
  for (int i = 0; i < n; ++i) ang[i] = 2.0 * std::atan(es.eigenvalues()[i]);
  return es.eigenvectors() * ang.asDiagonal() * es.eigenvectors().adjoint();
}

Mat inv_sqrt_psd(const Mat& s, InvSqrtMethod method) {
  const int n = static_cast<int>(s.rows());
  const Mat one = Mat::Identity(n, n);
  if (method == InvSqrtMethod::eigen) {
    const EigenDecomposition ed = eig_hermitian(s, 1e-9);
    const double top = std::max(1.0, ed.values.cwiseAbs().maxCoeff());
    if (ed.values.minCoeff() <= 1e-14 * top) throw InvalidInput("inv_sqrt_psd: matrix is not positive definite");
    RVec d = ed.values.cwiseSqrt().cwiseInverse();
    return ed.vectors * d.asDiagonal() * ed.vectors.adjoint();
  }
  const Mat dev = s - one;
  const double r = op_norm(dev);
  if (r >= 1.0) throw InvalidInput("inv_sqrt_psd: series needs ||S - 1|| < 1, got " + std::to_string(r));
  Mat sum = one;
  Mat power = one;
  double coef = 1.0;
  for (int k = 1; k < 100000; ++k) {
    coef *= -(2.0 * k - 1.0) / (2.0 * k);
    power = power * dev;
    const Mat term = coef * power;
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-17) break;
  }
  return sum;
}

UnitarySpectrum unitary_eigen(const Mat& u) {
  const int n = static_cast<int>(u.rows());
  Eigen::ComplexEigenSolver<Mat> es(u);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  RVec ph(n);
  for (int i = 0; i < n; ++i) ph[i] = std::arg(es.eigenvalues()[i]);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return ph[a] < ph[b]; });
  UnitarySpectrum out{RVec(n), Mat(n, n)};
  for (int i = 0; i < n; ++i) {
    out.phases[i] = ph[order[i]];
    out.vectors.col(i) = es.eigenvectors().col(order[i]).normalized();
  }
  return out;
}

double min_eigen_gap(const Mat& u) {
  const int n = static_cast<int>(u.rows());
  if (n < 2) return 2.0;
  const RVec ph = unitary_eigen(u).phases;
  double g = 2.0;
  for (int i = 0; i < n; ++i) {
    const double next = (i + 1 < n) ? ph[i + 1] : ph[0] + two_pi;
    g = std::min(g, 2.0 * std::sin(0.5 * std::abs(next - ph[i])));
  }
  return g;
}

ProjectionFamily ProjectionFamily::face(int axis) const {
  ProjectionFamily f;
  f.grid = grid.drop_axis(axis);
  f.ambient = ambient;
  f.rank = rank;
  f.p.resize(f.grid.total());
  for (int t = 0; t < f.grid.total(); ++t) f.p[t] = p[grid.join(axis, 0, t)];
  return f;
}

Mat ProjectionFamily::range_basis(int flat) const {
  const EigenDecomposition ed = eig_hermitian(p[flat], 1e-8);
  return ed.vectors.rightCols(rank);
}

Mat UnitaryFamily::at(const Index3& i) const {
  const int n0 = grid.size(0);
  int wraps = (i[0] >= 0) ? i[0] / n0 : -((-i[0] + n0 - 1) / n0);
  const Mat& base = u[grid.flat(i)];
  if (!twisted() || wraps == 0) return base;
  const Mat& t = twist[grid.transverse(grid.flat(i), 0)];
  Mat left = Mat::Identity(t.rows(), t.cols());
  const Mat step = wraps > 0 ? t : Mat(t.adjoint());
  for (int w = 0; w < std::abs(wraps); ++w) left = step * left;
  return left * base * left.adjoint();
}

ProjectionDefects validate_projection_family(const ProjectionFamily& family) {
  ProjectionDefects d;
  const KGrid& g = family.grid;
  if (family.p.size() != static_cast<size_t>(g.total())) throw InvalidInput("projection family size mismatch");
  d.rank = static_cast<int>(std::lround(family.p.front().trace().real()));
  for (int f = 0; f < g.total(); ++f) {
    const Mat& p = family.p[f];
    d.idempotency = std::max(d.idempotency, op_norm(p * p - p));
    d.hermiticity = std::max(d.hermiticity, op_norm(p - p.adjoint()));
    d.rank_drift = std::max(d.rank_drift, std::abs(p.trace().real() - d.rank));
    for (int a = 0; a < g.dim(); ++a)
      d.derivative_bound = std::max(d.derivative_bound, g.size(a) * op_norm(family.p[g.shift(f, a, 1)] - p));
  }
  return d;
}

Mat TightBinding::fiber(const std::array<double, 3>& k) const {
  Mat h = Mat::Zero(orbitals, orbitals);
  for (const auto& [g, t] : hoppings) {
    double dot = 0.0;
    for (int a = 0; a < dim; ++a) dot += k[a] * g[a];
    h += std::exp(-I * (two_pi * dot)) * t;
  }
  return h;
}

void TightBinding::add(const Index3& g, const Mat& block) {
  auto it = hoppings.find(g);
  if (it == hoppings.end())
    hoppings.emplace(g, block);
  else
    it->second += block;
}

void TightBinding::add_hermitian_pair(const Index3& g, const Mat& block) {
  add(g, block);
  add({-g[0], -g[1], -g[2]}, block.adjoint());
}

double TightBinding::hermiticity_defect() const {
  double d = 0.0;
  for (const auto& [g, t] : hoppings) {
    auto it = hoppings.find({-g[0], -g[1], -g[2]});
    const Mat other = it == hoppings.end() ? Mat::Zero(orbitals, orbitals) : it->second;
    d = std::max(d, (other - t.adjoint()).cwiseAbs().maxCoeff());
  }
  return d;
}

int TightBinding::support_radius() const {
  int r = 0;
  for (const auto& [g, t] : hoppings)
    for (int a = 0; a < dim; ++a) r = std::max(r, std::abs(g[a]));
  return r;
}

ProjectionFamily band_projection(const TightBinding& model, const KGrid& grid, int first, int count) {
  if (grid.dim() != model.dim) throw InvalidInput("band_projection: grid and model dimensions differ");
  if (first < 0 || count < 1 || first + count > model.orbitals) throw InvalidInput("band_projection: bad band range");
  ProjectionFamily f{grid, model.orbitals, count, std::vector<Mat>(grid.total())};
  for (int i = 0; i < grid.total(); ++i) {
    const EigenDecomposition ed = eig_hermitian(model.fiber(grid.point(i)), 1e-9);
    if (first > 0 && ed.values[first] - ed.values[first - 1] < 1e-9)
      throw NumericalFailure("band_projection: lower band edge is degenerate");
    if (first + count < model.orbitals && ed.values[first + count] - ed.values[first + count - 1] < 1e-9)
      throw NumericalFailure("band_projection: upper band edge is degenerate");
    const Mat v = ed.vectors.middleCols(first, count);
    f.p[i] = v * v.adjoint();
  }
  return f;
}

ProjectionFamily window_projection(const TightBinding& model, const KGrid& grid, double lo, double hi,
                                   double margin) {
  ProjectionFamily f{grid, model.orbitals, -1, std::vector<Mat>(grid.total())};
  for (int i = 0; i < grid.total(); ++i) {
    const EigenDecomposition ed = eig_hermitian(model.fiber(grid.point(i)), 1e-9);
    std::vector<int> inside;
    for (int b = 0; b < ed.values.size(); ++b) {
      const double e = ed.values[b];
      if (std::abs(e - lo) < margin || std::abs(e - hi) < margin)
        throw NumericalFailure("window_projection: window edge touches the spectrum");
      if (e > lo && e < hi) inside.push_back(b);
    }
    if (f.rank < 0) f.rank = static_cast<int>(inside.size());
    if (static_cast<int>(inside.size()) != f.rank) throw NumericalFailure("window_projection: rank is not constant");
    Mat p = Mat::Zero(model.orbitals, model.orbitals);
    for (int b : inside) p += ed.vectors.col(b) * ed.vectors.col(b).adjoint();
    f.p[i] = p;
  }
  if (f.rank == 0) throw InvalidInput("window_projection: empty window");
  return f;
}

std::vector<RVec> band_energies(const TightBinding& model, const KGrid& grid) {
  std::vector<RVec> e(grid.total());
  for (int i = 0; i < grid.total(); ++i) {
    const Mat h = model.fiber(grid.point(i));
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
    e[i] = es.eigenvalues();
  }
  return e;
}

namespace models {

namespace {
Mat pauli(int which) {
  Mat s = Mat::Zero(2, 2);
  if (which == 0) s << 1, 0, 0, 1;
  if (which == 1) s << 0, 1, 1, 0;
  if (which == 2) s << 0, -I, I, 0;
  if (which == 3) s << 1, 0, 0, -1;
  return s;
}
}  // namespace

// sin(2pi k) = sum over g=+-1 of e^{-i2pi k g} (i g / 2); cos(2pi k) = sum of e^{-i2pi k g} / 2.
TightBinding two_band(double mu) {
  TightBinding m;
  m.dim = 2;
  m.orbitals = 2;
  m.add({0, 0, 0}, mu * pauli(3));
  m.add_hermitian_pair({1, 0, 0}, 0.5 * I * pauli(1) - 0.5 * pauli(3));
  m.add_hermitian_pair({0, 1, 0}, 0.5 * I * pauli(2) - 0.5 * pauli(3));
  return m;
}

TightBinding coupled_pair(double mu_a, double mu_b, double coupling) {
  const TightBinding a = two_band(mu_a);
  const TightBinding b = two_band(mu_b);
  TightBinding m;
  m.dim = 2;
  m.orbitals = 4;
  for (const auto& [g, t] : a.hoppings) {
    Mat blk = Mat::Zero(4, 4);
    blk.topLeftCorner(2, 2) = t;
    m.add(g, blk);
  }
  for (const auto& [g, t] : b.hoppings) {
    Mat blk = Mat::Zero(4, 4);
    blk.bottomRightCorner(2, 2) = t;
    m.add(g, blk);
  }
  Mat c = Mat::Zero(4, 4);
  c(0, 2) = coupling;
  c(1, 3) = coupling * cplx(0.6, 0.8);
  c(0, 3) = 0.5 * coupling;
  m.add({0, 0, 0}, c + Mat(c.adjoint()));
  return m;
}

TightBinding layered(double mu, double interlayer) {
  TightBinding m = two_band(mu);
  m.dim = 3;
  m.add_hermitian_pair({0, 0, 1}, 0.5 * interlayer * pauli(3) + 0.25 * interlayer * pauli(1));
  return m;
}

TightBinding layered_pair(double mu_a, double mu_b, double interlayer, double coupling) {
  TightBinding m = coupled_pair(mu_a, mu_b, coupling);
  m.dim = 3;
  Mat blk = Mat::Zero(4, 4);
  blk.topLeftCorner(2, 2) = 0.5 * interlayer * pauli(3);
  blk.bottomRightCorner(2, 2) = -0.5 * interlayer * pauli(3) + 0.2 * interlayer * pauli(2);
  blk(0, 3) = 0.3 * interlayer;
  m.add_hermitian_pair({0, 0, 1}, blk);
  return m;
}

TightBinding chain(double t_intra, double t_inter) {
  TightBinding m;
  m.dim = 1;
  m.orbitals = 2;
  Mat on = Mat::Zero(2, 2);
  on(0, 1) = t_intra;
  on(1, 0) = t_intra;
  m.add({0, 0, 0}, on);
  Mat hop = Mat::Zero(2, 2);
  hop(1, 0) = t_inter;  // orbital 1 of cell g couples to orbital 0 of cell g + 1
  m.add_hermitian_pair({-1, 0, 0}, hop);
  return m;
}

TightBinding chain3(double a, double b) {
  TightBinding m;
  m.dim = 1;
  m.orbitals = 3;
  Mat on = Mat::Zero(3, 3);
  on << -1.0, a, 0.2 * I, a, -0.7, 0.3, -0.2 * I, 0.3, 2.0;
  m.add({0, 0, 0}, on);
  Mat hop = Mat::Zero(3, 3);
  hop << b, 0.2, 0.0, 0.1 * I, 0.5 * b, 0.1, 0.0, 0.2, -b;
  m.add_hermitian_pair({1, 0, 0}, hop);
  return m;
}

}  // namespace models

}  // namespace bloch
