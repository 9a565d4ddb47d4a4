#include "bloch/magframes.hpp"

#include "bloch/transport.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <random>

namespace bloch {

namespace {

void require_same_phase(const CovariantKernel& a, const CovariantKernel& b, const char* where) {
  if (std::abs(a.epsilon() - b.epsilon()) > 1e-15) throw InvalidInput(std::string(where) + ": kernels differ in eps");
}

double euclid(const Index3& g) { return std::hypot(static_cast<double>(g[0]), static_cast<double>(g[1])); }

// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
void gauss_legendre(int n, RVec& x, RVec& w) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  x = es.eigenvalues();
  w = 2.0 * es.eigenvectors().row(0).array().square().transpose();
}

double block_distance(const CovariantKernel& a, const CovariantKernel& b) {
  const int r = std::max(a.radius(), b.radius());
  double d = 0.0;
  for (int d1 = -r; d1 <= r; ++d1)
    for (int d2 = -r; d2 <= r; ++d2) d = std::max(d, (a.at(d1, d2) - b.at(d1, d2)).norm());
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------------------------

CovariantKernel::CovariantKernel(double epsilon, int radius, int rows, int cols)
    : eps_(epsilon), radius_(radius), rows_(rows), cols_(cols) {
  if (radius < 0 || rows < 0 || cols < 0) throw InvalidInput("CovariantKernel: negative size");
  data_.assign(static_cast<size_t>(blocks()) * rows * cols, cplx(0.0));
}

CovariantKernel CovariantKernel::identity(double epsilon, int radius, int n) {
  CovariantKernel k(epsilon, radius, n, n);
  k.block(0, 0) = Mat::Identity(n, n);
  return k;
}

Eigen::Map<Mat> CovariantKernel::block(int d1, int d2) {
  return Eigen::Map<Mat>(data_.data() + static_cast<size_t>(index(d1, d2)) * rows_ * cols_, rows_, cols_);
}

Eigen::Map<const Mat> CovariantKernel::block(int d1, int d2) const {
  return Eigen::Map<const Mat>(data_.data() + static_cast<size_t>(index(d1, d2)) * rows_ * cols_, rows_, cols_);
}

Mat CovariantKernel::at(int d1, int d2) const {
  if (!contains(d1, d2)) return Mat::Zero(rows_, cols_);
  return block(d1, d2);
}

CovariantKernel CovariantKernel::adjoint() const {
  CovariantKernel out(eps_, radius_, cols_, rows_);
  for (int d1 = -radius_; d1 <= radius_; ++d1)
    for (int d2 = -radius_; d2 <= radius_; ++d2) out.block(d1, d2) = block(-d1, -d2).adjoint();
  return out;
}

CovariantKernel CovariantKernel::operator+(const CovariantKernel& o) const {
  require_same_phase(*this, o, "CovariantKernel::operator+");
  if (rows_ != o.rows_ || cols_ != o.cols_) throw InvalidInput("CovariantKernel::operator+: shape mismatch");
  CovariantKernel out(eps_, std::max(radius_, o.radius_), rows_, cols_);
  for (const CovariantKernel* k : {this, &o})
    for (int d1 = -k->radius_; d1 <= k->radius_; ++d1)
      for (int d2 = -k->radius_; d2 <= k->radius_; ++d2) out.block(d1, d2) += k->block(d1, d2);
  return out;
}

CovariantKernel CovariantKernel::operator-(const CovariantKernel& o) const { return *this + o * cplx(-1.0); }

CovariantKernel CovariantKernel::operator*(cplx s) const {
  CovariantKernel out = *this;
  for (cplx& v : out.data_) v *= s;
  return out;
}

CovariantKernel CovariantKernel::row_block(int first, int count) const {
  CovariantKernel out(eps_, radius_, count, cols_);
  for (int i = 0; i < blocks(); ++i) {
    const Index3 d = displacement(i);
    out.block(d[0], d[1]) = block(d[0], d[1]).middleRows(first, count);
  }
  return out;
}

CovariantKernel CovariantKernel::col_block(int first, int count) const {
  CovariantKernel out(eps_, radius_, rows_, count);
  for (int i = 0; i < blocks(); ++i) {
    const Index3 d = displacement(i);
    out.block(d[0], d[1]) = block(d[0], d[1]).middleCols(first, count);
  }
  return out;
}

CovariantKernel CovariantKernel::hstack(const CovariantKernel& a, const CovariantKernel& b) {
  require_same_phase(a, b, "CovariantKernel::hstack");
  if (a.rows_ != b.rows_) throw InvalidInput("CovariantKernel::hstack: row mismatch");
  const int r = std::max(a.radius_, b.radius_);
  CovariantKernel out(a.eps_, r, a.rows_, a.cols_ + b.cols_);
  for (int d1 = -r; d1 <= r; ++d1)
    for (int d2 = -r; d2 <= r; ++d2) {
      out.block(d1, d2).leftCols(a.cols_) = a.at(d1, d2);
      out.block(d1, d2).rightCols(b.cols_) = b.at(d1, d2);
    }
  return out;
}

double CovariantKernel::block_norm(int i) const {
  const size_t n = static_cast<size_t>(rows_) * cols_;
  double s = 0.0;
  for (size_t j = 0; j < n; ++j) s += std::norm(data_[i * n + j]);
  return std::sqrt(s);
}

double CovariantKernel::schur_norm() const {
  double s = 0.0;
  for (int i = 0; i < blocks(); ++i) s += block_norm(i);
  return s;
}

double CovariantKernel::schur_norm(int within) const {
  double s = 0.0;
  for (int i = 0; i < blocks(); ++i) {
    const Index3 d = displacement(i);
    if (std::max(std::abs(d[0]), std::abs(d[1])) <= within) s += block_norm(i);
  }
  return s;
}

double CovariantKernel::tail(int r) const {
  double t = 0.0;
  for (int i = 0; i < blocks(); ++i) {
    const Index3 d = displacement(i);
    if (std::max(std::abs(d[0]), std::abs(d[1])) >= r) t = std::max(t, block_norm(i));
  }
  return t;
}

void CovariantKernel::trim(double tol) {
  const size_t n = static_cast<size_t>(rows_) * cols_;
  for (int i = 0; i < blocks(); ++i)
    if (block_norm(i) < tol) std::fill(data_.begin() + i * n, data_.begin() + (i + 1) * n, cplx(0.0));
}

LatticeFunction CovariantKernel::column(int x) const {
  LatticeFunction f{LatticeBox{2, radius_, rows_}, Vec()};
  f.values.resize(f.box.size());
  for (int s = 0; s < f.box.sites(); ++s) {
    const Index3 d = f.box.cell(s);
    f.values.segment(s * rows_, rows_) = block(d[0], d[1]).col(x);
  }
  return f;
}

CovariantKernel compose(const CovariantKernel& a, const CovariantKernel& b, int radius) {
  require_same_phase(a, b, "compose");
  if (a.cols() != b.rows()) throw InvalidInput("compose: inner dimensions differ");
  const int R = radius < 0 ? std::max(a.radius(), b.radius()) : radius;
  const int ra = a.radius(), rb = b.radius();
  const int r = a.rows(), k = a.cols(), c = b.cols();
  CovariantKernel out(a.epsilon(), R, r, c);
  // e^{i eps n / 2} for n = v1 u2 - v2 u1
  const int span = 2 * ra * rb;
  std::vector<cplx> phase(2 * span + 1);
  for (int n = -span; n <= span; ++n) phase[n + span] = std::exp(I * (0.5 * a.epsilon() * n));
  std::vector<char> nz_b(b.blocks());
  for (int i = 0; i < b.blocks(); ++i) nz_b[i] = b.block_norm(i) > 0.0;
  const cplx* A = a.data().data();
  const cplx* B = b.data().data();
  cplx* O = out.data().data();
  const size_t sa = static_cast<size_t>(r) * k, sb = static_cast<size_t>(k) * c, so = static_cast<size_t>(r) * c;
  for (int ia = 0; ia < a.blocks(); ++ia) {
    if (a.block_norm(ia) == 0.0) continue;
    const Index3 u = a.displacement(ia);
    const cplx* ab = A + ia * sa;
    const int v1lo = std::max(-rb, -R - u[0]), v1hi = std::min(rb, R - u[0]);
    const int v2lo = std::max(-rb, -R - u[1]), v2hi = std::min(rb, R - u[1]);
    for (int v1 = v1lo; v1 <= v1hi; ++v1)
      for (int v2 = v2lo; v2 <= v2hi; ++v2) {
        const int ib = b.index(v1, v2);
        if (!nz_b[ib]) continue;
        const cplx ph = phase[v1 * u[1] - v2 * u[0] + span];
        const cplx* bb = B + ib * sb;
        cplx* ob = O + out.index(u[0] + v1, u[1] + v2) * so;
        for (int j = 0; j < c; ++j)
          for (int l = 0; l < k; ++l) {
            const cplx t = ph * bb[l + j * k];
            const cplx* acol = ab + l * r;
            cplx* ocol = ob + j * r;
            for (int i = 0; i < r; ++i) ocol[i] += acol[i] * t;
          }
      }
  }
  return out;
}

CovariantKernel inv_sqrt_series(const CovariantKernel& x, double tol, int max_terms) {
  if (x.rows() != x.cols()) throw InvalidInput("inv_sqrt_series: kernel must be square");
  const double nx = x.schur_norm();
  if (nx >= 1.0) throw NumericalFailure("inv_sqrt_series: Schur norm of the perturbation is not below 1");
  CovariantKernel sum = CovariantKernel::identity(x.epsilon(), x.radius(), x.rows());
  CovariantKernel power = x;
  double coef = 1.0;
  for (int k = 1; k <= max_terms; ++k) {
    coef *= -(2.0 * k - 1.0) / (2.0 * k);
    const CovariantKernel term = power * cplx(coef);
    sum = sum + term;
    if (term.schur_norm() < tol) return sum;
    power = compose(power, x);
  }
  throw NumericalFailure("inv_sqrt_series: no convergence");
}

LatticeFunction apply(const CovariantKernel& a, const LatticeFunction& f) {
  const LatticeBox& box = f.box;
  if (box.dim != 2 || box.fiber_dim != a.cols()) throw InvalidInput("apply: box does not match the kernel");
  LatticeFunction out{LatticeBox{2, box.radius, a.rows()}, Vec::Zero(static_cast<Eigen::Index>(box.sites()) * a.rows())};
  std::vector<int> active;
  for (int i = 0; i < a.blocks(); ++i)
    if (a.block_norm(i) > 0.0) active.push_back(i);
  std::vector<char> nz_f(box.sites());
  for (int s = 0; s < box.sites(); ++s) nz_f[s] = f.values.segment(s * box.fiber_dim, box.fiber_dim).squaredNorm() > 0.0;
  for (int s = 0; s < box.sites(); ++s) {
    const Index3 g = box.cell(s);
    Vec acc = Vec::Zero(a.rows());
    for (int i : active) {
      const Index3 d = a.displacement(i);
      const Index3 gp{g[0] - d[0], g[1] - d[1], 0};
      if (!box.contains(gp)) continue;
      const int sp = box.site(gp);
      if (!nz_f[sp]) continue;
      acc += std::exp(I * (a.epsilon() * peierls(g, gp))) * (a.block(d[0], d[1]) * f.values.segment(sp * box.fiber_dim, box.fiber_dim));
    }
    out.values.segment(s * a.rows(), a.rows()) = acc;
  }
  return out;
}

CovariantKernel kernel_of_family(const KGrid& grid, const std::vector<Mat>& family, double epsilon, int radius) {
  if (grid.dim() != 2) throw InvalidInput("kernel_of_family: needs a two-dimensional grid");
  if (2 * radius > grid.size(0) || 2 * radius > grid.size(1))
    throw InvalidInput("kernel_of_family: radius exceeds half the grid size");
  const int r = static_cast<int>(family.front().rows()), c = static_cast<int>(family.front().cols());
  Mat field(grid.total(), r * c);
  for (int f = 0; f < grid.total(); ++f) field.row(f) = Eigen::Map<const Eigen::RowVectorXcd>(family[f].data(), r * c);
  const Mat coef = lattice_coefficients(grid, field);
  CovariantKernel k(epsilon, radius, r, c);
  for (int i = 0; i < k.blocks(); ++i) {
    const Index3 d = k.displacement(i);
    const Eigen::RowVectorXcd row = coef.row(grid.flat(d));
    k.block(d[0], d[1]) = Eigen::Map<const Mat>(row.data(), r, c);
  }
  return k;
}

Mat kernel_element(const CovariantKernel& a, const Index3& g, const Index3& gp) {
  return std::exp(I * (a.epsilon() * peierls(g, gp))) * a.at(g[0] - gp[0], g[1] - gp[1]);
}

DecayFit kernel_decay(const CovariantKernel& a, const DecayOptions& opts) {
  LatticeFunction f{LatticeBox{2, a.radius(), 1}, Vec(a.blocks())};
  for (int s = 0; s < a.blocks(); ++s) {
    const Index3 d = f.box.cell(s);
    f.values[s] = a.block_norm(a.index(d[0], d[1]));
  }
  return decay_fit(f, opts);
}

// ---------------------------------------------------------------------------------------------

RieszColumns riesz_columns(const LatticeMatrix& h, const Mat& rhs, const ContourOptions& opts) {
  if (!(opts.hi > opts.lo) || opts.half_height <= 0.0) throw InvalidInput("riesz_columns: empty contour");
  const int n = h.box.size();
  SpMat id(n, n);
  id.setIdentity();
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(h.m - cplx(opts.lo, opts.half_height) * id);
  const cplx a(opts.lo, 0.0), b(opts.hi, 0.0), up(0.0, opts.half_height);
  const std::array<std::pair<cplx, cplx>, 3> segments{{{b, b + up}, {b + up, a + up}, {a + up, a}}};
  auto evaluate = [&](int nodes) {
    RVec x, w;
    gauss_legendre(nodes, x, w);
    Mat acc = Mat::Zero(n, rhs.cols());
    for (const auto& [z0, z1] : segments)
      for (int j = 0; j < nodes; ++j) {
        const cplx z = 0.5 * (z0 + z1) + 0.5 * (z1 - z0) * x[j];
        const cplx dz = 0.5 * (z1 - z0) * w[j];
        lu.factorize(h.m - z * id);
        if (lu.info() != Eigen::Success) throw NumericalFailure("riesz_columns: factorization failed on the contour");
        const Mat r = lu.solve(rhs);
        const Mat ra = lu.adjoint().solve(rhs);
        acc += dz * r - std::conj(dz) * ra;
      }
    return Mat(acc * (-1.0 / (two_pi * I)));
  };
  RieszColumns out;
  out.nodes = opts.nodes;
  out.columns = evaluate(out.nodes);
  out.convergence = std::numeric_limits<double>::infinity();
  while (out.nodes < opts.max_nodes) {
    out.nodes *= 2;
    Mat next = evaluate(out.nodes);
    out.convergence = (next - out.columns).cwiseAbs().maxCoeff();
    out.columns = std::move(next);
    if (out.convergence < opts.tol) break;
  }
  return out;
}

Mat spectral_window_dense(const LatticeMatrix& h, double lo, double hi) {
  const Mat dense = Mat(h.m);
  Eigen::SelfAdjointEigenSolver<Mat> es(dense);
  const RVec& e = es.eigenvalues();
  Mat p = Mat::Zero(dense.rows(), dense.cols());
  for (int i = 0; i < e.size(); ++i)
    if (e[i] > lo && e[i] < hi) p += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
  return p;
}

Mat cell_columns(const LatticeBox& box, const Index3& cell) {
  if (!box.contains(cell)) throw InvalidInput("cell_columns: cell outside the box");
  Mat c = Mat::Zero(box.size(), box.fiber_dim);
  for (int x = 0; x < box.fiber_dim; ++x) c(box.site(cell) * box.fiber_dim + x, x) = 1.0;
  return c;
}

CovariantKernel kernel_from_columns(const LatticeBox& box, const Mat& centre, double epsilon, int radius) {
  if (radius > box.radius) throw InvalidInput("kernel_from_columns: radius exceeds the box");
  const int q = box.fiber_dim;
  CovariantKernel k(epsilon, radius, q, q);
  for (int i = 0; i < k.blocks(); ++i) {
    const Index3 d = k.displacement(i);
    k.block(d[0], d[1]) = centre.middleRows(box.site(d) * q, q);
  }
  return k;
}

double covariance_residual(const LatticeBox& box, const Mat& columns, const Index3& eta, const CovariantKernel& a) {
  const int q = box.fiber_dim;
  double r = 0.0;
  for (int s = 0; s < box.sites(); ++s) {
    const Index3 g = box.cell(s);
    if (!a.contains(g[0] - eta[0], g[1] - eta[1])) continue;
    r = std::max(r, (columns.middleRows(s * q, q) - kernel_element(a, g, eta)).cwiseAbs().maxCoeff());
  }
  return r;
}

// ---------------------------------------------------------------------------------------------

LatticeFunction resolvent_column(const LatticeMatrix& h, cplx z, int orbital) {
  const int n = h.box.size();
  SpMat id(n, n);
  id.setIdentity();
  Eigen::SparseLU<SpMat> lu(h.m - z * id);
  if (lu.info() != Eigen::Success) throw NumericalFailure("resolvent_column: factorization failed");
  Vec e = Vec::Zero(n);
  e[h.box.site({0, 0, 0}) * h.box.fiber_dim + orbital] = 1.0;
  return LatticeFunction{h.box, lu.solve(e)};
}

DecayFit resolvent_decay(const LatticeMatrix& h, cplx z, const DecayOptions& opts) {
  LatticeFunction env{h.box, Vec::Zero(h.box.size())};
  for (int x = 0; x < h.box.fiber_dim; ++x) {
    const LatticeFunction c = resolvent_column(h, z, x);
    for (int i = 0; i < env.values.size(); ++i)
      env.values[i] = std::max(std::abs(env.values[i]), std::abs(c.values[i]));
  }
  return decay_fit(env, opts);
}

double resolvent_difference_bound(const LatticeMatrix& h_eps, const LatticeMatrix& h_0, cplx z, double alpha) {
  if (!(h_eps.box.radius == h_0.box.radius && h_eps.box.fiber_dim == h_0.box.fiber_dim))
    throw InvalidInput("resolvent_difference_bound: boxes differ");
  const LatticeBox& box = h_eps.box;
  double sup = 0.0;
  for (int x = 0; x < box.fiber_dim; ++x) {
    const LatticeFunction a = resolvent_column(h_eps, z, x), b = resolvent_column(h_0, z, x);
    for (int s = 0; s < box.sites(); ++s) {
      const double r = euclid(box.cell(s));
      if (r > 0.5 * box.radius) continue;
      const double d = (a.values.segment(s * box.fiber_dim, box.fiber_dim) - b.values.segment(s * box.fiber_dim, box.fiber_dim))
                           .cwiseAbs()
                           .maxCoeff();
      sup = std::max(sup, d * std::exp(alpha * r));
    }
  }
  return sup;
}

// ---------------------------------------------------------------------------------------------

Mat kato_nagy(const Mat& target, const Mat& source) {
  const int n = static_cast<int>(target.rows());
  const Mat id = Mat::Identity(n, n);
  const Mat d = target - source;
  if (op_norm(d) >= 1.0) throw NumericalFailure("kato_nagy: projections are too far apart");
  return inv_sqrt_psd(id - d * d) * (target * source + (id - target) * (id - source));
}

CovariantKernel kato_nagy(const CovariantKernel& target, const CovariantKernel& source, double tol) {
  const CovariantKernel d = target - source;
  if (d.schur_norm() > 0.5) throw NumericalFailure("kato_nagy: ||Q - P|| exceeds 1/2");
  const CovariantKernel s = inv_sqrt_series(compose(d, d) * cplx(-1.0), tol);
  const CovariantKernel id = CovariantKernel::identity(target.epsilon(), target.radius(), target.rows());
  const CovariantKernel qp = compose(target, source);
  return compose(s, id - target - source + qp * cplx(2.0));
}

NenciuProjection nenciu_projection(const CovariantKernel& t, double tol) {
  NenciuProjection out;
  const CovariantKernel delta = compose(t, t) - t;
  out.delta = delta.schur_norm();
  if (out.delta >= 0.25) throw NumericalFailure("nenciu_projection: ||T^2 - T|| is not below 1/4");
  const CovariantKernel id = CovariantKernel::identity(t.epsilon(), t.radius(), t.rows());
  const CovariantKernel s = inv_sqrt_series(delta * cplx(4.0), tol);
  out.projection = t + compose(t - id * cplx(0.5), s - id);
  return out;
}

OrthonormalTranslates orthonormalize_translates(const CovariantKernel& w, const CovariantKernel& pi, double tol) {
  OrthonormalTranslates out;
  const CovariantKernel pw = compose(pi, w);
  const CovariantKernel m = compose(w.adjoint(), pw);
  const CovariantKernel x = m - CovariantKernel::identity(w.epsilon(), m.radius(), w.cols());
  out.overlap_defect = x.schur_norm();
  if (out.overlap_defect >= 1.0) throw NumericalFailure("orthonormalize_translates: ||M - 1|| is not below 1");
  out.functions = compose(pw, inv_sqrt_series(x, tol));
  return out;
}

// ---------------------------------------------------------------------------------------------

MagneticFrame magnetic_frame(const LatticeOperator& op, const TightBinding& fiber0, const MagneticOptions& opts) {
  if (fiber0.dim != 2 || fiber0.orbitals != op.orbitals) throw InvalidInput("magnetic_frame: fiber does not match the operator");
  if (opts.mode == FrameKind::subframe) throw InvalidInput("magnetic_frame: mode must be basis or parseval");
  const int q = op.orbitals;
  const int L = opts.box_radius;
  const int R = opts.kernel_radius < 0 ? L : opts.kernel_radius;
  if (R > L) throw InvalidInput("magnetic_frame: kernel radius exceeds the box");
  if (2 * R > opts.grid) throw InvalidInput("magnetic_frame: k-grid too coarse for the kernel radius");
  const double eps = op.epsilon;

  MagneticFrame out;
  MagneticCertificate& cert = out.certificate;
  cert.epsilon = eps;

  const KGrid grid = KGrid::cube(2, opts.grid);
  const ProjectionFamily p0 = window_projection(fiber0, grid, opts.lo, opts.hi);
  const int m = p0.rank;
  cert.rank = m;
  cert.chern = chern_number(p0);
  if (opts.mode == FrameKind::basis && cert.chern != 0)
    throw TopologicalObstruction("magnetic_frame: the island has non-zero Chern number", {cert.chern});

  // projection columns on the box: centre cell, shifted cells, interior test vectors
  const LatticeBox box{2, L, q};
  const LatticeMatrix h = op.realize(box);
  const int nshift = static_cast<int>(opts.covariance_shifts.size());
  Mat rhs(box.size(), q * (1 + nshift) + opts.test_vectors);
  rhs.leftCols(q) = cell_columns(box, {0, 0, 0});
  for (int i = 0; i < nshift; ++i) rhs.middleCols(q * (1 + i), q) = cell_columns(box, opts.covariance_shifts[i]);
  {
    std::mt19937 rng(opts.seed);
    std::normal_distribution<double> nd;
    Mat t = Mat::Zero(box.size(), opts.test_vectors);
    for (int s = 0; s < box.sites(); ++s) {
      const Index3 g = box.cell(s);
      if (std::max(std::abs(g[0]), std::abs(g[1])) > L / 4) continue;
      for (int x = 0; x < q; ++x)
        for (int j = 0; j < opts.test_vectors; ++j) t(s * q + x, j) = cplx(nd(rng), nd(rng));
    }
    rhs.rightCols(opts.test_vectors) = t;
  }
  ContourOptions co;
  co.lo = opts.lo;
  co.hi = opts.hi;
  co.half_height = opts.half_height;
  co.nodes = opts.contour_nodes;
  co.max_nodes = 4 * opts.contour_nodes;
  const RieszColumns rc = riesz_columns(h, rhs, co);
  cert.contour_nodes = rc.nodes;
  cert.contour_convergence = rc.convergence;

  out.projection = kernel_from_columns(box, rc.columns.leftCols(q), eps, R);
  out.projection.trim(opts.trim);
  const CovariantKernel& pi = out.projection;
  for (int i = 0; i < nshift; ++i)
    cert.covariance = std::max(
        cert.covariance, covariance_residual(box, rc.columns.middleCols(q * (1 + i), q), opts.covariance_shifts[i], pi));

  // orthonormal part
  const int s1 = opts.mode == FrameKind::basis ? m : m - 1;
  CovariantKernel pi1(eps, R, q, q);
  CovariantKernel seeds1(eps, R, q, 0);
  std::vector<Mat> sub;
  if (s1 > 0) {
    sub = opts.mode == FrameKind::basis ? construct_bloch_basis(p0).vectors : construct_subframe(p0).vectors;
    const CovariantKernel w = kernel_of_family(grid, sub, eps, R);
    OrthonormalTranslates ot = orthonormalize_translates(w, pi, opts.series_tol);
    ot.functions.trim(opts.trim);
    cert.overlap_defect = ot.overlap_defect;
    seeds1 = ot.functions;
    pi1 = compose(seeds1, seeds1.adjoint());
    cert.periodic_deviation = block_distance(seeds1, w);
  }
  out.orthonormal = s1;

  if (opts.mode == FrameKind::basis) {
    out.seeds = seeds1;
  } else {
    // doubled family conj(P2(-k)) (+) P2(k) of the remaining rank-one part
    ProjectionFamily p2{grid, q, 1, p0.p};
    if (s1 > 0)
      for (int f = 0; f < grid.total(); ++f) p2.p[f] -= sub[f] * sub[f].adjoint();
    const ProjectionFamily p3 = doubled_family(p2, Doubling::conjugate_first);
    const BlochFrame fb = construct_bloch_basis(p3);
    const CovariantKernel f = kernel_of_family(grid, fb.vectors, eps, R);
    const CovariantKernel t = kernel_of_family(grid, p3.p, eps, R);
    const NenciuProjection n1 = nenciu_projection(t.row_block(0, q).col_block(0, q), opts.series_tol);
    const NenciuProjection n2 = nenciu_projection(t.row_block(q, q).col_block(q, q), opts.series_tol);
    cert.nenciu_delta = std::max(n1.delta, n2.delta);
    const CovariantKernel f1 = f.row_block(0, q), f2 = f.row_block(q, q);
    const CovariantKernel p2f = compose(n2.projection, f2);
    const CovariantKernel mf = compose(f1.adjoint(), compose(n1.projection, f1)) + compose(f2.adjoint(), p2f);
    const CovariantKernel x = mf - CovariantKernel::identity(eps, R, 2);
    cert.overlap_defect = std::max(cert.overlap_defect, x.schur_norm());
    if (x.schur_norm() >= 1.0) throw NumericalFailure("magnetic_frame: doubled overlap is not close to 1");
    const CovariantKernel pi2f = compose(p2f, inv_sqrt_series(x, opts.series_tol));

    const CovariantKernel target = pi - pi1;
    cert.kato_nagy_distance = (target - n2.projection).schur_norm();
    if (cert.kato_nagy_distance > 0.5) throw NumericalFailure("magnetic_frame: ||Pi_2 - P_2|| exceeds 1/2");
    CovariantKernel k = kato_nagy(target, n2.projection, opts.series_tol);
    k.trim(opts.trim);
    const CovariantKernel commutator = compose(k, n2.projection) - compose(target, k);
    cert.intertwining = commutator.schur_norm();
    cert.intertwining_interior = commutator.schur_norm(R / 2);
    cert.kato_nagy_decay = kernel_decay(k - CovariantKernel::identity(eps, R, q));
    CovariantKernel w2 = compose(k, pi2f);
    w2.trim(opts.trim);
    cert.periodic_deviation = std::max(cert.periodic_deviation, block_distance(w2, f2));
    if (s1 > 0) cert.orthogonality = compose(pi1, compose(w2, w2.adjoint())).schur_norm();
    out.seeds = s1 > 0 ? CovariantKernel::hstack(seeds1, w2) : w2;
  }

  const CovariantKernel frame_op = compose(out.seeds, out.seeds.adjoint());
  cert.frame_defect = (frame_op - pi).schur_norm();
  cert.frame_defect_interior = (frame_op - pi).schur_norm(R / 2);
  for (int j = 0; j < opts.test_vectors; ++j) {
    const LatticeFunction psi{box, rc.columns.col(q * (1 + nshift) + j)};
    const LatticeFunction rec = apply(frame_op, psi);
    cert.reconstruction = std::max(cert.reconstruction, (rec.values - psi.values).norm() / psi.values.norm());
  }
  for (int c = 0; c < out.seeds.cols(); ++c) cert.seed_decay.push_back(decay_fit(out.seeds.column(c)));
  return out;
}

MagneticFrame magnetic_perturb(const HoppingModel& model, int p, int q, double epsilon, const MagneticOptions& opts,
                               bool scaled_phase) {
  const SupercellReduction red0 = supercell_reduce(model, p, q, 0.0);
  LatticeOperator op{epsilon, red0.orbitals(), red0.fiber.hoppings};
  if (scaled_phase) op = supercell_reduce(model, p, q, epsilon).reduced;
  MagneticFrame fr = magnetic_frame(op, red0.fiber, opts);
  fr.certificate.epsilon = epsilon;
  fr.certificate.supercell_phase_flag = q > 1 && !scaled_phase;
  return fr;
}

}  // namespace bloch
