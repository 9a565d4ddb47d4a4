#include "bloch/hofstadter.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>

namespace bloch {

namespace {

Index3 neg(const Index3& g) { return {-g[0], -g[1], -g[2]}; }
Index3 sub(const Index3& a, const Index3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

double map_hermiticity(const std::map<Index3, Mat>& h, int n) {
  double d = 0.0;
  for (const auto& [g, t] : h) {
    auto it = h.find(neg(g));
    const Mat other = it == h.end() ? Mat::Zero(n, n) : it->second;
    d = std::max(d, (other - t.adjoint()).cwiseAbs().maxCoeff());
  }
  return d;
}

}  // namespace

int HoppingModel::support_radius() const {
  int r = 0;
  for (const auto& [g, t] : hoppings) r = std::max({r, std::abs(g[0]), std::abs(g[1])});
  return r;
}

double HoppingModel::hermiticity_defect() const { return map_hermiticity(hoppings, orbitals()); }

TightBinding HoppingModel::bloch() const {
  TightBinding tb;
  tb.dim = 2;
  tb.orbitals = orbitals();
  tb.hoppings = hoppings;
  return tb;
}

Mat HoppingModel::block(const Index3& g) const {
  auto it = hoppings.find(g);
  return it == hoppings.end() ? Mat::Zero(orbitals(), orbitals()) : it->second;
}

HoppingModel HoppingModel::square(double t) {
  HoppingModel m;
  m.sites = {{0.0, 0.0}};
  const Mat one = Mat::Constant(1, 1, t);
  for (const Index3& g : {Index3{1, 0, 0}, Index3{-1, 0, 0}, Index3{0, 1, 0}, Index3{0, -1, 0}}) m.hoppings[g] = one;
  return m;
}

double LatticeMatrix::hermiticity_defect() const {
  const SpMat d = m - SpMat(m.adjoint());
  double r = 0.0;
  for (int k = 0; k < d.outerSize(); ++k)
    for (SpMat::InnerIterator it(d, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

int LatticeOperator::support_radius() const {
  int r = 0;
  for (const auto& [g, t] : kernel) r = std::max({r, std::abs(g[0]), std::abs(g[1])});
  return r;
}

Mat LatticeOperator::element(const Index3& g, const Index3& gp) const {
  auto it = kernel.find(sub(g, gp));
  if (it == kernel.end()) return Mat::Zero(orbitals, orbitals);
  return std::exp(I * (epsilon * peierls(g, gp))) * it->second;
}

LatticeMatrix LatticeOperator::realize(const LatticeBox& box) const {
  if (box.fiber_dim != orbitals) throw InvalidInput("LatticeOperator::realize: box fiber dimension mismatch");
  std::vector<Eigen::Triplet<cplx>> trip;
  const int q = orbitals;
  for (int s = 0; s < box.sites(); ++s) {
    const Index3 g = box.cell(s);
    for (const auto& [d, blk] : kernel) {
      const Index3 gp = sub(g, d);
      if (!box.contains(gp)) continue;
      const cplx ph = std::exp(I * (epsilon * peierls(g, gp)));
      const int sp = box.site(gp);
      for (int x = 0; x < q; ++x)
        for (int xp = 0; xp < q; ++xp)
          if (blk(x, xp) != 0.0) trip.emplace_back(s * q + x, sp * q + xp, ph * blk(x, xp));
    }
  }
  LatticeMatrix out{box, SpMat(box.size(), box.size())};
  out.m.setFromTriplets(trip.begin(), trip.end());
  return out;
}

LatticeMatrix build_hofstadter(const HoppingModel& model, double b, const LatticeBox& box) {
  const int n = model.orbitals();
  if (box.fiber_dim != n || box.dim != 2) throw InvalidInput("build_hofstadter: box does not match the model");
  std::vector<Eigen::Triplet<cplx>> trip;
  for (int s = 0; s < box.sites(); ++s) {
    const Index3 g = box.cell(s);
    for (const auto& [d, blk] : model.hoppings) {
      const Index3 gp = sub(g, d);
      if (!box.contains(gp)) continue;
      const int sp = box.site(gp);
      for (int y = 0; y < n; ++y)
        for (int yp = 0; yp < n; ++yp) {
          if (blk(y, yp) == 0.0) continue;
          const auto& a = model.sites[y];
          const auto& c = model.sites[yp];
          const double ph = peierls(g[0] + a[0], g[1] + a[1], gp[0] + c[0], gp[1] + c[1]);
          trip.emplace_back(s * n + y, sp * n + yp, std::exp(I * (b * ph)) * blk(y, yp));
        }
    }
  }
  LatticeMatrix out{box, SpMat(box.size(), box.size())};
  out.m.setFromTriplets(trip.begin(), trip.end());
  return out;
}

std::array<double, 2> SupercellReduction::offset(int o) const {
  const int n = source.orbitals();
  const auto& y = source.sites[o % n];
  return {o / n + y[0], y[1]};
}

Index3 SupercellReduction::original_cell(const Index3& g, int o) const {
  return {q * g[0] + o / source.orbitals(), g[1], 0};
}

cplx SupercellReduction::ub_phase(const Index3& g, int o) const {
  const double b = b0() + epsilon;
  const auto x = offset(o);
  const double e1 = static_cast<double>(q) * g[0];
  const double e2 = g[1];
  return std::exp(I * (b0() * e1 * e2 / 2.0 + b * peierls(e1, e2, x[0], x[1])));
}

SupercellReduction supercell_reduce(const HoppingModel& model, int p, int q, double epsilon) {
  if (q <= 0) throw InvalidInput("supercell_reduce: q must be positive");
  if (std::gcd(p, q) != 1) throw InvalidInput("supercell_reduce: p and q must be coprime");
  const int n = model.orbitals();
  const int nq = q * n;
  SupercellReduction red;
  red.source = model;
  red.p = p;
  red.q = q;
  red.epsilon = epsilon;
  red.fiber.dim = 2;
  red.fiber.orbitals = nq;
  const double b = red.b0() + epsilon;
  const int r = model.support_radius();
  const int r1 = (r + q - 1) / q;
  for (int g1 = -r1; g1 <= r1; ++g1)
    for (int g2 = -r; g2 <= r; ++g2) {
      Mat blk = Mat::Zero(nq, nq);
      bool any = false;
      const double sign = ((p * g1 * g2) % 2 == 0) ? 1.0 : -1.0;
      for (int o = 0; o < nq; ++o)
        for (int op = 0; op < nq; ++op) {
          const int x = o / n, xp = op / n;
          const Index3 d{q * g1 + x - xp, g2, 0};
          auto it = model.hoppings.find(d);
          if (it == model.hoppings.end()) continue;
          const cplx t = it->second(o % n, op % n);
          if (t == 0.0) continue;
          const auto a = red.offset(o);
          const auto c = red.offset(op);
          const double ph = (pi * p / q + epsilon / 2.0) * g2 * (a[0] + c[0]) -
                            (pi * p + q * epsilon / 2.0) * g1 * (a[1] + c[1]) +
                            b * peierls(a[0], a[1], c[0], c[1]);
          blk(o, op) = sign * std::exp(I * ph) * t;
          any = true;
        }
      if (any) red.fiber.hoppings[{g1, g2, 0}] = blk;
    }
  red.reduced.epsilon = epsilon * q;
  red.reduced.orbitals = nq;
  red.reduced.kernel = red.fiber.hoppings;
  return red;
}

double supercell_consistency(const SupercellReduction& red, int radius) {
  const int n = red.source.orbitals();
  const int nq = red.orbitals();
  const double b = red.b0() + red.epsilon;
  double worst = 0.0;
  // all reduced displacements that can couple through the source support
  const int r = red.source.support_radius();
  const int r1 = (r + red.q - 1) / red.q + 1;
  for (int a1 = -radius; a1 <= radius; ++a1)
    for (int a2 = -radius; a2 <= radius; ++a2)
      for (int d1 = -r1; d1 <= r1; ++d1)
        for (int d2 = -r - 1; d2 <= r + 1; ++d2) {
          const Index3 g{a1, a2, 0};
          const Index3 gp{a1 - d1, a2 - d2, 0};
          const Mat want = red.reduced.element(g, gp);
          for (int o = 0; o < nq; ++o)
            for (int op = 0; op < nq; ++op) {
              const Index3 c = red.original_cell(g, o);
              const Index3 cp = red.original_cell(gp, op);
              const auto& y = red.source.sites[o % n];
              const auto& yp = red.source.sites[op % n];
              const cplx t = red.source.block(sub(c, cp))(o % n, op % n);
              const double ph = peierls(c[0] + y[0], c[1] + y[1], cp[0] + yp[0], cp[1] + yp[1]);
              const cplx hb = std::exp(I * (b * ph)) * t;
              const cplx rotated = red.ub_phase(g, o) * hb * std::conj(red.ub_phase(gp, op));
              worst = std::max(worst, std::abs(rotated - want(o, op)));
            }
        }
  return worst;
}

double fiber_epsilon_constant(const HoppingModel& model, int p, int q, double epsilon, const KGrid& grid) {
  if (epsilon == 0.0) throw InvalidInput("fiber_epsilon_constant: epsilon must be non-zero");
  const TightBinding f0 = supercell_reduce(model, p, q, 0.0).fiber;
  const TightBinding fe = supercell_reduce(model, p, q, epsilon).fiber;
  double c = 0.0;
  for (int i = 0; i < grid.total(); ++i)
    c = std::max(c, op_norm(fe.fiber(grid.point(i)) - f0.fiber(grid.point(i))) / std::abs(epsilon));
  return c;
}

LatticeFunction magnetic_translation(double epsilon, const Index3& eta, const LatticeFunction& f) {
  LatticeFunction out{f.box, Vec::Zero(f.values.size())};
  const int q = f.box.fiber_dim;
  for (int s = 0; s < f.box.sites(); ++s) {
    const Index3 g = f.box.cell(s);
    const Index3 src = sub(g, eta);
    if (!f.box.contains(src)) continue;
    const cplx ph = std::exp(I * (epsilon * peierls(g, eta)));
    const int ss = f.box.site(src);
    for (int x = 0; x < q; ++x) out.values[s * q + x] = ph * f.values[ss * q + x];
  }
  return out;
}

BandScan fiber_bands(const TightBinding& fiber, const KGrid& grid) {
  BandScan s{grid, band_energies(fiber, grid), {}, {}, {}};
  const int m = fiber.orbitals;
  for (int b = 0; b < m; ++b) {
    double lo = 1e300, hi = -1e300;
    for (const RVec& e : s.energies) {
      lo = std::min(lo, e[b]);
      hi = std::max(hi, e[b]);
    }
    s.ranges.emplace_back(lo, hi);
  }
  std::vector<std::pair<double, double>> r = s.ranges;
  std::sort(r.begin(), r.end());
  for (const auto& iv : r) {
    if (!s.islands.empty() && iv.first <= s.islands.back().second + 1e-12)
      s.islands.back().second = std::max(s.islands.back().second, iv.second);
    else
      s.islands.push_back(iv);
  }
  for (size_t i = 0; i + 1 < s.islands.size(); ++i) s.gaps.emplace_back(s.islands[i].second, s.islands[i + 1].first);
  return s;
}

double hausdorff_distance(const std::vector<double>& points,
                          const std::vector<std::pair<double, double>>& intervals) {
  if (points.empty() || intervals.empty()) throw InvalidInput("hausdorff_distance: empty set");
  std::vector<double> p = points;
  std::sort(p.begin(), p.end());
  double d = 0.0;
  for (double x : p) {
    double best = 1e300;
    for (const auto& [a, b] : intervals) best = std::min(best, x < a ? a - x : (x > b ? x - b : 0.0));
    d = std::max(d, best);
  }
  auto to_points = [&](double x) {
    auto it = std::lower_bound(p.begin(), p.end(), x);
    double best = 1e300;
    if (it != p.end()) best = *it - x;
    if (it != p.begin()) best = std::min(best, x - *std::prev(it));
    return best;
  };
  for (const auto& [a, b] : intervals) {
    d = std::max({d, to_points(a), to_points(b)});
    for (size_t i = 0; i + 1 < p.size(); ++i) {
      const double mid = 0.5 * (p[i] + p[i + 1]);
      if (mid > a && mid < b) d = std::max(d, to_points(mid));
    }
  }
  return d;
}

namespace {

Index3 rotate(const Index3& g) { return {-g[1], g[0], 0}; }

// Orthonormal basis of the rotation sector with eigenvalue i^s.
SpMat sector_basis(const LatticeBox& box, int s) {
  const int q = box.fiber_dim;
  const cplx lam = std::pow(I, s);
  std::vector<Eigen::Triplet<cplx>> trip;
  int col = 0;
  if (s == 0)
    for (int x = 0; x < q; ++x) trip.emplace_back(box.site({0, 0, 0}) * q + x, col++, 1.0);
  for (int g1 = 1; g1 <= box.radius; ++g1)
    for (int g2 = 0; g2 <= box.radius; ++g2)
      for (int x = 0; x < q; ++x) {
        Index3 g{g1, g2, 0};
        cplx c = 0.5;
        for (int j = 0; j < 4; ++j) {
          trip.emplace_back(box.site(g) * q + x, col, c);
          g = rotate(g);
          c /= lam;
        }
        ++col;
      }
  SpMat v(box.size(), col);
  v.setFromTriplets(trip.begin(), trip.end());
  return v;
}

}  // namespace

TruncatedSpectrum truncated_spectrum(const LatticeMatrix& h, int width, double max_boundary_weight) {
  const LatticeBox& box = h.box;
  const int q = box.fiber_dim;
  std::vector<char> boundary(box.size(), 0);
  for (int s = 0; s < box.sites(); ++s) {
    const Index3 g = box.cell(s);
    int r = 0;
    for (int a = 0; a < box.dim; ++a) r = std::max(r, std::abs(g[a]));
    if (r > box.radius - width)
      for (int x = 0; x < q; ++x) boundary[s * q + x] = 1;
  }
  TruncatedSpectrum out;
  auto absorb = [&](const RVec& vals, const Mat& vecs) {
    for (int c = 0; c < vals.size(); ++c) {
      double w = 0.0;
      for (int r = 0; r < vecs.rows(); ++r)
        if (boundary[r]) w += std::norm(vecs(r, c));
      out.values.push_back(vals[c]);
      out.boundary_weight.push_back(w);
      if (w <= max_boundary_weight) out.interior.push_back(vals[c]);
    }
  };
  bool reduced = false;
  if (box.dim == 2) {
    std::vector<SpMat> bases;
    std::vector<Mat> blocks;
    double resid = 0.0;
    for (int s = 0; s < 4; ++s) {
      SpMat v = sector_basis(box, s);
      const SpMat hv = h.m * v;
      Mat hs = Mat(SpMat(v.adjoint()) * hv);
      hs = 0.5 * (hs + hs.adjoint());
      const Mat diff = Mat(hv) - v * hs;
      resid = std::max(resid, diff.size() ? diff.cwiseAbs().maxCoeff() : 0.0);
      bases.push_back(std::move(v));
      blocks.push_back(std::move(hs));
      if (resid > 1e-10) break;
    }
    out.rotation_residual = resid;
    if (resid <= 1e-10) {
      reduced = true;
      for (int s = 0; s < 4; ++s) {
        Eigen::SelfAdjointEigenSolver<Mat> es(blocks[s]);
        absorb(es.eigenvalues(), bases[s] * es.eigenvectors());
      }
    }
  }
  if (!reduced) {
    const Mat d = Mat(h.m);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (d + d.adjoint()));
    absorb(es.eigenvalues(), es.eigenvectors());
  }
  out.rotation_reduced = reduced;
  std::vector<size_t> order(out.values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return out.values[a] < out.values[b]; });
  TruncatedSpectrum sorted = out;
  for (size_t i = 0; i < order.size(); ++i) {
    sorted.values[i] = out.values[order[i]];
    sorted.boundary_weight[i] = out.boundary_weight[order[i]];
  }
  std::sort(sorted.interior.begin(), sorted.interior.end());
  return sorted;
}

BlockDiagonalization torus_block_diagonalization(const TightBinding& fiber, int cells) {
  const int m = cells;
  const int q = fiber.orbitals;
  if (2 * fiber.support_radius() >= m) throw InvalidInput("torus_block_diagonalization: torus too small for the support");
  const int n = m * m * q;
  Mat h = Mat::Zero(n, n);
  auto idx = [&](int a, int b) { return ((a % m + m) % m * m + (b % m + m) % m) * q; };
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (const auto& [d, blk] : fiber.hoppings) h.block(idx(a, b), idx(a - d[0], b - d[1]), q, q) += blk;
  Mat u = Mat::Zero(n, n);
  for (int k1 = 0; k1 < m; ++k1)
    for (int k2 = 0; k2 < m; ++k2)
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          const cplx e = std::exp(-I * (two_pi * (static_cast<double>(k1) * a + static_cast<double>(k2) * b) / m)) /
                         static_cast<double>(m);
          for (int x = 0; x < q; ++x) u(idx(k1, k2) + x, idx(a, b) + x) = e;
        }
  const Mat t = u * h * u.adjoint();
  BlockDiagonalization r;
  for (int k = 0; k < m * m; ++k)
    for (int kp = 0; kp < m * m; ++kp) {
      const Mat blk = t.block(k * q, kp * q, q, q);
      if (k == kp) {
        const std::array<double, 3> kk{static_cast<double>(k / m) / m, static_cast<double>(k % m) / m, 0.0};
        r.fiber_mismatch = std::max(r.fiber_mismatch, (blk - fiber.fiber(kk)).cwiseAbs().maxCoeff());
      } else {
        r.off_diagonal = std::max(r.off_diagonal, blk.cwiseAbs().maxCoeff());
      }
    }
  return r;
}

std::vector<ButterflyPoint> butterfly(const HoppingModel& model, int q_max, int n) {
  if (q_max < 1 || n < 1) throw InvalidInput("butterfly: q_max and n must be positive");
  std::vector<ButterflyPoint> pts;
  const KGrid grid = KGrid::cube(2, n);
  for (int q = 1; q <= q_max; ++q)
    for (int p = 0; p < q; ++p) {
      if (std::gcd(p, q) != 1) continue;
      const TightBinding f = supercell_reduce(model, p, q, 0.0).fiber;
      for (const RVec& e : band_energies(f, grid))
        for (int b = 0; b < e.size(); ++b) pts.push_back({p, q, e[b]});
    }
  return pts;
}

}  // namespace bloch
