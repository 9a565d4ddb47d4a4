#include "bloch/wannier.hpp"

#include <algorithm>
#include <random>

namespace bloch {

namespace {

double cell_norm2(const Index3& g, int dim) {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) s += static_cast<double>(g[a]) * g[a];
  return std::sqrt(s);
}

int cell_inf(const Index3& g, int dim) {
  int m = 0;
  for (int a = 0; a < dim; ++a) m = std::max(m, std::abs(g[a]));
  return m;
}

// Frame columns as periodic lattice coefficients: one matrix (rows = periodic cells, cols = n) per column.
std::vector<Mat> periodic_coefficients(const BlochFrame& frame) {
  std::vector<Mat> out;
  for (int a = 0; a < frame.count(); ++a) out.push_back(lattice_coefficients(frame.grid, frame_column(frame.vectors, a)));
  return out;
}

// Cyclic translate index: row of g - h.
std::vector<int> shifted_rows(const KGrid& grid, int h) {
  const Index3 hh = grid.coords(h);
  std::vector<int> rows(grid.total());
  for (int r = 0; r < grid.total(); ++r) {
    Index3 g = grid.coords(r);
    for (int a = 0; a < grid.dim(); ++a) g[a] -= hh[a];
    rows[r] = grid.flat(g);
  }
  return rows;
}

}  // namespace

std::vector<ShellMax> shell_maxima(const LatticeFunction& w) {
  const LatticeBox& b = w.box;
  const int shells = static_cast<int>(std::ceil(b.radius * std::sqrt(static_cast<double>(b.dim)))) + 1;
  std::vector<ShellMax> m(shells);
  for (int s = 0; s < b.sites(); ++s) {
    const double d = cell_norm2(b.cell(s), b.dim);
    ShellMax& sm = m[static_cast<int>(std::lround(d))];
    for (int x = 0; x < b.fiber_dim; ++x) {
      const double v = std::abs(w.values[s * b.fiber_dim + x]);
      if (v > sm.value) sm = {d, v};
    }
  }
  return m;
}

DecayFit decay_fit_shells(const std::vector<ShellMax>& shells, int box_radius, const DecayOptions& opts) {
  DecayFit fit;
  const double rmax = opts.max_radius >= 0 ? opts.max_radius : 0.5 * box_radius;
  double top = 0.0;
  for (const ShellMax& s : shells) top = std::max(top, s.value);
  if (top == 0.0) throw InvalidInput("decay_fit: zero function");
  std::vector<double> xs, ys;
  for (int r = static_cast<int>(std::ceil(opts.min_radius)); r < static_cast<int>(shells.size()) && r <= rmax; ++r) {
    if (shells[r].value <= opts.floor * top) {
      if (!xs.empty()) break;  // noise floor reached
      continue;
    }
    xs.push_back(shells[r].radius);
    ys.push_back(std::log(shells[r].value));
  }
  fit.shells = static_cast<int>(xs.size());
  if (fit.shells < 2) {
    fit.trivially_localized = true;
    fit.rate = std::numeric_limits<double>::infinity();
    fit.prefactor = top;
    fit.r2 = 1.0;
    return fit;
  }
  const double n = xs.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= n, my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  fit.rate = -slope;
  fit.prefactor = std::exp(my - slope * mx);
  fit.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

DecayFit decay_fit(const LatticeFunction& w, const DecayOptions& opts) {
  DecayFit fit = decay_fit_shells(shell_maxima(w), w.box.radius, opts);
  const LatticeBox& b = w.box;
  double top = 0.0, edge = 0.0, inner = 0.0;
  for (int s = 0; s < b.sites(); ++s) {
    const int layer = cell_inf(b.cell(s), b.dim);
    for (int x = 0; x < b.fiber_dim; ++x) {
      const double v = std::abs(w.values[s * b.fiber_dim + x]);
      top = std::max(top, v);
      if (layer == b.radius) edge = std::max(edge, v);
      if (layer == b.radius - 1) inner = std::max(inner, v);
    }
  }
  fit.boundary_polluted = b.radius > 0 && edge > opts.boundary_tol * top && edge >= inner;
  return fit;
}

WannierSet frame_to_wannier(const BlochFrame& frame, int radius, const DecayOptions& opts) {
  WannierSet ws;
  ws.kind = frame.kind;
  ws.grid = frame.grid;
  ws.box = LatticeBox{frame.grid.dim(), radius, frame.ambient};
  LatticeFunction envelope{ws.box, Vec::Zero(ws.box.size())};
  for (int a = 0; a < frame.count(); ++a) {
    ws.functions.push_back(inverse_bloch_floquet(frame.grid, frame_column(frame.vectors, a), radius));
    ws.fits.push_back(decay_fit(ws.functions.back(), opts));
    for (int i = 0; i < envelope.values.size(); ++i)
      envelope.values[i] = std::max(std::abs(envelope.values[i]), std::abs(ws.functions.back().values[i]));
  }
  ws.combined = decay_fit(envelope, opts);
  return ws;
}

double plancherel_defect(const BlochFrame& frame) {
  double worst = 0.0;
  for (int a = 0; a < frame.count(); ++a) {
    const Mat f = frame_column(frame.vectors, a);
    const Mat c = lattice_coefficients(frame.grid, f);
    const double lhs = c.squaredNorm();
    const double rhs = f.squaredNorm() / frame.grid.total();
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(rhs, 1e-300));
  }
  return worst;
}

double wannier_reconstruction_residual(const BlochFrame& frame, const ProjectionFamily& family, int samples,
                                       unsigned seed) {
  const KGrid& grid = frame.grid;
  const int n = frame.ambient;
  const int total = grid.total();
  const std::vector<Mat> w = periodic_coefficients(frame);
  std::vector<std::vector<int>> rows(total);
  for (int h = 0; h < total; ++h) rows[h] = shifted_rows(grid, h);
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Mat field(total, n);
    for (int k = 0; k < total; ++k) {
      Vec v(n);
      for (int x = 0; x < n; ++x) v[x] = cplx(nd(rng), nd(rng));
      field.row(k) = (family.p[k] * v).transpose();
    }
    const Mat psi = lattice_coefficients(grid, field);
    Mat rec = Mat::Zero(total, n);
    for (const Mat& wa : w) {
      for (int h = 0; h < total; ++h) {
        const std::vector<int>& r = rows[h];
        cplx coef = 0.0;
        for (int g = 0; g < total; ++g) coef += (wa.row(r[g]).conjugate().array() * psi.row(g).array()).sum();
        for (int g = 0; g < total; ++g) rec.row(g) += coef * wa.row(r[g]);
      }
    }
    worst = std::max(worst, (rec - psi).norm() / psi.norm());
  }
  return worst;
}

double translate_gram_defect(const BlochFrame& frame) {
  const KGrid& grid = frame.grid;
  const int total = grid.total();
  const std::vector<Mat> w = periodic_coefficients(frame);
  double worst = 0.0;
  for (int h = 0; h < total; ++h) {
    const std::vector<int> r = shifted_rows(grid, h);
    for (size_t a = 0; a < w.size(); ++a)
      for (size_t b = 0; b < w.size(); ++b) {
        cplx s = 0.0;
        for (int g = 0; g < total; ++g) s += (w[a].row(r[g]).conjugate().array() * w[b].row(g).array()).sum();
        if (h == 0 && a == b) s -= 1.0;
        worst = std::max(worst, std::abs(s));
      }
  }
  return worst;
}

RVec nonzero_eigenvalues(const Mat& h, double rel_threshold) {
  const RVec e = eig_hermitian(h).values;
  const double scale = std::max(e.cwiseAbs().maxCoeff(), 1e-300);
  std::vector<double> keep;
  for (int i = 0; i < e.size(); ++i)
    if (std::abs(e[i]) > rel_threshold * scale) keep.push_back(e[i]);
  return Eigen::Map<RVec>(keep.data(), static_cast<Eigen::Index>(keep.size()));
}

EffectiveHamiltonian effective_hamiltonian(const BlochFrame& frame, const TightBinding& model, int first,
                                           double parseval_tol) {
  if (frame.kind == FrameKind::subframe) throw InvalidInput("effective_hamiltonian: needs a basis or Parseval frame");
  if (frame.certificate.parseval > parseval_tol)
    throw NumericalFailure("effective_hamiltonian: frame is not Parseval within tolerance");
  if (model.orbitals != frame.ambient) throw InvalidInput("effective_hamiltonian: model and frame dimensions differ");
  const KGrid& grid = frame.grid;
  const int m = frame.rank;
  std::vector<RVec> occ(grid.total());
  double lowest = std::numeric_limits<double>::infinity();
  for (int f = 0; f < grid.total(); ++f) {
    occ[f] = eig_hermitian(model.fiber(grid.point(f))).values.segment(first, m);
    lowest = std::min(lowest, occ[f].minCoeff());
  }
  EffectiveHamiltonian eh;
  eh.grid = grid;
  eh.shift = std::max(0.0, 1.0 - lowest);
  const int n = frame.ambient;
  for (int f = 0; f < grid.total(); ++f) {
    const Mat& x = frame.vectors[f];
    const Mat h = model.fiber(grid.point(f)) + eh.shift * Mat::Identity(n, n);
    eh.h.push_back(x.adjoint() * h * x);
    const RVec nz = nonzero_eigenvalues(eh.h.back());
    eh.zero_modes = std::max(eh.zero_modes, static_cast<int>(eh.h.back().rows() - nz.size()));
    if (nz.size() != m) {
      eh.spectral_error = std::numeric_limits<double>::infinity();
      continue;
    }
    eh.spectral_error = std::max(eh.spectral_error, (nz.array() - eh.shift - occ[f].array()).abs().maxCoeff());
  }
  return eh;
}

std::vector<Mat> interpolate_family(const KGrid& coarse, const std::vector<Mat>& samples, const KGrid& fine) {
  if (coarse.dim() != fine.dim()) throw InvalidInput("interpolate_family: dimension mismatch");
  for (int a = 0; a < coarse.dim(); ++a)
    if (fine.size(a) % coarse.size(a) != 0) throw InvalidInput("interpolate_family: fine grid must refine the coarse one");
  if (static_cast<int>(samples.size()) != coarse.total()) throw InvalidInput("interpolate_family: sample count");
  const int rows = static_cast<int>(samples.front().rows()), cols = static_cast<int>(samples.front().cols());
  Mat field(coarse.total(), rows * cols);
  for (int f = 0; f < coarse.total(); ++f) field.row(f) = Eigen::Map<const Eigen::RowVectorXcd>(samples[f].data(), rows * cols);
  const Mat c = lattice_coefficients(coarse, field);
  // factor[a](j, i) multiplies coarse mode j at fine coordinate i along axis a
  std::vector<Mat> factor(coarse.dim());
  for (int a = 0; a < coarse.dim(); ++a) {
    const int nc = coarse.size(a), nf = fine.size(a);
    factor[a].resize(nc, nf);
    for (int j = 0; j < nc; ++j)
      for (int i = 0; i < nf; ++i) {
        const double k = static_cast<double>(i) / nf;
        if (nc % 2 == 0 && j == nc / 2)
          factor[a](j, i) = std::cos(pi * nc * k);
        else {
          const int g = j > nc / 2 ? j - nc : j;
          factor[a](j, i) = std::exp(-I * (two_pi * k * g));
        }
      }
  }
  std::vector<Mat> out(fine.total());
  for (int f = 0; f < fine.total(); ++f) {
    const Index3 i = fine.coords(f);
    Eigen::RowVectorXcd acc = Eigen::RowVectorXcd::Zero(rows * cols);
    for (int r = 0; r < coarse.total(); ++r) {
      const Index3 j = coarse.coords(r);
      cplx w = 1.0;
      for (int a = 0; a < coarse.dim(); ++a) w *= factor[a](j[a], i[a]);
      acc += w * c.row(r);
    }
    out[f] = Eigen::Map<const Mat>(acc.data(), rows, cols);
  }
  return out;
}

InterpolatedBands interpolate_bands(const EffectiveHamiltonian& coarse, const TightBinding& model, int first,
                                    int rank, const KGrid& fine) {
  InterpolatedBands ib;
  ib.fine = fine;
  const std::vector<Mat> h = interpolate_family(coarse.grid, coarse.h, fine);
  for (int f = 0; f < fine.total(); ++f) {
    const RVec e = eig_hermitian(h[f], 1e-8).values;
    // the redundant directions are the eigenvalues closest to zero
    std::vector<double> v(e.data(), e.data() + e.size());
    std::sort(v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    v.erase(v.begin(), v.begin() + (static_cast<int>(v.size()) - rank));
    std::sort(v.begin(), v.end());
    RVec b(rank);
    for (int i = 0; i < rank; ++i) b[i] = v[i] - coarse.shift;
    const RVec exact = eig_hermitian(model.fiber(fine.point(f))).values.segment(first, rank);
    ib.max_error = std::max(ib.max_error, (b - exact).cwiseAbs().maxCoeff());
    ib.bands.push_back(b);
  }
  return ib;
}

}  // namespace bloch
