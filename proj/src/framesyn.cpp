#include "bloch/framesyn.hpp"

#include <algorithm>
#include <random>

namespace bloch {

namespace {

Mat identity(int m) { return Mat::Identity(m, m); }

// Hermitian K with ||K|| = 1 commuting with every twist matrix.
Mat commuting_generator(int m, const std::vector<Mat>& twist, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  Mat k(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) k(i, j) = cplx(nd(rng), nd(rng));
  k = 0.5 * (k + k.adjoint());
  if (!twist.empty()) {
    const int mm = m * m;
    Mat a(static_cast<long>(twist.size()) * mm, mm);
    const Mat one = identity(m);
    for (size_t t = 0; t < twist.size(); ++t) {
      // vec(T X - X T) = (1 (x) T - T^T (x) 1) vec(X), column-major vec
      Mat blk(mm, mm);
      for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) blk.block(p * m, q * m, m, m) = one(p, q) * twist[t] - twist[t](q, p) * one;
      a.middleRows(static_cast<long>(t) * mm, mm) = blk;
    }
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
    const RVec& sv = svd.singularValues();
    const double cut = 1e-9 * std::max(1.0, sv(0));
    int null_dim = 0;
    for (int i = 0; i < mm; ++i)
      if (i >= sv.size() || sv(i) <= cut) ++null_dim;
    if (m > 1 && null_dim <= 1)
      throw NumericalFailure("nondegenerate_approximation: twist commutant contains only scalars");
    const Mat basis = svd.matrixV().rightCols(null_dim);
    Vec v(mm);
    for (int q = 0; q < m; ++q) v.segment(q * m, m) = k.col(q);
    const Vec proj = basis * (basis.adjoint() * v);
    for (int q = 0; q < m; ++q) k.col(q) = proj.segment(q * m, m);
    k = 0.5 * (k + k.adjoint());
  }
  const double n = op_norm(k);
  if (n < 1e-12) throw NumericalFailure("nondegenerate_approximation: degenerate generator");
  return k / n;
}

double family_min_gap(const UnitaryFamily& a) {
  double g = 2.0;
  for (const Mat& u : a.u) g = std::min(g, min_eigen_gap(u));
  return g;
}

// Assign the eigenphases of u to branches continuing `prev` (unwrapped), preserving cyclic order.
RVec continue_branches(const RVec& prev, const Mat& u) {
  const int m = static_cast<int>(prev.size());
  const RVec ph = unitary_eigen(u).phases;
  if (m == 1) {
    RVec out(1);
    out[0] = prev[0] + wrap_angle(ph[0] - prev[0]);
    return out;
  }
  double best = 1e300, second = 1e300;
  int best_shift = 0;
  for (int s = 0; s < m; ++s) {
    double cost = 0.0;
    for (int b = 0; b < m; ++b) cost = std::max(cost, std::abs(wrap_angle(ph[(b + s) % m] - prev[b])));
    if (cost < best) {
      second = best;
      best = cost;
      best_shift = s;
    } else if (cost < second) {
      second = cost;
    }
  }
  if (!(best < 0.5 * second))
    throw NumericalFailure("track_eigenphases: ambiguous branch matching, refine the grid");
  RVec out(m);
  for (int b = 0; b < m; ++b) out[b] = prev[b] + wrap_angle(ph[(b + best_shift) % m] - prev[b]);
  return out;
}

void check_closure(const RVec& start, const RVec& end) {
  for (int b = 0; b < start.size(); ++b)
    if (std::abs(end[b] - start[b]) > 1e-6)
      throw NumericalFailure("track_eigenphases: eigenphase branch has non-zero winding");
}

Mat diag_det(const Mat& a) {
  Mat d = identity(static_cast<int>(a.rows()));
  d(0, 0) = a.determinant();
  d(0, 0) /= std::abs(d(0, 0));
  return d;
}

}  // namespace

NondegenerateApproximation nondegenerate_approximation(const UnitaryFamily& alpha, double gap_tol, unsigned seed) {
  NondegenerateApproximation out{alpha, 0.0, family_min_gap(alpha), 0.0};
  if (out.min_gap >= gap_tol) return out;
  const int m = alpha.order();
  const Mat k = commuting_generator(m, alpha.twist, seed);
  for (double eps = 1e-3; eps < pi; eps *= 2.0) {
    const Mat e = expm_hermitian(k, eps);
    const double dist = op_norm(e - identity(m));
    if (dist >= 2.0) break;
    UnitaryFamily cand = alpha;
    for (Mat& u : cand.u) u = u * e;
    const double g = family_min_gap(cand);
    if (g >= gap_tol) return {cand, eps, g, dist};
  }
  throw NumericalFailure("nondegenerate_approximation: no admissible perturbation found");
}

EigenphaseBranches track_eigenphases(const UnitaryFamily& alpha) {
  const KGrid& g = alpha.grid;
  const int m = alpha.order();
  EigenphaseBranches br{g, std::vector<RVec>(g.total()), 2.0, std::vector<double>(m, two_pi)};
  if (g.dim() > 2) throw InvalidInput("track_eigenphases: families of dimension above 2 are not supported");
  const int n0 = g.size(0);
  const int n1 = g.dim() == 2 ? g.size(1) : 1;
  br.phases[0] = unitary_eigen(alpha.u[0]).phases;
  // axis 0 at axis-1 index 0, closing the loop through the twist
  for (int i = 1; i <= n0; ++i) {
    const RVec next = continue_branches(br.phases[g.flat({i - 1, 0, 0})], alpha.at({i, 0, 0}));
    if (i < n0)
      br.phases[g.flat({i, 0, 0})] = next;
    else
      check_closure(br.phases[0], next);
  }
  if (g.dim() == 2) {
    for (int i = 0; i < n0; ++i) {
      for (int j = 1; j <= n1; ++j) {
        const RVec next = continue_branches(br.phases[g.flat({i, j - 1, 0})], alpha.u[g.flat({i, j, 0})]);
        if (j < n1)
          br.phases[g.flat({i, j, 0})] = next;
        else
          check_closure(br.phases[g.flat({i, 0, 0})], next);
      }
    }
    for (int j = 1; j < n1; ++j)
      for (int i = 0; i < n0; ++i) {
        const RVec next = continue_branches(br.phases[g.flat({i, j, 0})], alpha.at({i + 1, j, 0}));
        check_closure(br.phases[g.flat({i + 1, j, 0})], next);
      }
  }
  for (int f = 0; f < g.total(); ++f) {
    const RVec& ph = br.phases[f];
    for (int b = 0; b < m; ++b) {
      const double next = (b + 1 < m) ? ph[b + 1] : ph[0] + two_pi;
      const double gap = next - ph[b];
      br.ccw_gap[b] = std::min(br.ccw_gap[b], gap);
      if (m > 1) br.min_gap = std::min(br.min_gap, 2.0 * std::sin(0.5 * gap));
    }
  }
  return br;
}

namespace {

// tr log u follows arg det u between neighbours; an eigenphase crossing the cut shifts it by 2 pi.
bool log_is_continuous(const UnitaryFamily& alpha, const std::vector<Mat>& logs) {
  const KGrid& g = alpha.grid;
  for (int f = 0; f < g.total(); ++f)
    for (int a = 0; a < g.dim(); ++a) {
      const int n = g.shift(f, a, 1);
      const double step = logs[n].trace().real() - logs[f].trace().real();
      const double det_step = wrap_angle(std::arg(alpha.u[n].determinant() / alpha.u[f].determinant()));
      if (std::abs(step - det_step) > 1.0) return false;
    }
  return true;
}

}  // namespace

TwoStepLog two_step_log(const UnitaryFamily& alpha, const TwoStepOptions& opts) {
  const KGrid& g = alpha.grid;
  const int m = alpha.order();
  TwoStepLog out;
  out.grid = g;
  out.twist = alpha.twist;
  for (int a = 0; a < g.dim(); ++a) out.degrees.push_back(winding_degree(alpha, a));
  for (int d : out.degrees)
    if (d != 0) throw TopologicalObstruction("two_step_log: det alpha has non-zero degree", out.degrees);
  out.h1.assign(g.total(), Mat::Zero(m, m));
  out.h2.assign(g.total(), Mat::Zero(m, m));

  double dev = 0.0;
  for (const Mat& u : alpha.u) dev = std::max(dev, (u - identity(m)).cwiseAbs().maxCoeff());
  if (dev < 1e-13) {
    out.route = LogRoute::trivial;
    return out;
  }

  if (!opts.force_moving_line) {
    std::vector<double> all;
    for (const Mat& u : alpha.u) {
      const RVec ph = unitary_eigen(u).phases;
      all.insert(all.end(), ph.data(), ph.data() + ph.size());
    }
    std::sort(all.begin(), all.end());
    double widest = 0.0, theta = 0.0;
    for (size_t i = 0; i < all.size(); ++i) {
      const double next = (i + 1 < all.size()) ? all[i + 1] : all[0] + two_pi;
      if (next - all[i] > widest) {
        widest = next - all[i];
        theta = all[i] + 0.5 * widest;
      }
    }
    const double c = wrap_angle(theta + pi);
    if (0.5 * widest >= opts.fixed_line_clearance) {
      for (int f = 0; f < g.total(); ++f)
        out.h2[f] = cayley_log(std::exp(-I * c) * alpha.u[f]) + c * identity(m);
      out.route = LogRoute::fixed_line;
      out.min_gap = min_eigen_gap(alpha.u[0]);
      for (int f = 0; f < g.total(); ++f)
        out.residual = std::max(out.residual, op_norm(expm_hermitian(out.h2[f]) - alpha.u[f]));
      // a branch may cross the cut between samples: the pooled gap then hides a jump of the log
      out.continuous = log_is_continuous(alpha, out.h2);
      if (out.continuous) return out;
    }
  }

  // h2 varies like 1 / gap near the cut while h1 stays smooth, so take the widest gap on offer.
  struct Candidate {
    double gap, eps, distance;
    Mat step;
  };
  std::vector<Candidate> cands;
  if (const double g0 = family_min_gap(alpha); g0 >= opts.gap_tol) cands.push_back({g0, 0.0, 0.0, identity(m)});
  for (int s = 0; s < opts.generator_seeds; ++s) {
    const Mat k = commuting_generator(m, alpha.twist, opts.seed + static_cast<unsigned>(s));
    for (double eps = 1e-3; eps < pi; eps *= std::pow(2.0, 0.25)) {
      const Mat e = expm_hermitian(k, eps);
      const double dist = op_norm(e - identity(m));
      if (dist >= opts.max_distance) break;
      UnitaryFamily cand = alpha;
      for (Mat& u : cand.u) u = u * e;
      const double gap = family_min_gap(cand);
      if (gap >= opts.gap_tol) cands.push_back({gap, eps, dist, e});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.gap > b.gap; });
  NondegenerateApproximation na;
  EigenphaseBranches br;
  bool found = false;
  for (const Candidate& c : cands) {
    UnitaryFamily fam = alpha;
    for (Mat& u : fam.u) u = u * c.step;
    try {
      br = track_eigenphases(fam);
    } catch (const NumericalFailure&) {
      continue;
    }
    na = {std::move(fam), c.eps, c.gap, c.distance};
    found = true;
    break;
  }
  if (!found) {
    // exact on the samples; only the smoothness of the frame suffers
    if (out.route == LogRoute::fixed_line) return out;
    throw NumericalFailure("two_step_log: eigenphase branches cannot be followed on this grid");
  }
  out.continuous = true;
  out.residual = 0.0;
  const UnitaryFamily& ap = na.family;
  out.perturbation = na.epsilon;
  out.min_gap = br.min_gap;
  const int c = static_cast<int>(std::max_element(br.ccw_gap.begin(), br.ccw_gap.end()) - br.ccw_gap.begin());
  const double offset = (m > 1 ? br.min_gap : 2.0) / 100.0;
  const double shift = two_pi * std::round((br.phases[0][c] + offset + pi) / two_pi);
  for (int f = 0; f < g.total(); ++f) {
    out.h1[f] = -cayley_log(ap.u[f] * alpha.u[f].adjoint());
    const double line = br.phases[f][c] + offset + pi - shift;  // rho + pi
    out.h2[f] = cayley_log(std::exp(-I * line) * ap.u[f]) + line * identity(m);
  }
  out.route = LogRoute::moving_line;
  for (int f = 0; f < g.total(); ++f)
    out.residual =
        std::max(out.residual, op_norm(expm_hermitian(out.h1[f]) * expm_hermitian(out.h2[f]) - alpha.u[f]));
  return out;
}

BetaInterpolant::BetaInterpolant(const UnitaryFamily& alpha0, const UnitaryFamily& alpha1, const TwoStepOptions& opts)
    : alpha0_(alpha0), alpha1_(alpha1) {
  if (!(alpha0.grid == alpha1.grid) || alpha0.order() != alpha1.order())
    throw InvalidInput("beta_interpolant: families do not match");
  std::vector<int> d0, d1;
  for (int a = 0; a < alpha0.grid.dim(); ++a) {
    d0.push_back(winding_degree(alpha0, a));
    d1.push_back(winding_degree(alpha1, a));
  }
  if (d0 != d1) {
    std::vector<int> both = d0;
    both.insert(both.end(), d1.begin(), d1.end());
    throw TopologicalObstruction("beta_interpolant: degrees of det alpha0 and det alpha1 differ", both);
  }
  UnitaryFamily prime = alpha1;
  for (size_t f = 0; f < prime.u.size(); ++f) prime.u[f] = alpha1.u[f].adjoint() * alpha0.u[f];
  log_ = two_step_log(prime, opts);
  e1_.resize(prime.u.size());
  e2_.resize(prime.u.size());
  for (size_t f = 0; f < prime.u.size(); ++f) {
    Eigen::SelfAdjointEigenSolver<Mat> s1(0.5 * (log_.h1[f] + log_.h1[f].adjoint()));
    Eigen::SelfAdjointEigenSolver<Mat> s2(0.5 * (log_.h2[f] + log_.h2[f].adjoint()));
    e1_[f] = {s1.eigenvalues(), s1.eigenvectors()};
    e2_[f] = {s2.eigenvalues(), s2.eigenvectors()};
  }
}

namespace {

// Smooth step with every derivative zero at both ends, so the seam at t = 1 carries no kink.
double flat_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

}  // namespace

Mat BetaInterpolant::closed(double t, int tr) const {
  const double s = flat_step(t);
  auto ex = [s](const EigenDecomposition& e) {
    Vec d(e.values.size());
    for (int i = 0; i < d.size(); ++i) d[i] = std::exp(I * (s * e.values[i]));
    return Mat(e.vectors * d.asDiagonal() * e.vectors.adjoint());
  };
  return ex(e1_[tr]) * ex(e2_[tr]);
}

Mat BetaInterpolant::at(double t, int tr) const {
  const double n = std::floor(t);
  Mat b = closed(t - n, tr);
  const Mat& a0 = alpha0_.u[tr];
  const Mat& a1 = alpha1_.u[tr];
  for (int i = 0; i < static_cast<int>(n); ++i) b = a1.adjoint() * b * a0;
  for (int i = 0; i < static_cast<int>(-n); ++i) b = a1 * b * a0.adjoint();
  return b;
}

double BetaInterpolant::matching_residual() const {
  double r = 0.0;
  for (size_t f = 0; f < alpha1_.u.size(); ++f)
    r = std::max(r, op_norm(alpha1_.u[f] - alpha0_.u[f] * closed(1.0, static_cast<int>(f)).adjoint()));
  return r;
}

std::string to_string(FrameKind k) {
  switch (k) {
    case FrameKind::basis: return "basis";
    case FrameKind::subframe: return "subframe";
    case FrameKind::parseval: return "parseval";
  }
  return "unknown";
}

std::map<std::string, int> chern_numbers(const ProjectionFamily& family) {
  std::map<std::string, int> c;
  const int d = family.grid.dim();
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) c[std::to_string(i + 1) + std::to_string(j + 1)] = chern_number(family, i, j);
  return c;
}

ProjectionFamily conjugate_reflection(const ProjectionFamily& family) {
  ProjectionFamily q = family;
  const KGrid& g = family.grid;
  for (int f = 0; f < g.total(); ++f) {
    Index3 c = g.coords(f);
    for (int a = 0; a < g.dim(); ++a) c[a] = -c[a];
    q.p[f] = family.p[g.flat(c)].conjugate();
  }
  return q;
}

ProjectionFamily doubled_family(const ProjectionFamily& family, Doubling doubling) {
  const ProjectionFamily q = conjugate_reflection(family);
  const int n = family.ambient;
  ProjectionFamily d{family.grid, 2 * n, 2 * family.rank, std::vector<Mat>(family.p.size())};
  for (size_t f = 0; f < family.p.size(); ++f) {
    Mat p = Mat::Zero(2 * n, 2 * n);
    const bool first = doubling == Doubling::conjugate_second;
    p.topLeftCorner(n, n) = first ? family.p[f] : q.p[f];
    p.bottomRightCorner(n, n) = first ? q.p[f] : family.p[f];
    d.p[f] = p;
  }
  return d;
}

namespace {

std::string route_name(LogRoute r) {
  switch (r) {
    case LogRoute::trivial: return "trivial";
    case LogRoute::fixed_line: return "fixed_line";
    case LogRoute::moving_line: return "moving_line";
  }
  return "unknown";
}

struct Built {
  std::vector<Mat> xi;          // n x m per grid point
  std::vector<Mat> axis0_twist; // xi(k0 + 1, k') = xi(k0, k') twist(k'); empty when periodic
};

// Log of the holonomy restricted to Ran P(0), cut through the widest gap of its spectrum.
Mat holonomy_log(const Mat& a) {
  const UnitarySpectrum sp = unitary_eigen(a);
  const int m = static_cast<int>(sp.phases.size());
  double widest = 0.0, theta = 0.0;
  for (int i = 0; i < m; ++i) {
    const double next = (i + 1 < m) ? sp.phases[i + 1] : sp.phases[0] + two_pi;
    if (next - sp.phases[i] > widest) {
      widest = next - sp.phases[i];
      theta = sp.phases[i] + 0.5 * widest;
    }
  }
  const double c = wrap_angle(theta + pi);
  return cayley_log(std::exp(-I * c) * a) + c * identity(m);
}

Built build(const ProjectionFamily& f, bool reduced, const FrameOptions& opts, FrameCertificate& cert) {
  const KGrid& g = f.grid;
  const int n0 = g.size(0);
  const TransportLines lines = parallel_transport(f, 0);
  Built out;
  out.xi.resize(g.total());
  if (g.dim() == 1) {
    const Mat xi0 = f.range_basis(0);
    const Mat a = xi0.adjoint() * lines.holonomy(0) * xi0;
    const Mat mlog = holonomy_log(a);
    for (int j = 0; j < n0; ++j)
      out.xi[j] = lines.at(0, j) * xi0 * expm_hermitian(mlog, -static_cast<double>(j) / n0);
    cert.matching = std::max(cert.matching, op_norm(lines.holonomy(0) * xi0 * expm_hermitian(mlog, -1.0) - xi0));
    return out;
  }
  const Built face = build(f.face(0), reduced, opts, cert);
  std::vector<Mat> tau;
  for (const Mat& t : face.axis0_twist) tau.push_back(t.adjoint());
  const UnitaryFamily alpha = obstruction_matrix(lines, face.xi, tau);
  const int m = alpha.order();
  UnitaryFamily alpha0 = alpha;
  for (Mat& u : alpha0.u) u = identity(m);
  if (reduced) {
    for (size_t t = 0; t < alpha.u.size(); ++t) alpha0.u[t] = diag_det(alpha.u[t]);
    for (int a = 0; a < alpha0.grid.dim(); ++a) cert.discarded_degrees.push_back(winding_degree(alpha0, a));
  }
  const BetaInterpolant beta(alpha0, alpha, opts.log);
  const TwoStepLog& lg = beta.log();
  for (int d : lg.degrees) cert.degrees.push_back(d);
  cert.routes.push_back(route_name(lg.route) + (lg.continuous ? "" : ":discontinuous"));
  cert.min_gap = std::min(cert.min_gap, lg.min_gap);
  cert.perturbation = std::max(cert.perturbation, lg.perturbation);
  const int count = lines.lines();
  for (int t = 0; t < count; ++t) {
    for (int j = 0; j < n0; ++j)
      out.xi[g.join(0, j, t)] = lines.at(t, j) * face.xi[t] * beta.at(static_cast<double>(j) / n0, t);
    const Mat closed = lines.holonomy(t) * face.xi[t] * expm_hermitian(lg.h1[t]) * expm_hermitian(lg.h2[t]);
    cert.matching = std::max(cert.matching, op_norm(closed - face.xi[t] * alpha0.u[t]));
  }
  if (reduced) out.axis0_twist = alpha0.u;
  return out;
}

void require_chern_zero(const std::map<std::string, int>& c) {
  std::vector<int> v;
  bool bad = false;
  for (const auto& [k, x] : c) {
    v.push_back(x);
    bad = bad || x != 0;
  }
  if (bad) throw TopologicalObstruction("construct_bloch_basis: non-zero Chern number", v);
}

}  // namespace

void certify_frame(BlochFrame& frame, const ProjectionFamily& family) {
  FrameCertificate& c = frame.certificate;
  const KGrid& g = frame.grid;
  const int n = family.ambient;
  c.orthonormality = c.parseval = c.range = c.smoothness = 0.0;
  for (int f = 0; f < g.total(); ++f) {
    const Mat& x = frame.vectors[f];
    const Mat& p = family.p[f];
    c.range = std::max(c.range, op_norm((Mat::Identity(n, n) - p) * x));
    if (frame.kind != FrameKind::parseval)
      c.orthonormality = std::max(c.orthonormality, op_norm(x.adjoint() * x - identity(static_cast<int>(x.cols()))));
    if (frame.kind != FrameKind::subframe) c.parseval = std::max(c.parseval, op_norm(x * x.adjoint() - p));
    for (int a = 0; a < g.dim(); ++a)
      c.smoothness = std::max(c.smoothness, g.size(a) * op_norm(frame.vectors[g.shift(f, a, 1)] - x));
  }
}

BlochFrame construct_bloch_basis(const ProjectionFamily& family, const FrameOptions& opts) {
  BlochFrame fr{family.grid, FrameKind::basis, family.ambient, family.rank, {}, {}};
  if (family.grid.dim() >= 2) {
    fr.certificate.chern = chern_numbers(family);
    require_chern_zero(fr.certificate.chern);
  }
  fr.vectors = build(family, false, opts, fr.certificate).xi;
  certify_frame(fr, family);
  return fr;
}

namespace {

BlochFrame reduced_frame(const ProjectionFamily& family, const FrameOptions& opts) {
  BlochFrame fr{family.grid, FrameKind::subframe, family.ambient, family.rank, {}, {}};
  if (family.grid.dim() >= 2) fr.certificate.chern = chern_numbers(family);
  const Built b = build(family, true, opts, fr.certificate);
  fr.vectors.resize(b.xi.size());
  for (size_t f = 0; f < b.xi.size(); ++f) fr.vectors[f] = b.xi[f].rightCols(family.rank - 1);
  certify_frame(fr, family);
  return fr;
}

}  // namespace

BlochFrame construct_subframe(const ProjectionFamily& family, const FrameOptions& opts) {
  if (family.grid.dim() < 2) throw InvalidInput("construct_subframe: needs d = 2 or 3");
  return reduced_frame(family, opts);
}

BlochFrame construct_parseval_frame(const ProjectionFamily& family, const FrameOptions& opts) {
  const KGrid& g = family.grid;
  const int n = family.ambient;
  const int m = family.rank;
  BlochFrame fr{g, FrameKind::parseval, n, m, {}, {}};
  std::vector<Mat> sub(g.total(), Mat(n, 0));
  ProjectionFamily rest = family;
  if (m > 1) {
    const BlochFrame s = reduced_frame(family, opts);
    fr.certificate = s.certificate;
    sub = s.vectors;
    for (int f = 0; f < g.total(); ++f) {
      Mat p = family.p[f] - sub[f] * sub[f].adjoint();
      rest.p[f] = 0.5 * (p + p.adjoint());
    }
    rest.rank = 1;
  } else if (g.dim() >= 2) {
    fr.certificate.chern = chern_numbers(family);
  }
  const ProjectionFamily dbl = doubled_family(rest, opts.doubling);
  const BlochFrame db = construct_bloch_basis(dbl, opts);
  for (const std::string& r : db.certificate.routes) fr.certificate.routes.push_back(r);
  for (int d : db.certificate.degrees) fr.certificate.degrees.push_back(d);
  fr.certificate.matching = std::max(fr.certificate.matching, db.certificate.matching);
  fr.certificate.min_gap = std::min(fr.certificate.min_gap, db.certificate.min_gap);
  fr.certificate.perturbation = std::max(fr.certificate.perturbation, db.certificate.perturbation);
  for (const auto& [k, c] : db.certificate.chern) fr.certificate.chern["doubled_" + k] = c;
  fr.vectors.resize(g.total());
  const bool top = opts.doubling == Doubling::conjugate_second;
  for (int f = 0; f < g.total(); ++f) {
    Mat x(n, sub[f].cols() + 2);
    x.leftCols(sub[f].cols()) = sub[f];
    x.rightCols(2) = top ? db.vectors[f].topRows(n) : db.vectors[f].bottomRows(n);
    fr.vectors[f] = x;
  }
  certify_frame(fr, family);
  return fr;
}

}  // namespace bloch
