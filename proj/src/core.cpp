#include "bloch/core.hpp"

#include <algorithm>

namespace bloch {

KGrid::KGrid(std::vector<int> sizes) {
  if (sizes.empty() || sizes.size() > 3) throw InvalidInput("grid dimension must be 1, 2 or 3");
  dim_ = static_cast<int>(sizes.size());
  total_ = 1;
  for (int a = 0; a < dim_; ++a) {
    if (sizes[a] < 1) throw InvalidInput("grid sizes must be positive");
    n_[a] = sizes[a];
    total_ *= sizes[a];
  }
}

int KGrid::flat(const Index3& i) const {
  int f = 0;
  for (int a = 0; a < dim_; ++a) {
    int c = i[a] % n_[a];
    if (c < 0) c += n_[a];
    f = f * n_[a] + c;
  }
  return f;
}

Index3 KGrid::coords(int flat) const {
  Index3 c{0, 0, 0};
  for (int a = dim_ - 1; a >= 0; --a) {
    c[a] = flat % n_[a];
    flat /= n_[a];
  }
  return c;
}

std::array<double, 3> KGrid::point(int flat) const {
  const Index3 c = coords(flat);
  std::array<double, 3> k{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) k[a] = static_cast<double>(c[a]) / n_[a];
  return k;
}

int KGrid::shift(int flat_index, int axis, int step) const {
  Index3 c = coords(flat_index);
  c[axis] += step;
  return flat(c);
}

KGrid KGrid::drop_axis(int axis) const {
  std::vector<int> s;
  for (int a = 0; a < dim_; ++a)
    if (a != axis) s.push_back(n_[a]);
  if (s.empty()) s.push_back(1);
  KGrid g(s);
  if (dim_ == 1) g.dim_ = 0;
  return g;
}

int KGrid::join(int axis, int j, int transverse_index) const {
  Index3 c{0, 0, 0};
  int t = transverse_index;
  for (int a = dim_ - 1; a >= 0; --a) {
    if (a == axis) continue;
    c[a] = t % n_[a];
    t /= n_[a];
  }
  c[axis] = j;
  return flat(c);
}

int KGrid::transverse(int flat_index, int axis) const {
  const Index3 c = coords(flat_index);
  int t = 0;
  for (int a = 0; a < dim_; ++a) {
    if (a == axis) continue;
    t = t * n_[a] + c[a];
  }
  return t;
}

int LatticeBox::sites() const {
  int s = 1;
  for (int a = 0; a < dim; ++a) s *= side();
  return s;
}

bool LatticeBox::contains(const Index3& g) const {
  for (int a = 0; a < dim; ++a)
    if (std::abs(g[a]) > radius) return false;
  return true;
}

int LatticeBox::site(const Index3& g) const {
  int s = 0;
  for (int a = 0; a < dim; ++a) s = s * side() + (g[a] + radius);
  return s;
}

Index3 LatticeBox::cell(int s) const {
  Index3 g{0, 0, 0};
  for (int a = dim - 1; a >= 0; --a) {
    g[a] = s % side() - radius;
    s /= side();
  }
  return g;
}

cplx LatticeFunction::at(const Index3& g, int x) const {
  if (!box.contains(g)) return {0.0, 0.0};
  return values[box.site(g) * box.fiber_dim + x];
}

double op_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

Mat polar_unitary(const Mat& x) {
  Eigen::JacobiSVD<Mat> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

double unitarity_defect(const Mat& u) {
  return op_norm(u.adjoint() * u - Mat::Identity(u.cols(), u.cols()));
}

double wrap_angle(double a) {
  double r = std::remainder(a, two_pi);
  if (r <= -pi) r += two_pi;
  return r;
}

}  // namespace bloch
