#include "bloch/io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace bloch {

namespace {

constexpr char magic[4] = {'B', 'L', 'C', 'H'};
constexpr std::uint32_t version = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw InvalidInput("container: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::complex<float> to_c64(cplx z) { return {static_cast<float>(z.real()), static_cast<float>(z.imag())}; }

std::vector<std::uint32_t> grid_dims(const KGrid& g) {
  std::vector<std::uint32_t> d;
  for (int s : g.sizes()) d.push_back(static_cast<std::uint32_t>(s));
  return d;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json matrix_json(const Mat& m, bool imag) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < m.cols(); ++j) r.push_back(imag ? m(i, j).imag() : m(i, j).real());
    rows.push_back(r);
  }
  return rows;
}

Mat matrix_from_json(const json& re, const json* im, int n) {
  Mat m = Mat::Zero(n, n);
  if (!re.is_array() || static_cast<int>(re.size()) != n) throw InvalidInput("model: hopping block has the wrong shape");
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(re[i].size()) != n) throw InvalidInput("model: hopping block has the wrong shape");
    for (int j = 0; j < n; ++j) m(i, j) = cplx(re[i][j].get<double>(), im ? (*im)[i][j].get<double>() : 0.0);
  }
  return m;
}

}  // namespace

std::size_t Container::count() const {
  std::size_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return n;
}

void write_container(const std::string& path, const Container& c) {
  if (c.data.size() != c.count()) throw InvalidInput("write_container: payload size does not match dims");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidInput("write_container: cannot open " + path);
  os.write(magic, 4);
  put_u32(os, version);
  put_u32(os, static_cast<std::uint32_t>(c.dims.size()));
  put_u32(os, c.grid_axes);
  for (std::uint32_t d : c.dims) put_u32(os, d);
  for (const std::complex<float>& z : c.data) {
    put_u32(os, std::bit_cast<std::uint32_t>(z.real()));
    put_u32(os, std::bit_cast<std::uint32_t>(z.imag()));
  }
  if (!os) throw InvalidInput("write_container: write failed for " + path);
}

Container read_container(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("read_container: cannot open " + path);
  char m[4];
  if (!is.read(m, 4) || std::string(m, 4) != std::string(magic, 4)) throw InvalidInput("read_container: bad magic");
  if (get_u32(is) != version) throw InvalidInput("read_container: unsupported version");
  Container c;
  const std::uint32_t rank = get_u32(is);
  c.grid_axes = get_u32(is);
  if (c.grid_axes > rank) throw InvalidInput("read_container: grid axes exceed rank");
  for (std::uint32_t a = 0; a < rank; ++a) c.dims.push_back(get_u32(is));
  c.data.resize(c.count());
  for (std::complex<float>& z : c.data) {
    const float re = std::bit_cast<float>(get_u32(is));
    const float im = std::bit_cast<float>(get_u32(is));
    z = {re, im};
  }
  return c;
}

Container container_of(const BlochFrame& frame) {
  Container c;
  c.dims = grid_dims(frame.grid);
  c.grid_axes = static_cast<std::uint32_t>(c.dims.size());
  c.dims.push_back(static_cast<std::uint32_t>(frame.ambient));
  c.dims.push_back(static_cast<std::uint32_t>(frame.count()));
  c.data.reserve(c.count());
  for (const Mat& x : frame.vectors)
    for (int i = 0; i < x.rows(); ++i)
      for (int j = 0; j < x.cols(); ++j) c.data.push_back(to_c64(x(i, j)));
  return c;
}

Container container_of(const ProjectionFamily& family) {
  Container c;
  c.dims = grid_dims(family.grid);
  c.grid_axes = static_cast<std::uint32_t>(c.dims.size());
  c.dims.push_back(static_cast<std::uint32_t>(family.ambient));
  c.dims.push_back(static_cast<std::uint32_t>(family.ambient));
  c.data.reserve(c.count());
  for (const Mat& p : family.p)
    for (int i = 0; i < p.rows(); ++i)
      for (int j = 0; j < p.cols(); ++j) c.data.push_back(to_c64(p(i, j)));
  return c;
}

Container container_of(const std::vector<LatticeFunction>& functions) {
  if (functions.empty()) throw InvalidInput("container_of: no lattice functions");
  const LatticeBox& box = functions.front().box;
  for (const LatticeFunction& f : functions)
    if (f.box.dim != box.dim || f.box.radius != box.radius || f.box.fiber_dim != box.fiber_dim)
      throw InvalidInput("container_of: lattice functions live on different boxes");
  Container c;
  c.dims.assign(box.dim, static_cast<std::uint32_t>(box.side()));
  c.grid_axes = static_cast<std::uint32_t>(box.dim);
  c.dims.push_back(static_cast<std::uint32_t>(box.fiber_dim));
  c.dims.push_back(static_cast<std::uint32_t>(functions.size()));
  c.data.reserve(c.count());
  for (int i = 0; i < box.size(); ++i)
    for (const LatticeFunction& f : functions) c.data.push_back(to_c64(f.values[i]));
  return c;
}

Container container_of(const CovariantKernel& kernel) {
  Container c;
  const auto side = static_cast<std::uint32_t>(kernel.side());
  c.dims = {side, side, static_cast<std::uint32_t>(kernel.rows()), static_cast<std::uint32_t>(kernel.cols())};
  c.grid_axes = 2;
  c.data.reserve(c.count());
  for (int b = 0; b < kernel.blocks(); ++b) {
    const Index3 d = kernel.displacement(b);
    const auto blk = kernel.block(d[0], d[1]);
    for (int i = 0; i < kernel.rows(); ++i)
      for (int j = 0; j < kernel.cols(); ++j) c.data.push_back(to_c64(blk(i, j)));
  }
  return c;
}

std::vector<Mat> frame_vectors(const Container& c, KGrid& grid) {
  if (c.dims.size() != c.grid_axes + 2 || c.grid_axes < 1 || c.grid_axes > 3)
    throw InvalidInput("frame_vectors: container is not a frame");
  std::vector<int> sizes(c.dims.begin(), c.dims.begin() + c.grid_axes);
  grid = KGrid(sizes);
  const int n = static_cast<int>(c.dims[c.grid_axes]);
  const int m = static_cast<int>(c.dims[c.grid_axes + 1]);
  std::vector<Mat> out(grid.total(), Mat(n, m));
  std::size_t at = 0;
  for (Mat& x : out)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j, ++at) x(i, j) = cplx(c.data[at].real(), c.data[at].imag());
  return out;
}

void write_csv(const std::string& path, const Container& c) {
  std::ofstream os(path);
  if (!os) throw InvalidInput("write_csv: cannot open " + path);
  for (std::size_t a = 0; a < c.dims.size(); ++a) os << "i" << a << ",";
  os << "re,im\n";
  os << std::setprecision(9);
  std::vector<std::uint32_t> idx(c.dims.size(), 0);
  for (const std::complex<float>& z : c.data) {
    for (std::uint32_t i : idx) os << i << ",";
    os << z.real() << "," << z.imag() << "\n";
    for (int a = static_cast<int>(idx.size()) - 1; a >= 0; --a) {
      if (++idx[a] < c.dims[a]) break;
      idx[a] = 0;
    }
  }
}

void write_bands_csv(const std::string& path, const KGrid& grid, const std::vector<RVec>& energies) {
  std::ofstream os(path);
  if (!os) throw InvalidInput("write_bands_csv: cannot open " + path);
  for (int a = 0; a < grid.dim(); ++a) os << "k" << a + 1 << ",";
  const int m = energies.empty() ? 0 : static_cast<int>(energies.front().size());
  for (int b = 0; b < m; ++b) os << "E" << b + 1 << (b + 1 < m ? "," : "\n");
  os << std::setprecision(15);
  for (int f = 0; f < grid.total(); ++f) {
    const auto k = grid.point(f);
    for (int a = 0; a < grid.dim(); ++a) os << k[a] << ",";
    for (int b = 0; b < m; ++b) os << energies[f][b] << (b + 1 < m ? "," : "\n");
  }
}

json sidecar(const ProjectionFamily& family, bool twisted) {
  return {{"rank", family.rank}, {"ambient_dim", family.ambient}, {"twist", twisted}, {"grid", family.grid.sizes()}};
}

json sidecar(const BlochFrame& frame) {
  return {{"rank", frame.rank},
          {"ambient_dim", frame.ambient},
          {"twist", false},
          {"grid", frame.grid.sizes()},
          {"kind", to_string(frame.kind)},
          {"vectors", frame.count()}};
}

json to_json(const DecayFit& fit) {
  return {{"rate", finite_or_null(fit.rate)},
          {"prefactor", finite_or_null(fit.prefactor)},
          {"r2", finite_or_null(fit.r2)},
          {"shells", fit.shells},
          {"trivially_localized", fit.trivially_localized},
          {"boundary_polluted", fit.boundary_polluted},
          {"localized", fit.localized()}};
}

json to_json(const FrameCertificate& cert) {
  json chern = json::object();
  for (const auto& [ij, c] : cert.chern) chern[ij] = c;
  return {{"chern", chern},
          {"degrees", cert.degrees},
          {"discarded_degrees", cert.discarded_degrees},
          {"defects",
           {{"orthonormality", cert.orthonormality},
            {"parseval", cert.parseval},
            {"range", cert.range},
            {"matching", cert.matching}}},
          {"smoothness", cert.smoothness},
          {"min_gap", cert.min_gap},
          {"perturbation", cert.perturbation},
          {"routes", cert.routes}};
}

json to_json(const MagneticCertificate& c) {
  json seeds = json::array();
  for (const DecayFit& f : c.seed_decay) seeds.push_back(to_json(f));
  return {{"rank", c.rank},
          {"chern", {{"12", c.chern}}},
          {"epsilon", c.epsilon},
          {"supercell_phase_flag", c.supercell_phase_flag},
          {"contour", {{"nodes", c.contour_nodes}, {"convergence", c.contour_convergence}}},
          {"hypotheses",
           {{"overlap_defect", c.overlap_defect},
            {"nenciu_delta", c.nenciu_delta},
            {"kato_nagy_distance", c.kato_nagy_distance},
            {"hold", c.hypotheses_hold()}}},
          {"defects",
           {{"intertwining", c.intertwining},
            {"intertwining_interior", c.intertwining_interior},
            {"frame_interior", c.frame_defect_interior},
            {"orthogonality", c.orthogonality},
            {"frame", c.frame_defect},
            {"reconstruction", c.reconstruction},
            {"covariance", c.covariance},
            {"periodic_deviation", c.periodic_deviation}}},
          {"kato_nagy_decay", to_json(c.kato_nagy_decay)},
          {"seed_decay", seeds},
          {"admissible", c.hypotheses_hold()}};
}

json to_json(const EffectiveHamiltonian& eh) {
  return {{"grid", eh.grid.sizes()},
          {"shift", eh.shift},
          {"spectral_error", eh.spectral_error},
          {"zero_modes", eh.zero_modes}};
}

TightBinding ModelFile::tight_binding() const {
  TightBinding tb;
  tb.dim = dim;
  tb.orbitals = orbitals;
  for (const auto& [g, t] : hoppings) tb.add(g, t);
  return tb;
}

HoppingModel ModelFile::hopping_model() const {
  if (dim != 2) throw InvalidInput("model: magnetic models live on Z^2");
  HoppingModel m;
  m.sites = sites;
  if (m.sites.empty()) m.sites.assign(orbitals, {0.0, 0.0});
  if (static_cast<int>(m.sites.size()) != orbitals) throw InvalidInput("model: one site per orbital is required");
  m.hoppings = hoppings;
  return m;
}

ModelFile ModelFile::from(const TightBinding& tb) {
  ModelFile m;
  m.dim = tb.dim;
  m.orbitals = tb.orbitals;
  m.hoppings = tb.hoppings;
  return m;
}

ModelFile ModelFile::from(const HoppingModel& hm) {
  ModelFile m;
  m.dim = 2;
  m.orbitals = hm.orbitals();
  m.sites = hm.sites;
  m.hoppings = hm.hoppings;
  return m;
}

json to_json(const ModelFile& m) {
  json hops = json::array();
  for (const auto& [g, t] : m.hoppings) {
    json d = json::array();
    for (int a = 0; a < m.dim; ++a) d.push_back(g[a]);
    hops.push_back({{"displacement", d}, {"re", matrix_json(t, false)}, {"im", matrix_json(t, true)}});
  }
  json sites = json::array();
  for (const auto& y : m.sites) sites.push_back({y[0], y[1]});
  json j = {{"dim", m.dim},     {"orbitals", m.orbitals},   {"sites", sites},
            {"hoppings", hops}, {"p", m.p},                 {"q", m.q},
            {"epsilon", m.epsilon}, {"box_radius", m.box_radius}};
  if (m.window) j["window"] = {m.window->first, m.window->second};
  return j;
}

ModelFile model_from_json(const json& j) {
  ModelFile m;
  try {
    m.dim = j.value("dim", 2);
    if (m.dim < 1 || m.dim > 3) throw InvalidInput("model: dim must be 1, 2 or 3");
    if (j.contains("sites"))
      for (const auto& y : j.at("sites")) m.sites.push_back({y.at(0).get<double>(), y.at(1).get<double>()});
    m.orbitals = j.value("orbitals", m.sites.empty() ? 1 : static_cast<int>(m.sites.size()));
    for (const auto& h : j.at("hoppings")) {
      const json& d = h.at("displacement");
      if (static_cast<int>(d.size()) != m.dim) throw InvalidInput("model: displacement length differs from dim");
      Index3 g{0, 0, 0};
      for (int a = 0; a < m.dim; ++a) g[a] = d[a].get<int>();
      const json* im = h.contains("im") ? &h.at("im") : nullptr;
      const Mat t = matrix_from_json(h.at("re"), im, m.orbitals);
      auto [it, fresh] = m.hoppings.emplace(g, t);
      if (!fresh) it->second += t;
    }
    m.p = j.value("p", 0);
    m.q = j.value("q", 1);
    m.epsilon = j.value("epsilon", 0.0);
    m.box_radius = j.value("box_radius", 40);
    if (j.contains("window")) m.window = std::make_pair(j.at("window").at(0).get<double>(), j.at("window").at(1).get<double>());
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("model: ") + e.what());
  }
  if (m.q < 1 || m.p < 0) throw InvalidInput("model: flux p/q needs q >= 1 and p >= 0");
  return m;
}

ModelFile read_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidInput("read_model: cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw InvalidInput("read_model: " + std::string(e.what()));
  }
  return model_from_json(j);
}

void write_json(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw InvalidInput("write_json: cannot open " + path);
  os << std::setw(2) << j << "\n";
}

}  // namespace bloch
