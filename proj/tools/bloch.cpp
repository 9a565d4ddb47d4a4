// bloch: command-line front end for frame construction, band scans and magnetic perturbations.

#include "bloch/io.hpp"
#include "bloch/wannier.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <sstream>

using namespace bloch;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

int to_int(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw InvalidInput("bad integer in " + what + ": '" + s + "'");
  return v;
}

double to_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw InvalidInput("bad number in " + what + ": '" + s + "'");
  return v;
}

KGrid parse_grid(const std::string& s, int dim) {
  const std::vector<std::string> parts = split(s, ',');
  if (parts.empty() || parts.size() > 3) throw InvalidInput("--grid expects N[,N[,N]]");
  std::vector<int> n;
  for (const std::string& p : parts) n.push_back(to_int(p, "--grid"));
  if (n.size() == 1) n.assign(dim, n[0]);
  if (static_cast<int>(n.size()) != dim)
    throw InvalidInput("--grid has " + std::to_string(n.size()) + " sizes for a " + std::to_string(dim) + "d model");
  return KGrid(n);
}

std::pair<int, int> parse_flux(const std::string& s) {
  const std::vector<std::string> parts = split(s, '/');
  if (parts.size() != 2) throw InvalidInput("--flux expects p/q");
  const int p = to_int(parts[0], "--flux"), q = to_int(parts[1], "--flux");
  if (q < 1 || p < 0 || p >= q || std::gcd(p, q) != 1) throw InvalidInput("--flux needs coprime 0 <= p < q");
  return {p, q};
}

std::pair<double, double> parse_window(const std::string& s) {
  const std::vector<std::string> parts = split(s, ',');
  if (parts.size() != 2) throw InvalidInput("--window expects lo,hi");
  const double lo = to_double(parts[0], "--window"), hi = to_double(parts[1], "--window");
  if (!(lo < hi)) throw InvalidInput("--window needs lo < hi");
  return {lo, hi};
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create " + dir + ": " + ec.message());
}

std::string in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// Band selection shared by the torus commands: explicit bands, a window, the model's window or
// the lowest band.
struct Selection {
  std::string bands;
  std::string window;

  void add(CLI::App* app) {
    app->add_option("--bands", bands, "first,count (0-based)");
    app->add_option("--window", window, "energy window lo,hi");
  }

  ProjectionFamily family(const ModelFile& m, const TightBinding& tb, const KGrid& g, int& first) const {
    if (!bands.empty()) {
      const std::vector<std::string> parts = split(bands, ',');
      if (parts.size() != 2) throw InvalidInput("--bands expects first,count");
      first = to_int(parts[0], "--bands");
      return band_projection(tb, g, first, to_int(parts[1], "--bands"));
    }
    std::optional<std::pair<double, double>> w = m.window;
    if (!window.empty()) w = parse_window(window);
    if (!w) {
      first = 0;
      return band_projection(tb, g, 0, 1);
    }
    ProjectionFamily fam = window_projection(tb, g, w->first, w->second);
    // the window selects a contiguous block; its first index comes from the lowest sample
    const RVec e0 = band_energies(tb, KGrid(std::vector<int>(g.dim(), 1)))[0];
    first = 0;
    while (first < e0.size() && e0[first] < w->first) ++first;
    return fam;
  }
};

BlochFrame build_frame(const std::string& mode, const ProjectionFamily& fam) {
  if (mode == "basis") return construct_bloch_basis(fam);
  if (mode == "subframe") return construct_subframe(fam);
  if (mode == "parseval") return construct_parseval_frame(fam);
  throw InvalidInput("unknown mode " + mode);
}

ModelFile preset(const std::string& name, const std::vector<double>& a) {
  auto need = [&](std::size_t n) {
    if (a.size() != n)
      throw InvalidInput("preset " + name + " takes " + std::to_string(n) + " parameters, got " +
                         std::to_string(a.size()));
  };
  if (name == "two_band") return need(1), ModelFile::from(models::two_band(a[0]));
  if (name == "coupled_pair") return need(3), ModelFile::from(models::coupled_pair(a[0], a[1], a[2]));
  if (name == "layered") return need(2), ModelFile::from(models::layered(a[0], a[1]));
  if (name == "layered_pair") return need(4), ModelFile::from(models::layered_pair(a[0], a[1], a[2], a[3]));
  if (name == "chain") return need(2), ModelFile::from(models::chain(a[0], a[1]));
  if (name == "chain3") return need(2), ModelFile::from(models::chain3(a[0], a[1]));
  if (name == "square") {
    if (a.size() > 1) throw InvalidInput("preset square takes at most 1 parameter");
    return ModelFile::from(HoppingModel::square(a.empty() ? 1.0 : a[0]));
  }
  throw InvalidInput("unknown preset " + name);
}

json bands_summary(const BandScan& s) {
  auto pairs = [](const std::vector<std::pair<double, double>>& v) {
    json a = json::array();
    for (const auto& [lo, hi] : v) a.push_back({lo, hi});
    return a;
  };
  return {{"ranges", pairs(s.ranges)}, {"islands", pairs(s.islands)}, {"gaps", pairs(s.gaps)}};
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bloch frames, Wannier functions and magnetic perturbations"};
  app.require_subcommand(1);

  // model build
  CLI::App* model = app.add_subcommand("model", "model files")->require_subcommand(1);
  CLI::App* build = model->add_subcommand("build", "write a preset model");
  std::string preset_name, out;
  std::vector<double> params;
  std::string flux, window;
  double eps = 0.0;
  int box = 40;
  build->add_option("--preset", preset_name, "two_band|coupled_pair|layered|layered_pair|chain|chain3|square")
      ->required();
  build->add_option("--params", params, "preset parameters")->delimiter(',');
  build->add_option("--flux", flux, "p/q");
  build->add_option("--eps", eps, "magnetic perturbation");
  build->add_option("--box", box, "lattice box radius");
  build->add_option("--window", window, "energy window lo,hi");
  build->add_option("--out", out, "model JSON")->required();

  // frame construct
  CLI::App* frame = app.add_subcommand("frame", "Bloch frames")->require_subcommand(1);
  CLI::App* construct = frame->add_subcommand("construct", "build a frame on a k-grid");
  std::string mode = "parseval", model_path, grid;
  bool csv = false;
  Selection fsel;
  construct->add_option("--mode", mode)->check(CLI::IsMember({"basis", "subframe", "parseval"}));
  construct->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  construct->add_option("--grid", grid, "N[,N[,N]]")->required();
  construct->add_option("--out", out)->required();
  construct->add_flag("--csv", csv, "also write frame.csv");
  fsel.add(construct);

  // bands scan / interpolate
  CLI::App* bands = app.add_subcommand("bands", "band structure")->require_subcommand(1);
  CLI::App* scan = bands->add_subcommand("scan", "bands of the supercell fiber");
  std::string scan_grid = "32";
  scan->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  scan->add_option("--flux", flux, "p/q (default: from the model)");
  scan->add_option("--eps", eps, "perturbation folded into the fiber");
  scan->add_option("--grid", scan_grid, "N[,N[,N]]");
  scan->add_option("--out", out)->required();

  CLI::App* interp = bands->add_subcommand("interpolate", "bands from a coarse frame");
  int coarse = 16, fine = 128;
  std::string imode = "parseval";
  Selection isel;
  interp->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  interp->add_option("--mode", imode)->check(CLI::IsMember({"basis", "subframe", "parseval"}));
  interp->add_option("--coarse", coarse)->required()->check(CLI::PositiveNumber);
  interp->add_option("--fine", fine)->required()->check(CLI::PositiveNumber);
  interp->add_option("--out", out)->required();
  isel.add(interp);

  // butterfly
  CLI::App* fly = app.add_subcommand("butterfly", "flux versus energy");
  int q_max = 12, fly_grid = 8;
  std::string fly_model;
  fly->add_option("--q-max", q_max)->required()->check(CLI::PositiveNumber);
  fly->add_option("--model", fly_model, "model JSON (default: square lattice)")->check(CLI::ExistingFile);
  fly->add_option("--grid", fly_grid, "k-grid per axis")->check(CLI::PositiveNumber);
  fly->add_option("--out", out, "CSV path")->required();

  // magnetic perturb
  CLI::App* mag = app.add_subcommand("magnetic", "perturbed magnetic lattices")->require_subcommand(1);
  CLI::App* perturb = mag->add_subcommand("perturb", "frame for an isolated island at small perturbation");
  std::string mmode = "parseval";
  MagneticOptions mopts;
  bool scaled = false, have_eps = false;
  perturb->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  perturb->add_option("--flux", flux, "p/q (default: from the model)");
  perturb->add_option("--eps", eps)->each([&](const std::string&) { have_eps = true; });
  perturb->add_option("--window", window, "lo,hi (default: from the model)");
  perturb->add_option("--mode", mmode)->check(CLI::IsMember({"basis", "parseval"}));
  perturb->add_option("--box", mopts.box_radius, "box radius")->check(CLI::PositiveNumber);
  perturb->add_option("--grid", mopts.grid, "seed k-grid");
  perturb->add_option("--nodes", mopts.contour_nodes, "contour nodes per segment");
  perturb->add_option("--half-height", mopts.half_height, "contour half height");
  perturb->add_flag("--scaled-phase", scaled, "use q eps as the reduced phase");
  perturb->add_option("--out", out)->required();

  // wannier emit
  CLI::App* wan = app.add_subcommand("wannier", "Wannier functions")->require_subcommand(1);
  CLI::App* emit = wan->add_subcommand("emit", "lattice functions of a frame");
  int radius = 8;
  std::string wmode = "parseval";
  Selection wsel;
  emit->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  emit->add_option("--mode", wmode)->check(CLI::IsMember({"basis", "subframe", "parseval"}));
  emit->add_option("--grid", grid, "N[,N[,N]]")->required();
  emit->add_option("--radius", radius, "box radius")->check(CLI::NonNegativeNumber);
  emit->add_option("--out", out)->required();
  emit->add_flag("--csv", csv, "also write wannier.csv");
  wsel.add(emit);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) {
      ModelFile m = preset(preset_name, params);
      if (!flux.empty()) std::tie(m.p, m.q) = parse_flux(flux);
      m.epsilon = eps;
      m.box_radius = box;
      if (!window.empty()) m.window = parse_window(window);
      write_json(out, to_json(m));
    } else if (*construct) {
      const ModelFile m = read_model(model_path);
      const TightBinding tb = m.tight_binding();
      int first = 0;
      const ProjectionFamily fam = fsel.family(m, tb, parse_grid(grid, m.dim), first);
      const BlochFrame fr = build_frame(mode, fam);
      ensure_dir(out);
      const Container c = container_of(fr);
      write_container(in(out, "frame.bin"), c);
      if (csv) write_csv(in(out, "frame.csv"), c);
      write_json(in(out, "frame.json"), sidecar(fr));
      write_json(in(out, "certificate.json"), to_json(fr.certificate));
      print(to_json(fr.certificate));
    } else if (*scan) {
      const ModelFile m = read_model(model_path);
      int p = m.p, q = m.q;
      if (!flux.empty()) std::tie(p, q) = parse_flux(flux);
      const double e = scan->count("--eps") ? eps : m.epsilon;
      TightBinding fiber;
      if (m.dim == 2 && (q > 1 || p > 0 || e != 0.0)) {
        fiber = supercell_reduce(m.hopping_model(), p, q, e).fiber;
      } else {
        fiber = m.tight_binding();
      }
      const BandScan s = fiber_bands(fiber, parse_grid(scan_grid, fiber.dim));
      ensure_dir(out);
      write_bands_csv(in(out, "bands.csv"), s.grid, s.energies);
      const json j = bands_summary(s);
      write_json(in(out, "bands.json"), j);
      print(j);
    } else if (*interp) {
      const ModelFile m = read_model(model_path);
      const TightBinding tb = m.tight_binding();
      if (fine % coarse != 0) throw InvalidInput("--fine must be a multiple of --coarse");
      int first = 0;
      const ProjectionFamily fam = isel.family(m, tb, KGrid::cube(m.dim, coarse), first);
      const BlochFrame fr = build_frame(imode, fam);
      const EffectiveHamiltonian eh = effective_hamiltonian(fr, tb, first);
      const InterpolatedBands ib = interpolate_bands(eh, tb, first, fam.rank, KGrid::cube(m.dim, fine));
      ensure_dir(out);
      write_bands_csv(in(out, "bands.csv"), ib.fine, ib.bands);
      json j = to_json(eh);
      j["max_error"] = ib.max_error;
      j["coarse"] = coarse;
      j["fine"] = fine;
      write_json(in(out, "interpolation.json"), j);
      print(j);
    } else if (*fly) {
      const HoppingModel hm = fly_model.empty() ? HoppingModel::square() : read_model(fly_model).hopping_model();
      const std::vector<ButterflyPoint> pts = butterfly(hm, q_max, fly_grid);
      std::FILE* f = std::fopen(out.c_str(), "w");
      if (!f) throw InvalidInput("cannot write " + out);
      std::fprintf(f, "p,q,flux,energy\n");
      for (const ButterflyPoint& b : pts)
        std::fprintf(f, "%d,%d,%.17g,%.17g\n", b.p, b.q, static_cast<double>(b.p) / b.q, b.energy);
      std::fclose(f);
      std::cout << pts.size() << " points\n";
    } else if (*perturb) {
      const ModelFile m = read_model(model_path);
      int p = m.p, q = m.q;
      if (!flux.empty()) std::tie(p, q) = parse_flux(flux);
      const std::optional<std::pair<double, double>> w = window.empty() ? m.window : parse_window(window);
      if (!w) throw InvalidInput("magnetic perturb needs --window or a model window");
      mopts.lo = w->first;
      mopts.hi = w->second;
      if (!perturb->count("--box")) mopts.box_radius = m.box_radius;
      mopts.mode = mmode == "basis" ? FrameKind::basis : FrameKind::parseval;
      const MagneticFrame mf = magnetic_perturb(m.hopping_model(), p, q, have_eps ? eps : m.epsilon, mopts, scaled);
      ensure_dir(out);
      write_container(in(out, "seeds.bin"), container_of(mf.seeds));
      write_container(in(out, "projection.bin"), container_of(mf.projection));
      json j = to_json(mf.certificate);
      j["orthonormal_seeds"] = mf.orthonormal;
      j["seed_count"] = mf.seeds.cols();
      j["mode"] = mmode;
      write_json(in(out, "certificate.json"), j);
      print(j);
    } else if (*emit) {
      const ModelFile m = read_model(model_path);
      const TightBinding tb = m.tight_binding();
      int first = 0;
      const ProjectionFamily fam = wsel.family(m, tb, parse_grid(grid, m.dim), first);
      const BlochFrame fr = build_frame(wmode, fam);
      const WannierSet ws = frame_to_wannier(fr, radius);
      ensure_dir(out);
      const Container c = container_of(ws.functions);
      write_container(in(out, "wannier.bin"), c);
      if (csv) write_csv(in(out, "wannier.csv"), c);
      json fits = json::array();
      for (const DecayFit& f : ws.fits) fits.push_back(to_json(f));
      json j = {{"kind", to_string(fr.kind)},
                {"radius", radius},
                {"fits", fits},
                {"plancherel", plancherel_defect(fr)},
                {"reconstruction", wannier_reconstruction_residual(fr, fam)},
                {"certificate", to_json(fr.certificate)}};
      write_json(in(out, "wannier.json"), j);
      print(j);
    }
  } catch (const TopologicalObstruction& e) {
    json inv = e.invariants();
    std::cerr << "obstruction: " << e.what() << " invariants " << inv.dump() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
