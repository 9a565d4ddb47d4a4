/// File formats: a binary container for sampled fields, CSV tables, model files and JSON certificates.
///
/// Container layout (all integers uint32 little-endian):
///   "BLCH" | version | rank | grid_axes | dims[rank] | payload
/// The payload holds prod(dims) complex64 values (float32 real, float32 imaginary, little-endian),
/// row-major over dims. The first `grid_axes` dims are k-grid (or lattice) axes and come outermost.
#pragma once

#include "bloch/framesyn.hpp"
#include "bloch/magframes.hpp"

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace bloch {

using json = nlohmann::json;

struct Container {
  std::vector<std::uint32_t> dims;
  std::uint32_t grid_axes = 0;
  std::vector<std::complex<float>> data;

  std::size_t count() const;
};

void write_container(const std::string& path, const Container& c);
Container read_container(const std::string& path);

/// dims = [N_0, .., N_{d-1}, ambient, M]
Container container_of(const BlochFrame& frame);
/// dims = [N_0, .., N_{d-1}, n, n]
Container container_of(const ProjectionFamily& family);
/// dims = [side, .., side, fiber, count]; every function must live on the same box.
Container container_of(const std::vector<LatticeFunction>& functions);
/// dims = [side, side, rows, cols] over displacements -R..R.
Container container_of(const CovariantKernel& kernel);

/// Frame vectors back from a container written by container_of(BlochFrame).
std::vector<Mat> frame_vectors(const Container& c, KGrid& grid);

/// One row per entry: the index along every axis, then re, im.
void write_csv(const std::string& path, const Container& c);
/// Rows k_1..k_d, E_1..E_M.
void write_bands_csv(const std::string& path, const KGrid& grid, const std::vector<RVec>& energies);

/// rank, ambient_dim and twist presence of a family or frame payload.
json sidecar(const ProjectionFamily& family, bool twisted = false);
json sidecar(const BlochFrame& frame);

json to_json(const DecayFit& fit);
json to_json(const FrameCertificate& cert);
json to_json(const MagneticCertificate& cert);
json to_json(const EffectiveHamiltonian& eh);

/// Periodic model with optional magnetic data. Hopping blocks are keyed by displacement; `sites`
/// are orbital positions in the unit cell (zero when absent).
struct ModelFile {
  int dim = 2;
  int orbitals = 1;
  std::vector<std::array<double, 2>> sites;
  std::map<Index3, Mat> hoppings;
  int p = 0, q = 1;
  double epsilon = 0.0;
  int box_radius = 40;
  std::optional<std::pair<double, double>> window;

  TightBinding tight_binding() const;
  HoppingModel hopping_model() const;  // requires dim = 2
  static ModelFile from(const TightBinding& tb);
  static ModelFile from(const HoppingModel& m);
};

json to_json(const ModelFile& m);
ModelFile model_from_json(const json& j);
ModelFile read_model(const std::string& path);
void write_json(const std::string& path, const json& j);

}  // namespace bloch
