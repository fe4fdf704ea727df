#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "texdistill/mesh.hpp"
#include "texdistill/texture_field.hpp"
#include "texdistill/texture_image.hpp"

namespace texdistill {

inline constexpr int kDefaultBakeResolution = 1024;
inline constexpr int kDefaultPadIterations = 8;

struct CoverageMask {
  int resolution = 0;
  std::vector<std::uint8_t> covered;  // R * R, row 0 is v = 1

  CoverageMask() = default;
  explicit CoverageMask(int r) : resolution(r), covered(static_cast<std::size_t>(r) * r, 0) {}

  bool at(int x, int y) const { return covered[static_cast<std::size_t>(y) * resolution + x] != 0; }
  std::size_t count() const;
  bool operator==(const CoverageMask&) const = default;
};

// Takes a mesh without UVs and returns the same vertices and faces (same
// order) with per-corner UVs in [0, 1].
using AtlasHook = std::function<Mesh(const Mesh&)>;

// Identity when the mesh already has UVs; otherwise runs `hook`. Throws
// std::invalid_argument if UVs are missing and no hook is set, and
// std::runtime_error if the hook output changes the geometry or leaves UVs
// outside [0, 1].
Mesh ensure_uv(const Mesh& mesh, const AtlasHook& hook = {});

// Built-in fallback atlas: every triangle gets its own cell in a square grid,
// laid out as a right triangle with `gutter_texels` of empty space around it
// at `resolution`. Charts never share a texel center.
AtlasHook triangle_packing_atlas(int resolution = kDefaultBakeResolution, int gutter_texels = 2);

// External generator: writes the mesh to <tmp>/in.obj, runs
// `<command> <tmp>/in.obj <tmp>/out.obj` and reads the UVs back.
AtlasHook subprocess_atlas(const std::string& command);

struct BakeResult {
  TextureImage texture;
  CoverageMask mask;
};

// Rasterizes each face in UV space; a texel is covered when its center lies
// inside the UV triangle (higher face index wins on overlap). Covered texels
// get the field color at the barycentric surface point, quantized to 8 bits.
// Uncovered texels are black.
BakeResult bake(const TextureField& field, const Mesh& mesh, int resolution = kDefaultBakeResolution);

// Mean-of-covered-neighbors dilation over the 8-neighborhood, repeated
// `iterations` times against the previous iteration's snapshot. Covered
// texels never change. `grown`, when given, receives the final coverage.
TextureImage edge_pad(const TextureImage& texture, const CoverageMask& mask, int iterations = kDefaultPadIterations,
                      CoverageMask* grown = nullptr);

// Writes <dir>/<stem>.obj, <stem>.mtl and <stem>.png. Returns the written paths.
std::vector<std::filesystem::path> export_textured_mesh(const Mesh& mesh, const TextureImage& texture,
                                                        const std::filesystem::path& dir,
                                                        const std::string& stem = "mesh");

}  // namespace texdistill
