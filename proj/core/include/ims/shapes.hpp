#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace ims {

// Procedural genus-zero (and a few counterexample) meshes used by the CLI
// examples, tests and benchmarks.
struct MeshData {
  Eigen::MatrixXd positions;
  Eigen::MatrixXi faces;
};

MeshData tetrahedron();
MeshData octahedron();
MeshData icosahedron();
MeshData cube();

// Loop-style 4-1 topological subdivision (no smoothing).
MeshData subdivide(const MeshData& in, int levels);

// Subdivided platonic solids projected to the unit sphere.
MeshData icosphere(int level);
MeshData octasphere(int level);
MeshData cubesphere(int level);

// Latitude/longitude sphere with pole fans; anisotropic near the poles.
MeshData uvSphere(int nLat, int nLon);

// Smooth random radial deformation r(n) = 1 + amplitude * sum_k sin(freq <d_k, n> + phase_k).
MeshData bumpySphere(const MeshData& sphere, std::uint64_t seed, double amplitude,
                     double frequency, int nBumps = 5);

MeshData ellipsoid(const MeshData& sphere, double ax, double ay, double az);

// Planar rectangle grid (has boundary).
MeshData rectangleGrid(int nx, int ny, double width, double height);

// Unit-ish disk (has boundary).
MeshData disk(int nRings, int nSectors);

MeshData annulus(int nRings, int nSectors, double rInner, double rOuter);

MeshData torus(int nU, int nV, double R, double r);

// Random tangential + radial vertex jitter; amplitude relative to mean edge length.
void jitterVertices(MeshData& mesh, std::uint64_t seed, double relativeAmplitude);

// Reverses all face windings (orientation flip).
MeshData reverseOrientation(const MeshData& in);

} // namespace ims
