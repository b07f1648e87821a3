#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Sparse>

#include "ims/errors.hpp"

namespace ims {

using SpMat = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<std::complex<double>>;
using Complex = std::complex<double>;

// Index-based halfedge triangle mesh. Halfedge h = 3*f + c runs from
// faces(f,c) to faces(f,(c+1)%3); faces are counterclockwise with respect to
// the outward normal. Edge lengths are stored explicitly so the mesh can
// carry an intrinsic metric that differs from the embedding (after intrinsic
// Delaunay flips the connectivity may be a multigraph; all queries go through
// halfedge/edge indices, never vertex-pair lookups).
struct TriangleMesh {
  Eigen::MatrixXd positions;  // V x 3
  Eigen::MatrixXi faces;      // F x 3

  std::vector<int> twin;              // per halfedge; -1 on boundary
  std::vector<int> halfedgeEdge;      // per halfedge -> edge index
  std::vector<signed char> halfedgeSign;  // +1 if halfedge realizes the canonical orientation
  Eigen::MatrixXi edgeVertices;       // E x 2, canonical (tail, head)
  std::vector<int> edgeHalfedge;      // canonical representative halfedge
  Eigen::VectorXd edgeLengths;        // E
  std::vector<std::vector<int>> boundaryLoops;  // ordered vertex cycles

  int nVertices() const { return static_cast<int>(positions.rows()); }
  int nFaces() const { return static_cast<int>(faces.rows()); }
  int nEdges() const { return static_cast<int>(edgeVertices.rows()); }
  int nHalfedges() const { return 3 * nFaces(); }
  int eulerCharacteristic() const { return nVertices() - nEdges() + nFaces(); }
  bool closed() const { return boundaryLoops.empty(); }

  static int faceOf(int h) { return h / 3; }
  static int cornerOf(int h) { return h % 3; }
  static int next(int h) { return 3 * (h / 3) + (h % 3 + 1) % 3; }
  static int prev(int h) { return 3 * (h / 3) + (h % 3 + 2) % 3; }
  int halfedge(int f, int c) const { return 3 * f + c; }
  int tail(int h) const { return faces(h / 3, h % 3); }
  int head(int h) const { return faces(h / 3, (h % 3 + 1) % 3); }
  double halfedgeLength(int h) const { return edgeLengths[halfedgeEdge[h]]; }

  double totalArea() const;
  Eigen::Vector3d areaCentroid() const;
  Eigen::Vector3d facePoint(int f, const Eigen::Vector3d& bary) const;
  Eigen::Vector3d faceNormal(int f) const;
};

// Intrinsic quantities derived from connectivity and edge lengths only.
struct IntrinsicGeometry {
  Eigen::VectorXd cornerAngles;        // 3F; angle at vertex faces(f,c)
  Eigen::VectorXd vertexAngleSums;     // V
  Eigen::VectorXd cornerScaledAngles;  // 3F; rescaled so interior sums are 2*pi
  Eigen::VectorXd halfedgeAngles;      // 3F; direction of h in the rescaled tangent plane of tail(h)
  Eigen::VectorXcd halfedgeDirs;       // exp(i * halfedgeAngles)
  Eigen::VectorXd faceAreas;           // F
  Eigen::VectorXd vertexDualAreas;     // V, barycentric lumping
  SpMat d1;                            // F x E signed incidence
  Eigen::VectorXd star1;               // E, cotan weights clamped positive
  double totalArea = 0.0;
};

struct Surface {
  TriangleMesh mesh;
  IntrinsicGeometry geom;
};

// Vertex-to-face map with barycentric coordinates (the initializer input).
struct InputMap {
  std::vector<int> targetFace;          // per source vertex
  Eigen::MatrixX3d barycentric;         // per source vertex; defaults to centroid
};

// --- construction ---

// Builds connectivity from positions+faces and validates: triangular faces,
// consistent orientation, manifold edges and vertex fans, edge-connectedness.
// Edge lengths are taken from the embedding.
TriangleMesh buildMesh(const Eigen::MatrixXd& positions, const Eigen::MatrixXi& faces);

IntrinsicGeometry buildGeometry(const TriangleMesh& mesh);

inline Surface makeSurface(TriangleMesh mesh) {
  Surface s;
  s.mesh = std::move(mesh);
  s.geom = buildGeometry(s.mesh);
  return s;
}

// --- operations ---

// Loads an OBJ, translates the area centroid to the origin, scales to unit
// surface area and verifies the mesh is genus zero once boundary loops are
// capped. Throws FormatError / StructuralError / TopologyError.
Surface loadAndNormalize(const std::string& path);

// Centers and rescales in place to total area 1.
void normalizeToUnitArea(TriangleMesh& mesh);

// Checks chi + #boundaryLoops == 2; throws TopologyError naming chi otherwise.
void requireGenusZero(const TriangleMesh& mesh);

struct FillResult {
  Surface surface;
  std::vector<int> filledFaces;                 // new face indices
  std::vector<std::vector<int>> boundaryCurves; // original boundary cycles
};

// Caps every boundary loop with a triangle fan around a new vertex at the
// loop centroid. Returns the original cycles for curve pinning.
FillResult fillBoundaries(const Surface& surface);

struct DelaunayResult {
  Surface surface;
  int flips = 0;
};

// Flips interior edges until the local Delaunay condition holds (sum of the
// two opposite angles <= pi + 1e-12). The vertex set is unchanged; lengths
// follow the intrinsic flip formula. Reporting back on the input mesh goes
// through chordal blends + closest-point projection (see extract/pipeline).
DelaunayResult intrinsicDelaunay(const Surface& surface);

// Heat-method geodesic distance from a set of source vertices (points or
// polyline chains). Diffusion time = (mean edge length)^2. Distances are
// clamped nonnegative and exactly zero on the sources. Optional weights act
// as integrated source densities (used for polyline sources).
Eigen::VectorXd geodesicDistance(const Surface& surface, const std::vector<int>& sourceVertices,
                                 const std::vector<double>& weights = {});

} // namespace ims
