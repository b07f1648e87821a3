#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ims/mesh.hpp"

namespace ims {

struct Connection;  // bundle.hpp

// --- Wavefront OBJ (v/f records; vt/vn ignored on input) ---
// Unreferenced vertices are dropped and indices remapped densely.
std::pair<Eigen::MatrixXd, Eigen::MatrixXi> loadObj(const std::string& path);
void writeObj(const std::string& path, const TriangleMesh& mesh,
              const Eigen::MatrixX2d* uv = nullptr);

// --- landmark file: one `<vertexIndexA> <vertexIndexB>` pair per line (0-based) ---
std::vector<std::pair<int, int>> loadLandmarks(const std::string& path, int nA, int nB);

// --- curve file: `curveA: i0 i1 ... ; curveB: j0 j1 ...` per line ---
struct CurvePair {
  std::vector<int> curveA, curveB;
};
std::vector<CurvePair> loadCurves(const std::string& path, int nA, int nB);

// --- map file: `IMSMAP v1 |V_src| |V_tgt|`, then `v faceIdx b0 b1 b2 multiZeroFlag` ---
struct MapRecord {
  int face = -1;
  Eigen::Vector3d barycentric = Eigen::Vector3d::Zero();
  bool multiZero = false;
};
void writeMapFile(const std::string& path, const std::vector<MapRecord>& records, int nTarget);
std::vector<MapRecord> loadMapFile(const std::string& path, int* nSource = nullptr,
                                   int* nTarget = nullptr);

// --- overlay file: `eA_idx eB_idx s t` per crossing ---
struct OverlayCrossing {
  int edgeA = -1, edgeB = -1;
  double s = 0.0, t = 0.0;
};
void writeOverlayFile(const std::string& path, const std::vector<OverlayCrossing>& crossings);

// --- section file: ASCII header `IMSZ1 rows cols\n` + row-major float64 (re,im) pairs ---
void writeSectionFile(const std::string& path, const Eigen::MatrixXcd& Z);
Eigen::MatrixXcd loadSectionFile(const std::string& path);

// --- potential dump: ASCII header `IMSV1 rows cols\n` + row-major float64 ---
void writePotentialFile(const std::string& path, const Eigen::MatrixXd& V);
Eigen::MatrixXd loadPotentialFile(const std::string& path);

// --- connection dump: `e i j Re(r) Im(r)` lines then `f i j k Omega` lines ---
void writeConnectionFile(const std::string& path, const TriangleMesh& mesh, const Connection& conn);
Connection loadConnectionFile(const std::string& path, const TriangleMesh& mesh);

} // namespace ims
