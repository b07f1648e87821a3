#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ims/extract.hpp"
#include "ims/multires.hpp"
#include "ims/solve.hpp"

namespace ims {

struct RunConfig {
  std::string meshAPath, meshBPath;
  std::string landmarksPath, curvesPath;
  std::string initMapAbPath, initMapBaPath;  // IMSMAP files; psi falls back to NN if absent
  std::string connectionKind = "default";    // default | vectorfield | spin
  std::vector<double> schedule{100.0};
  double sigmaA = 1.0, sigmaB = 1.0;
  std::uint64_t seed = 0;
  bool useIdt = true;
  bool randomInit = false;
  std::string outDir = "ims_out";
  std::string coarseAPath, coarseBPath;
  int threads = 0;
  int anchorFace = 0;
  double gradTol = 1e-5;
  int maxIterations = 1000;
  double eigTol = 1e-8;
  int eigMaxIterations = 2000;
  bool writePotential = false;
  bool writeOverlay = true;
};

// One side of the computation: the surface as loaded (reporting target),
// after boundary filling, and after intrinsic Delaunay preprocessing (what
// the solver actually runs on). Input vertex indices survive both steps.
struct PreparedSurface {
  Surface original;
  Surface solve;
  int inputVertices = 0;
  int inputFaces = 0;  // original faces come first in the filled mesh
  int flips = 0;
  std::vector<std::vector<int>> boundaryCurves;
  bool connectivityChanged() const { return flips > 0; }
};

PreparedSurface prepareSurface(const std::string& path, bool useIdt);

// (solve face, barycentric) -> input-connectivity record via chordal blend +
// closest point; exact pass-through when no flips happened.
MapRecord reportOnInput(const PreparedSurface& prepared, const FaceBvh& inputBvh, int solveFace,
                        const Eigen::Vector3d& bary);

Connection buildConnectionOfKind(const Surface& s, const std::string& kind, int anchorFace);

struct SolveStats {
  double lambda0 = 0.0;
  int flipsA = 0, flipsB = 0;
  double multiZeroPctAB = 0.0, multiZeroPctBA = 0.0;
  bool minimizerConverged = false;
  double finalEnergy = 0.0;
  double graphArea = 0.0;
  bool sandwichHolds = false;
  std::vector<double> landmarkErrors;  // geodesic distance image -> target
  double wallSeconds = 0.0;
};

SolveStats runSolve(const RunConfig& config);
void runExtract(const RunConfig& config, const std::string& sectionPath);
// prints one line per check; returns the number of failures
int runCheck(const RunConfig& config);

} // namespace ims
