#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include "ims/mesh.hpp"

namespace ims {

// Heat-method distance solver; factors the diffusion and Poisson systems
// once so repeated sources (one per landmark / curve) are cheap.
class GeodesicSolver {
public:
  explicit GeodesicSolver(const Surface& surface);

  // Distance to a vertex set; weights default to 1 per source. A polyline
  // is passed as its vertex chain with weights = half the adjacent arclength.
  Eigen::VectorXd distance(const std::vector<int>& sources,
                           const std::vector<double>& weights = {}) const;

  // Convenience: polyline source with arclength weights (closed if first == last).
  Eigen::VectorXd distanceToCurve(const std::vector<int>& chain) const;

private:
  const Surface& surface_;
  double shortTime_ = 0.0;
  SpMat cotanL_;
  Eigen::SimplicialLDLT<SpMat> heatSolver_;
  Eigen::SimplicialLDLT<SpMat> poissonSolver_;
  std::vector<size_t> adjacencyStart_;
  std::vector<std::pair<int, double>> adjacency_;
};

} // namespace ims
