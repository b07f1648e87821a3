#pragma once

#include <vector>

#include <Eigen/Core>

#include "ims/mesh.hpp"

namespace ims {

struct ClosestPointResult {
  int face = -1;
  Eigen::Vector3d barycentric = Eigen::Vector3d::Zero();
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  double distance2 = 0.0;
};

// Axis-aligned BVH over mesh triangles for closest-point queries.
// Ties on distance are broken toward the lowest face index.
class FaceBvh {
public:
  FaceBvh() = default;
  explicit FaceBvh(const TriangleMesh& mesh);

  ClosestPointResult closestPoint(const Eigen::Vector3d& query) const;

private:
  struct Node {
    Eigen::Vector3d lo, hi;
    int left = -1, right = -1;  // children; leaf iff left < 0
    int begin = 0, end = 0;     // leaf range into order_
  };

  const TriangleMesh* mesh_ = nullptr;
  std::vector<Node> nodes_;
  std::vector<int> order_;

  int build(std::vector<int>& faces, int begin, int end,
            const std::vector<Eigen::Vector3d>& centroids);
};

// Exact closest point on a single triangle.
ClosestPointResult closestPointOnTriangle(const TriangleMesh& mesh, int face,
                                          const Eigen::Vector3d& query);

// Global closest point (BVH-accelerated), ties toward lowest face index.
ClosestPointResult closestPoint(const TriangleMesh& mesh, const Eigen::Vector3d& query);

// Nearest-neighbor vertex-to-face maps in both directions. The caller is
// responsible for rigid pre-alignment; loadAndNormalize already applies
// centroid translation and unit-area scaling.
std::pair<InputMap, InputMap> nearestNeighborMaps(const TriangleMesh& meshA,
                                                  const TriangleMesh& meshB);

} // namespace ims
