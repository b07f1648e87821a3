#include "ims/spatial.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "ims/parallel.hpp"

namespace ims {

ClosestPointResult closestPointOnTriangle(const TriangleMesh& mesh, int face,
                                          const Eigen::Vector3d& p) {
  Eigen::Vector3d a = mesh.positions.row(mesh.faces(face, 0));
  Eigen::Vector3d b = mesh.positions.row(mesh.faces(face, 1));
  Eigen::Vector3d c = mesh.positions.row(mesh.faces(face, 2));

  ClosestPointResult res;
  res.face = face;

  Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) {
    res.point = a;
    res.barycentric = {1, 0, 0};
  } else {
    Eigen::Vector3d bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) {
      res.point = b;
      res.barycentric = {0, 1, 0};
    } else {
      double vc = d1 * d4 - d3 * d2;
      if (vc <= 0 && d1 >= 0 && d3 <= 0) {
        double v = d1 / (d1 - d3);
        res.point = a + v * ab;
        res.barycentric = {1 - v, v, 0};
      } else {
        Eigen::Vector3d cp = p - c;
        double d5 = ab.dot(cp), d6 = ac.dot(cp);
        if (d6 >= 0 && d5 <= d6) {
          res.point = c;
          res.barycentric = {0, 0, 1};
        } else {
          double vb = d5 * d2 - d1 * d6;
          if (vb <= 0 && d2 >= 0 && d6 <= 0) {
            double w = d2 / (d2 - d6);
            res.point = a + w * ac;
            res.barycentric = {1 - w, 0, w};
          } else {
            double va = d3 * d6 - d5 * d4;
            if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
              double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
              res.point = b + w * (c - b);
              res.barycentric = {0, 1 - w, w};
            } else {
              double denom = 1.0 / (va + vb + vc);
              double v = vb * denom, w = vc * denom;
              res.point = a + ab * v + ac * w;
              res.barycentric = {1 - v - w, v, w};
            }
          }
        }
      }
    }
  }
  res.distance2 = (p - res.point).squaredNorm();
  return res;
}

FaceBvh::FaceBvh(const TriangleMesh& mesh) : mesh_(&mesh) {
  int nF = mesh.nFaces();
  std::vector<Eigen::Vector3d> centroids(nF);
  for (int f = 0; f < nF; ++f) {
    centroids[f] = (mesh.positions.row(mesh.faces(f, 0)) + mesh.positions.row(mesh.faces(f, 1)) +
                    mesh.positions.row(mesh.faces(f, 2))) /
                   3.0;
  }
  order_.resize(nF);
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * nF);
  build(order_, 0, nF, centroids);
}

int FaceBvh::build(std::vector<int>& faces, int begin, int end,
                   const std::vector<Eigen::Vector3d>& centroids) {
  Node node;
  node.lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  for (int i = begin; i < end; ++i) {
    int f = faces[i];
    for (int c = 0; c < 3; ++c) {
      Eigen::Vector3d p = mesh_->positions.row(mesh_->faces(f, c));
      node.lo = node.lo.cwiseMin(p);
      node.hi = node.hi.cwiseMax(p);
    }
  }
  int idx = static_cast<int>(nodes_.size());
  nodes_.push_back(node);

  const int leafSize = 8;
  if (end - begin <= leafSize) {
    // visit leaves in face-index order to make distance ties deterministic
    std::sort(faces.begin() + begin, faces.begin() + end);
    nodes_[idx].begin = begin;
    nodes_[idx].end = end;
    return idx;
  }

  Eigen::Vector3d clo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d chi = -clo;
  for (int i = begin; i < end; ++i) {
    clo = clo.cwiseMin(centroids[faces[i]]);
    chi = chi.cwiseMax(centroids[faces[i]]);
  }
  int axis;
  (chi - clo).maxCoeff(&axis);
  int mid = (begin + end) / 2;
  std::nth_element(faces.begin() + begin, faces.begin() + mid, faces.begin() + end,
                   [&](int a, int b) {
                     double ca = centroids[a][axis], cb = centroids[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  int left = build(faces, begin, mid, centroids);
  int right = build(faces, mid, end, centroids);
  nodes_[idx].left = left;
  nodes_[idx].right = right;
  return idx;
}

namespace {
double boxDistance2(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                    const Eigen::Vector3d& p) {
  double d2 = 0.0;
  for (int k = 0; k < 3; ++k) {
    double d = std::max({lo[k] - p[k], 0.0, p[k] - hi[k]});
    d2 += d * d;
  }
  return d2;
}
} // namespace

ClosestPointResult FaceBvh::closestPoint(const Eigen::Vector3d& query) const {
  ClosestPointResult best;
  best.distance2 = std::numeric_limits<double>::infinity();
  best.face = std::numeric_limits<int>::max();

  std::vector<int> stack{0};
  stack.reserve(64);
  while (!stack.empty()) {
    int ni = stack.back();
    stack.pop_back();
    const Node& node = nodes_[ni];
    if (boxDistance2(node.lo, node.hi, query) > best.distance2) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        ClosestPointResult r = closestPointOnTriangle(*mesh_, order_[i], query);
        if (r.distance2 < best.distance2 ||
            (r.distance2 == best.distance2 && r.face < best.face))
          best = r;
      }
    } else {
      double dl = boxDistance2(nodes_[node.left].lo, nodes_[node.left].hi, query);
      double dr = boxDistance2(nodes_[node.right].lo, nodes_[node.right].hi, query);
      // push the farther child first so the nearer one is handled next
      if (dl <= dr) {
        stack.push_back(node.right);
        stack.push_back(node.left);
      } else {
        stack.push_back(node.left);
        stack.push_back(node.right);
      }
    }
  }
  return best;
}

ClosestPointResult closestPoint(const TriangleMesh& mesh, const Eigen::Vector3d& query) {
  FaceBvh bvh(mesh);
  return bvh.closestPoint(query);
}

std::pair<InputMap, InputMap> nearestNeighborMaps(const TriangleMesh& meshA,
                                                  const TriangleMesh& meshB) {
  FaceBvh bvhA(meshA), bvhB(meshB);
  InputMap phi, psi;
  phi.targetFace.resize(meshA.nVertices());
  phi.barycentric.resize(meshA.nVertices(), 3);
  psi.targetFace.resize(meshB.nVertices());
  psi.barycentric.resize(meshB.nVertices(), 3);

  parallelFor(meshA.nVertices(), [&](int v) {
    ClosestPointResult r = bvhB.closestPoint(meshA.positions.row(v));
    phi.targetFace[v] = r.face;
    phi.barycentric.row(v) = r.barycentric.transpose();
  });
  parallelFor(meshB.nVertices(), [&](int v) {
    ClosestPointResult r = bvhA.closestPoint(meshB.positions.row(v));
    psi.targetFace[v] = r.face;
    psi.barycentric.row(v) = r.barycentric.transpose();
  });
  return {std::move(phi), std::move(psi)};
}

} // namespace ims
