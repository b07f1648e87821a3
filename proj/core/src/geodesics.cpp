#include "ims/geodesics.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace ims {

namespace {

// local 2D layout of face f from its edge lengths: i at origin, j on +x, k above
struct FaceFrame {
  Eigen::Vector2d pi, pj, pk;
};

FaceFrame layoutFace(const TriangleMesh& mesh, int f) {
  double lij = mesh.edgeLengths[mesh.halfedgeEdge[3 * f]];
  double ljk = mesh.edgeLengths[mesh.halfedgeEdge[3 * f + 1]];
  double lki = mesh.edgeLengths[mesh.halfedgeEdge[3 * f + 2]];
  FaceFrame fr;
  fr.pi = {0.0, 0.0};
  fr.pj = {lij, 0.0};
  double x = (lij * lij + lki * lki - ljk * ljk) / (2.0 * lij);
  fr.pk = {x, std::sqrt(std::max(0.0, lki * lki - x * x))};
  return fr;
}

Eigen::Vector2d perp(const Eigen::Vector2d& v) { return {-v.y(), v.x()}; }

SpMat cotanLaplacian(const TriangleMesh& mesh, const IntrinsicGeometry& geom) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(12 * mesh.nFaces());
  for (int h = 0; h < mesh.nHalfedges(); ++h) {
    double w = 0.5 / std::tan(geom.cornerAngles[TriangleMesh::prev(h)]);
    int i = mesh.tail(h), j = mesh.head(h);
    trips.emplace_back(i, j, -w);
    trips.emplace_back(j, i, -w);
    trips.emplace_back(i, i, w);
    trips.emplace_back(j, j, w);
  }
  SpMat L(mesh.nVertices(), mesh.nVertices());
  L.setFromTriplets(trips.begin(), trips.end());
  return L;
}

} // namespace

GeodesicSolver::GeodesicSolver(const Surface& surface) : surface_(surface) {
  const TriangleMesh& mesh = surface.mesh;
  double meanEdge = mesh.edgeLengths.mean();
  shortTime_ = meanEdge * meanEdge;

  cotanL_ = cotanLaplacian(mesh, surface.geom);

  SpMat M(mesh.nVertices(), mesh.nVertices());
  {
    std::vector<Eigen::Triplet<double>> trips;
    for (int v = 0; v < mesh.nVertices(); ++v)
      trips.emplace_back(v, v, surface.geom.vertexDualAreas[v]);
    M.setFromTriplets(trips.begin(), trips.end());
  }

  SpMat heat = M + shortTime_ * cotanL_;
  heatSolver_.compute(heat);
  if (heatSolver_.info() != Eigen::Success)
    throw NumericalError("heat-step factorization failed (mean edge length " +
                         std::to_string(meanEdge) + ")");

  // the Poisson system is singular by constants; pinning vertex 0 via a
  // rank-one penalty is exact because the divergence right-hand side sums to 0
  SpMat poisson = cotanL_;
  poisson.coeffRef(0, 0) += 1.0;
  poissonSolver_.compute(poisson);
  if (poissonSolver_.info() != Eigen::Success)
    throw NumericalError("distance Poisson factorization failed");

  // edge adjacency (CSR-ish) for the graph-distance cap
  std::vector<int> degree(mesh.nVertices(), 0);
  for (int e = 0; e < mesh.nEdges(); ++e) {
    degree[mesh.edgeVertices(e, 0)]++;
    degree[mesh.edgeVertices(e, 1)]++;
  }
  adjacencyStart_.assign(mesh.nVertices() + 1, 0);
  for (int v = 0; v < mesh.nVertices(); ++v) adjacencyStart_[v + 1] = adjacencyStart_[v] + degree[v];
  adjacency_.resize(adjacencyStart_.back());
  std::vector<int> cursor(adjacencyStart_.begin(), adjacencyStart_.end() - 1);
  for (int e = 0; e < mesh.nEdges(); ++e) {
    int a = mesh.edgeVertices(e, 0), b = mesh.edgeVertices(e, 1);
    double len = mesh.edgeLengths[e];
    adjacency_[cursor[a]++] = {b, len};
    adjacency_[cursor[b]++] = {a, len};
  }
}

Eigen::VectorXd GeodesicSolver::distance(const std::vector<int>& sources,
                                         const std::vector<double>& weights) const {
  const TriangleMesh& mesh = surface_.mesh;
  const IntrinsicGeometry& geom = surface_.geom;
  const int nV = mesh.nVertices();
  if (sources.empty()) throw FormatError("geodesic distance requires a nonempty source set");

  Eigen::VectorXd u0 = Eigen::VectorXd::Zero(nV);
  for (size_t s = 0; s < sources.size(); ++s) {
    int v = sources[s];
    if (v < 0 || v >= nV) throw FormatError("source vertex " + std::to_string(v) + " out of range");
    u0[v] += weights.empty() ? 1.0 : weights[s];
  }

  Eigen::VectorXd u = heatSolver_.solve(u0);

  // unit vector field pointing away from the sources, per face
  Eigen::VectorXd div = Eigen::VectorXd::Zero(nV);
  for (int f = 0; f < mesh.nFaces(); ++f) {
    FaceFrame fr = layoutFace(mesh, f);
    double area = geom.faceAreas[f];
    int vi = mesh.faces(f, 0), vj = mesh.faces(f, 1), vk = mesh.faces(f, 2);
    Eigen::Vector2d grad = (u[vi] * perp(fr.pk - fr.pj) + u[vj] * perp(fr.pi - fr.pk) +
                            u[vk] * perp(fr.pj - fr.pi)) /
                           (2.0 * area);
    double norm = grad.norm();
    if (norm < 1e-300) continue;
    Eigen::Vector2d X = -grad / norm;
    // integrated divergence: (div X)_i = sum_f area * grad b_i . X = perp(e_opp) . X / 2
    div[vi] += 0.5 * perp(fr.pk - fr.pj).dot(X);
    div[vj] += 0.5 * perp(fr.pi - fr.pk).dot(X);
    div[vk] += 0.5 * perp(fr.pj - fr.pi).dot(X);
  }

  Eigen::VectorXd phi = poissonSolver_.solve(div);

  double shift = std::numeric_limits<double>::infinity();
  for (int v : sources) shift = std::min(shift, phi[v]);
  Eigen::VectorXd d = (phi.array() - shift).cwiseMax(0.0);

  for (int v : sources) d[v] = 0.0;

  // Lipschitz envelope: the largest field below d with |d_i - d_j| <= l_ij,
  // via Dijkstra-style relaxation seeded at every vertex. This clips the
  // short-time kernel's slope overshoot and never raises a value.
  {
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue;
    for (int v = 0; v < nV; ++v) queue.push({d[v], v});
    while (!queue.empty()) {
      auto [dist, v] = queue.top();
      queue.pop();
      if (dist > d[v]) continue;
      for (size_t k = adjacencyStart_[v]; k < adjacencyStart_[v + 1]; ++k) {
        auto [u, len] = adjacency_[k];
        double cand = dist + len;
        if (cand < d[u]) {
          d[u] = cand;
          queue.push({cand, u});
        }
      }
    }
  }
  return d;
}

Eigen::VectorXd GeodesicSolver::distanceToCurve(const std::vector<int>& chain) const {
  if (chain.size() == 1) return distance(chain);
  // integrated density: half the adjacent segment lengths per chain vertex
  std::vector<int> sources;
  std::vector<double> weights;
  const auto& pos = surface_.mesh.positions;
  for (size_t i = 0; i < chain.size(); ++i) {
    if (i + 1 < chain.size() && chain[i] == chain[i + 1]) continue;
    double w = 0.0;
    if (i > 0) w += 0.5 * (pos.row(chain[i]) - pos.row(chain[i - 1])).norm();
    if (i + 1 < chain.size()) w += 0.5 * (pos.row(chain[i + 1]) - pos.row(chain[i])).norm();
    sources.push_back(chain[i]);
    weights.push_back(std::max(w, 1e-12));
  }
  return distance(sources, weights);
}

Eigen::VectorXd geodesicDistance(const Surface& surface, const std::vector<int>& sourceVertices,
                                 const std::vector<double>& weights) {
  GeodesicSolver solver(surface);
  return solver.distance(sourceVertices, weights);
}

} // namespace ims
