#include "ims/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <queue>

#include "ims/io.hpp"

namespace ims {

namespace {
constexpr double kPi = 3.14159265358979323846;
} // namespace

double TriangleMesh::totalArea() const {
  double area = 0.0;
  for (int f = 0; f < nFaces(); ++f) {
    double a = edgeLengths[halfedgeEdge[3 * f]];
    double b = edgeLengths[halfedgeEdge[3 * f + 1]];
    double c = edgeLengths[halfedgeEdge[3 * f + 2]];
    double s = 0.5 * (a + b + c);
    area += std::sqrt(std::max(0.0, s * (s - a) * (s - b) * (s - c)));
  }
  return area;
}

Eigen::Vector3d TriangleMesh::areaCentroid() const {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  double total = 0.0;
  for (int f = 0; f < nFaces(); ++f) {
    Eigen::Vector3d p0 = positions.row(faces(f, 0));
    Eigen::Vector3d p1 = positions.row(faces(f, 1));
    Eigen::Vector3d p2 = positions.row(faces(f, 2));
    double a = 0.5 * ((p1 - p0).cross(p2 - p0)).norm();
    c += a * (p0 + p1 + p2) / 3.0;
    total += a;
  }
  if (total > 0) c /= total;
  return c;
}

Eigen::Vector3d TriangleMesh::facePoint(int f, const Eigen::Vector3d& bary) const {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  for (int c = 0; c < 3; ++c) p += bary[c] * positions.row(faces(f, c)).transpose();
  return p;
}

Eigen::Vector3d TriangleMesh::faceNormal(int f) const {
  Eigen::Vector3d p0 = positions.row(faces(f, 0));
  Eigen::Vector3d p1 = positions.row(faces(f, 1));
  Eigen::Vector3d p2 = positions.row(faces(f, 2));
  Eigen::Vector3d n = (p1 - p0).cross(p2 - p0);
  double len = n.norm();
  return len > 0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d(0, 0, 1);
}

TriangleMesh buildMesh(const Eigen::MatrixXd& positions, const Eigen::MatrixXi& faces) {
  TriangleMesh m;
  m.positions = positions;
  m.faces = faces;
  const int nV = m.nVertices();
  const int nF = m.nFaces();
  const int nH = 3 * nF;

  for (int f = 0; f < nF; ++f) {
    for (int c = 0; c < 3; ++c) {
      int v = faces(f, c);
      if (v < 0 || v >= nV) throw FormatError("face " + std::to_string(f) + " references vertex " + std::to_string(v) + " out of range");
    }
    if (faces(f, 0) == faces(f, 1) || faces(f, 1) == faces(f, 2) || faces(f, 2) == faces(f, 0))
      throw StructuralError("face " + std::to_string(f) + " repeats a vertex");
  }

  // twin lookup via directed-edge map; a repeated directed edge means the
  // mesh is non-manifold or inconsistently oriented
  std::map<std::pair<int, int>, int> directed;
  for (int h = 0; h < nH; ++h) {
    auto key = std::make_pair(m.tail(h), m.head(h));
    if (!directed.emplace(key, h).second)
      throw StructuralError("non-manifold or inconsistently oriented mesh: duplicate directed edge " +
                            std::to_string(key.first) + "->" + std::to_string(key.second));
  }
  m.twin.assign(nH, -1);
  for (int h = 0; h < nH; ++h) {
    auto it = directed.find(std::make_pair(m.head(h), m.tail(h)));
    if (it != directed.end()) m.twin[h] = it->second;
  }

  // edges: canonical representative = first halfedge encountered
  m.halfedgeEdge.assign(nH, -1);
  m.halfedgeSign.assign(nH, 0);
  std::vector<int> edgeHe;
  for (int h = 0; h < nH; ++h) {
    if (m.halfedgeEdge[h] >= 0) continue;
    int e = static_cast<int>(edgeHe.size());
    edgeHe.push_back(h);
    m.halfedgeEdge[h] = e;
    m.halfedgeSign[h] = 1;
    if (m.twin[h] >= 0) {
      m.halfedgeEdge[m.twin[h]] = e;
      m.halfedgeSign[m.twin[h]] = -1;
    }
  }
  const int nE = static_cast<int>(edgeHe.size());
  m.edgeHalfedge = std::move(edgeHe);
  m.edgeVertices.resize(nE, 2);
  m.edgeLengths.resize(nE);
  for (int e = 0; e < nE; ++e) {
    int h = m.edgeHalfedge[e];
    m.edgeVertices(e, 0) = m.tail(h);
    m.edgeVertices(e, 1) = m.head(h);
    m.edgeLengths[e] = (positions.row(m.head(h)) - positions.row(m.tail(h))).norm();
    if (!(m.edgeLengths[e] > 0)) throw StructuralError("zero-length edge " + std::to_string(e));
  }

  // vertex fans must be single disks (or half-disks on the boundary)
  {
    std::vector<int> incidentCount(nV, 0);
    for (int h = 0; h < nH; ++h) incidentCount[m.tail(h)]++;
    std::vector<int> start(nV, -1);
    for (int h = 0; h < nH; ++h) {
      int v = m.tail(h);
      if (m.twin[h] < 0) {
        if (start[v] >= 0 && m.twin[start[v]] < 0)
          throw StructuralError("non-manifold vertex " + std::to_string(v) + " (several boundary fans)");
        start[v] = h;  // clockwise-most outgoing halfedge
      } else if (start[v] < 0) {
        start[v] = h;
      }
    }
    for (int v = 0; v < nV; ++v) {
      if (incidentCount[v] == 0)
        throw StructuralError("unreferenced vertex " + std::to_string(v));
      int visited = 0;
      int h = start[v];
      while (h >= 0) {
        visited++;
        if (visited > incidentCount[v]) break;
        int p = TriangleMesh::prev(h);
        h = m.twin[p];
        if (h == start[v]) break;
      }
      if (visited != incidentCount[v])
        throw StructuralError("non-manifold vertex " + std::to_string(v));
    }
  }

  // edge-connected
  {
    std::vector<char> seen(nF, 0);
    std::deque<int> todo{0};
    seen[0] = 1;
    int count = 1;
    while (!todo.empty()) {
      int f = todo.front();
      todo.pop_front();
      for (int c = 0; c < 3; ++c) {
        int t = m.twin[3 * f + c];
        if (t >= 0 && !seen[t / 3]) {
          seen[t / 3] = 1;
          count++;
          todo.push_back(t / 3);
        }
      }
    }
    if (count != nF) throw StructuralError("mesh has multiple connected components");
  }

  // boundary loops: chain boundary halfedges tail->head
  {
    std::vector<int> outgoingBoundary(nV, -1);
    for (int h = 0; h < nH; ++h)
      if (m.twin[h] < 0) outgoingBoundary[m.tail(h)] = h;
    std::vector<char> used(nH, 0);
    for (int h0 = 0; h0 < nH; ++h0) {
      if (m.twin[h0] >= 0 || used[h0]) continue;
      std::vector<int> loop;
      int h = h0;
      do {
        used[h] = 1;
        loop.push_back(m.tail(h));
        h = outgoingBoundary[m.head(h)];
        if (h < 0) throw StructuralError("broken boundary loop");
      } while (h != h0);
      m.boundaryLoops.push_back(std::move(loop));
    }
  }

  return m;
}

IntrinsicGeometry buildGeometry(const TriangleMesh& mesh) {
  IntrinsicGeometry g;
  const int nV = mesh.nVertices();
  const int nF = mesh.nFaces();
  const int nE = mesh.nEdges();
  const int nH = 3 * nF;

  g.cornerAngles.resize(nH);
  g.faceAreas.resize(nF);
  for (int f = 0; f < nF; ++f) {
    double lij = mesh.edgeLengths[mesh.halfedgeEdge[3 * f]];
    double ljk = mesh.edgeLengths[mesh.halfedgeEdge[3 * f + 1]];
    double lki = mesh.edgeLengths[mesh.halfedgeEdge[3 * f + 2]];
    if (lij + ljk <= lki || ljk + lki <= lij || lki + lij <= ljk)
      throw StructuralError("face " + std::to_string(f) + " violates the strict triangle inequality");
    double s = 0.5 * (lij + ljk + lki);
    g.faceAreas[f] = std::sqrt(std::max(0.0, s * (s - lij) * (s - ljk) * (s - lki)));
    // corner c is at vertex faces(f,c); its adjacent edge lengths are
    // len(h_c) and len(prev(h_c)); the opposite edge is next(h_c)
    for (int c = 0; c < 3; ++c) {
      double a = mesh.edgeLengths[mesh.halfedgeEdge[3 * f + c]];
      double b = mesh.edgeLengths[mesh.halfedgeEdge[3 * f + (c + 2) % 3]];
      double opp = mesh.edgeLengths[mesh.halfedgeEdge[3 * f + (c + 1) % 3]];
      double cosA = (a * a + b * b - opp * opp) / (2.0 * a * b);
      g.cornerAngles[3 * f + c] = std::acos(std::clamp(cosA, -1.0, 1.0));
    }
  }

  g.vertexAngleSums = Eigen::VectorXd::Zero(nV);
  for (int h = 0; h < nH; ++h) g.vertexAngleSums[mesh.tail(h)] += g.cornerAngles[h];

  g.cornerScaledAngles.resize(nH);
  for (int h = 0; h < nH; ++h)
    g.cornerScaledAngles[h] = (2.0 * kPi / g.vertexAngleSums[mesh.tail(h)]) * g.cornerAngles[h];

  // halfedge directions: walk the fan counterclockwise, accumulating
  // rescaled corner angles; boundary vertices start at the clockwise-most
  // (boundary) halfedge
  g.halfedgeAngles = Eigen::VectorXd::Zero(nH);
  {
    std::vector<int> start(nV, -1);
    for (int h = 0; h < nH; ++h) {
      int v = mesh.tail(h);
      if (mesh.twin[h] < 0)
        start[v] = h;
      else if (start[v] < 0)
        start[v] = h;
    }
    for (int v = 0; v < nV; ++v) {
      int h = start[v];
      double angle = 0.0;
      while (true) {
        g.halfedgeAngles[h] = angle;
        angle += g.cornerScaledAngles[h];
        int t = mesh.twin[TriangleMesh::prev(h)];
        if (t < 0 || t == start[v]) break;
        h = t;
      }
    }
  }
  g.halfedgeDirs.resize(nH);
  for (int h = 0; h < nH; ++h)
    g.halfedgeDirs[h] = std::polar(1.0, g.halfedgeAngles[h]);

  g.vertexDualAreas = Eigen::VectorXd::Zero(nV);
  for (int f = 0; f < nF; ++f)
    for (int c = 0; c < 3; ++c) g.vertexDualAreas[mesh.faces(f, c)] += g.faceAreas[f] / 3.0;
  g.totalArea = g.faceAreas.sum();

  // d1: +1 where the face traverses the edge in its canonical orientation
  {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(nH);
    for (int h = 0; h < nH; ++h)
      trips.emplace_back(TriangleMesh::faceOf(h), mesh.halfedgeEdge[h],
                         static_cast<double>(mesh.halfedgeSign[h]));
    g.d1.resize(nF, nE);
    g.d1.setFromTriplets(trips.begin(), trips.end());
  }

  // cotan weights, clamped positive so *1^{-1} stays well conditioned; the
  // clamp only affects which coexact representative the trivial-connection
  // solves pick, never the prescribed curvature itself
  {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(nE);
    for (int h = 0; h < nH; ++h) {
      // the corner opposite halfedge h within its face is prev(h)'s corner
      double theta = g.cornerAngles[TriangleMesh::prev(h)];
      w[mesh.halfedgeEdge[h]] += 0.5 / std::tan(theta);
    }
    double floor = 1e-2 * w.cwiseAbs().mean() + 1e-300;
    g.star1.resize(nE);
    for (int e = 0; e < nE; ++e) g.star1[e] = std::max(w[e], floor);
  }

  return g;
}

void normalizeToUnitArea(TriangleMesh& mesh) {
  Eigen::Vector3d c = mesh.areaCentroid();
  mesh.positions.rowwise() -= c.transpose();
  double area = mesh.totalArea();
  if (!(area > 0)) throw StructuralError("mesh has zero surface area");
  double scale = 1.0 / std::sqrt(area);
  mesh.positions *= scale;
  mesh.edgeLengths *= scale;
}

void requireGenusZero(const TriangleMesh& mesh) {
  int chi = mesh.eulerCharacteristic();
  int filled = chi + static_cast<int>(mesh.boundaryLoops.size());
  if (filled != 2)
    throw TopologyError("mesh is not genus zero: Euler characteristic chi = " + std::to_string(chi) +
                        " with " + std::to_string(mesh.boundaryLoops.size()) +
                        " boundary loop(s); chi after disk filling would be " + std::to_string(filled));
}

Surface loadAndNormalize(const std::string& path) {
  auto [positions, faces] = loadObj(path);
  TriangleMesh mesh = buildMesh(positions, faces);
  requireGenusZero(mesh);
  normalizeToUnitArea(mesh);
  return makeSurface(std::move(mesh));
}

FillResult fillBoundaries(const Surface& surface) {
  const TriangleMesh& mesh = surface.mesh;
  FillResult out;
  out.boundaryCurves = mesh.boundaryLoops;
  if (mesh.boundaryLoops.empty()) {
    out.surface = surface;
    return out;
  }
  for (const auto& loop : mesh.boundaryLoops)
    if (loop.size() < 3)
      throw StructuralError("degenerate boundary loop of length " + std::to_string(loop.size()));

  int nV = mesh.nVertices();
  int nNew = static_cast<int>(mesh.boundaryLoops.size());
  int addedFaces = 0;
  for (const auto& loop : mesh.boundaryLoops) addedFaces += static_cast<int>(loop.size());

  Eigen::MatrixXd positions(nV + nNew, 3);
  positions.topRows(nV) = mesh.positions;
  Eigen::MatrixXi faces(mesh.nFaces() + addedFaces, 3);
  faces.topRows(mesh.nFaces()) = mesh.faces;

  int f = mesh.nFaces();
  for (int k = 0; k < nNew; ++k) {
    const auto& loop = mesh.boundaryLoops[k];
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (int v : loop) centroid += mesh.positions.row(v).transpose();
    centroid /= static_cast<double>(loop.size());
    positions.row(nV + k) = centroid.transpose();
    // the boundary halfedge a->b has its face to the left; caps traverse b->a
    int n = static_cast<int>(loop.size());
    for (int i = 0; i < n; ++i) {
      int a = loop[i];
      int b = loop[(i + 1) % n];
      faces.row(f) << b, a, nV + k;
      out.filledFaces.push_back(f);
      f++;
    }
  }

  out.surface = makeSurface(buildMesh(positions, faces));
  requireGenusZero(out.surface.mesh);
  return out;
}

namespace {

// Flip machinery: operates on explicit (faces, twin, halfedgeEdge, edge data)
// arrays so multigraph connectivity arising from intrinsic flips stays valid.
struct FlipMesh {
  Eigen::MatrixXi faces;
  std::vector<int> twin;
  std::vector<int> halfedgeEdge;
  std::vector<signed char> halfedgeSign;
  Eigen::MatrixXi edgeVertices;
  std::vector<int> edgeHalfedge;
  Eigen::VectorXd edgeLengths;

  int tail(int h) const { return faces(h / 3, h % 3); }
  int head(int h) const { return faces(h / 3, (h % 3 + 1) % 3); }
  double len(int h) const { return edgeLengths[halfedgeEdge[h]]; }
};

double oppositeAngle(const FlipMesh& m, int h) {
  // angle at the corner opposite halfedge h within its face
  double a = m.len(TriangleMesh::next(h));
  double b = m.len(TriangleMesh::prev(h));
  double opp = m.len(h);
  double cosA = (a * a + b * b - opp * opp) / (2.0 * a * b);
  return std::acos(std::clamp(cosA, -1.0, 1.0));
}

bool isDelaunay(const FlipMesh& m, int e, double tol) {
  int h = m.edgeHalfedge[e];
  int t = m.twin[h];
  if (t < 0) return true;
  return oppositeAngle(m, h) + oppositeAngle(m, t) <= kPi + tol;
}

// Lays the two adjacent triangles out in the plane and returns the length of
// the opposite diagonal. h runs i->j; faces (i,j,k) and (j,i,l).
double flippedDiagonalLength(const FlipMesh& m, int h) {
  int t = m.twin[h];
  double lij = m.len(h);
  double ljk = m.len(TriangleMesh::next(h));
  double lki = m.len(TriangleMesh::prev(h));
  double lil = m.len(TriangleMesh::next(t));
  double llj = m.len(TriangleMesh::prev(t));
  // i at origin, j at (lij, 0); k above, l below
  double xk = (lij * lij + lki * lki - ljk * ljk) / (2.0 * lij);
  double yk = std::sqrt(std::max(0.0, lki * lki - xk * xk));
  double xl = (lij * lij + lil * lil - llj * llj) / (2.0 * lij);
  double yl = -std::sqrt(std::max(0.0, lil * lil - xl * xl));
  double dx = xk - xl, dy = yk - yl;
  return std::sqrt(dx * dx + dy * dy);
}

// Rewires the two faces adjacent to edge e from diagonal (i,j) to (l,k).
// Returns false when the flip would be degenerate.
bool flipEdge(FlipMesh& m, int e) {
  int h = m.edgeHalfedge[e];
  int t = m.twin[h];
  if (t < 0) return false;
  int f1 = h / 3, f2 = t / 3;
  if (f1 == f2) return false;

  int i = m.tail(h), j = m.head(h);
  int k = m.head(TriangleMesh::next(h));
  int l = m.head(TriangleMesh::next(t));
  if (k == l) return false;

  double newLen = flippedDiagonalLength(m, h);
  if (!(newLen > 0)) return false;

  int hjk = TriangleMesh::next(h), hki = TriangleMesh::prev(h);
  int hil = TriangleMesh::next(t), hlj = TriangleMesh::prev(t);
  int tjk = m.twin[hjk], tki = m.twin[hki], til = m.twin[hil], tlj = m.twin[hlj];
  int ejk = m.halfedgeEdge[hjk], eki = m.halfedgeEdge[hki];
  int eil = m.halfedgeEdge[hil], elj = m.halfedgeEdge[hlj];
  signed char sjk = m.halfedgeSign[hjk], ski = m.halfedgeSign[hki];
  signed char sil = m.halfedgeSign[hil], slj = m.halfedgeSign[hlj];

  // f1 := (l, k, i), f2 := (k, l, j); diagonal halfedges are slot 0 of each
  m.faces.row(f1) << l, k, i;
  m.faces.row(f2) << k, l, j;
  int h1 = 3 * f1, h2 = 3 * f2;

  auto setHe = [&](int he, int tw, int edge, signed char sign) {
    m.twin[he] = tw;
    if (tw >= 0) m.twin[tw] = he;
    m.halfedgeEdge[he] = edge;
    m.halfedgeSign[he] = sign;
  };

  // diagonal l->k / k->l reuses edge slot e, canonical l->k
  setHe(h1, h2, e, 1);
  m.halfedgeEdge[h2] = e;
  m.halfedgeSign[h2] = -1;
  m.twin[h2] = h1;
  m.edgeHalfedge[e] = h1;
  m.edgeVertices(e, 0) = l;
  m.edgeVertices(e, 1) = k;
  m.edgeLengths[e] = newLen;

  // f1 = (l, k, i): slot1 k->i, slot2 i->l
  setHe(h1 + 1, tki, eki, ski);
  setHe(h1 + 2, til, eil, sil);
  // f2 = (k, l, j): slot1 l->j, slot2 j->k
  setHe(h2 + 1, tlj, elj, slj);
  setHe(h2 + 2, tjk, ejk, sjk);

  // canonical representatives may have lived in the overwritten slots
  for (int he : {h1 + 1, h1 + 2, h2 + 1, h2 + 2})
    if (m.halfedgeSign[he] > 0) m.edgeHalfedge[m.halfedgeEdge[he]] = he;
  return true;
}

} // namespace

DelaunayResult intrinsicDelaunay(const Surface& surface) {
  const TriangleMesh& in = surface.mesh;
  FlipMesh m;
  m.faces = in.faces;
  m.twin = in.twin;
  m.halfedgeEdge = in.halfedgeEdge;
  m.halfedgeSign = in.halfedgeSign;
  m.edgeVertices = in.edgeVertices;
  m.edgeHalfedge = in.edgeHalfedge;
  m.edgeLengths = in.edgeLengths;

  const double tol = 1e-12;
  const int nE = in.nEdges();
  const long maxFlips = 100L * nE;

  std::deque<int> queue;
  std::vector<char> inQueue(nE, 0);
  for (int e = 0; e < nE; ++e) {
    queue.push_back(e);
    inQueue[e] = 1;
  }

  long flips = 0;
  while (!queue.empty()) {
    int e = queue.front();
    queue.pop_front();
    inQueue[e] = 0;
    if (isDelaunay(m, e, tol)) continue;
    if (!flipEdge(m, e)) continue;
    flips++;
    if (flips > maxFlips)
      throw NumericalError("intrinsic Delaunay flipping did not terminate after " +
                           std::to_string(maxFlips) + " flips");
    int h1 = m.edgeHalfedge[e];
    int h2 = m.twin[h1];
    for (int he : {TriangleMesh::next(h1), TriangleMesh::prev(h1), TriangleMesh::next(h2),
                   TriangleMesh::prev(h2)}) {
      int ne = m.halfedgeEdge[he];
      if (!inQueue[ne]) {
        queue.push_back(ne);
        inQueue[ne] = 1;
      }
    }
  }

  DelaunayResult out;
  out.flips = static_cast<int>(flips);
  if (flips == 0) {
    out.surface = surface;
    return out;
  }
  TriangleMesh mesh;
  mesh.positions = in.positions;
  mesh.faces = std::move(m.faces);
  mesh.twin = std::move(m.twin);
  mesh.halfedgeEdge = std::move(m.halfedgeEdge);
  mesh.halfedgeSign = std::move(m.halfedgeSign);
  mesh.edgeVertices = std::move(m.edgeVertices);
  mesh.edgeHalfedge = std::move(m.edgeHalfedge);
  mesh.edgeLengths = std::move(m.edgeLengths);
  mesh.boundaryLoops = in.boundaryLoops;
  out.surface = makeSurface(std::move(mesh));
  return out;
}

} // namespace ims
