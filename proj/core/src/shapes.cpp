#include "ims/shapes.hpp"

#include <cmath>
#include <map>
#include <vector>

#include "ims/rng.hpp"

namespace ims {

namespace {
constexpr double kPi = 3.14159265358979323846;

MeshData fromLists(const std::vector<Eigen::Vector3d>& vs, const std::vector<Eigen::Vector3i>& fs) {
  MeshData m;
  m.positions.resize(static_cast<int>(vs.size()), 3);
  for (size_t i = 0; i < vs.size(); ++i) m.positions.row(static_cast<int>(i)) = vs[i].transpose();
  m.faces.resize(static_cast<int>(fs.size()), 3);
  for (size_t i = 0; i < fs.size(); ++i) m.faces.row(static_cast<int>(i)) = fs[i].transpose();
  return m;
}

void projectToSphere(MeshData& m) {
  for (int v = 0; v < m.positions.rows(); ++v) m.positions.row(v).normalize();
}
} // namespace

MeshData tetrahedron() {
  return fromLists({{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}},
                   {{0, 1, 2}, {0, 2, 3}, {0, 3, 1}, {1, 3, 2}});
}

MeshData octahedron() {
  return fromLists({{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}},
                   {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4}, {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}});
}

MeshData icosahedron() {
  double p = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> vs = {{-1, p, 0}, {1, p, 0},  {-1, -p, 0}, {1, -p, 0},
                                     {0, -1, p}, {0, 1, p},  {0, -1, -p}, {0, 1, -p},
                                     {p, 0, -1}, {p, 0, 1},  {-p, 0, -1}, {-p, 0, 1}};
  std::vector<Eigen::Vector3i> fs = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                     {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                     {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                     {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  return fromLists(vs, fs);
}

MeshData cube() {
  std::vector<Eigen::Vector3d> vs = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
                                     {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1}};
  std::vector<Eigen::Vector3i> fs = {{0, 2, 1}, {0, 3, 2},   // z = -1 (outward -z)
                                     {4, 5, 6}, {4, 6, 7},   // z = +1
                                     {0, 1, 5}, {0, 5, 4},   // y = -1
                                     {2, 3, 7}, {2, 7, 6},   // y = +1
                                     {0, 4, 7}, {0, 7, 3},   // x = -1
                                     {1, 2, 6}, {1, 6, 5}};  // x = +1
  return fromLists(vs, fs);
}

MeshData subdivide(const MeshData& in, int levels) {
  MeshData m = in;
  for (int l = 0; l < levels; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    std::vector<Eigen::Vector3d> vs;
    vs.reserve(m.positions.rows() * 4);
    for (int v = 0; v < m.positions.rows(); ++v) vs.push_back(m.positions.row(v));
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      int idx = static_cast<int>(vs.size());
      vs.push_back(0.5 * (vs[a] + vs[b]));
      midpoint[key] = idx;
      return idx;
    };
    std::vector<Eigen::Vector3i> fs;
    fs.reserve(m.faces.rows() * 4);
    for (int f = 0; f < m.faces.rows(); ++f) {
      int a = m.faces(f, 0), b = m.faces(f, 1), c = m.faces(f, 2);
      int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
      fs.push_back({a, ab, ca});
      fs.push_back({b, bc, ab});
      fs.push_back({c, ca, bc});
      fs.push_back({ab, bc, ca});
    }
    m = fromLists(vs, fs);
  }
  return m;
}

MeshData icosphere(int level) {
  MeshData m = subdivide(icosahedron(), level);
  projectToSphere(m);
  return m;
}

MeshData octasphere(int level) {
  MeshData m = subdivide(octahedron(), level);
  projectToSphere(m);
  return m;
}

MeshData cubesphere(int level) {
  MeshData m = subdivide(cube(), level);
  projectToSphere(m);
  return m;
}

MeshData uvSphere(int nLat, int nLon) {
  std::vector<Eigen::Vector3d> vs;
  std::vector<Eigen::Vector3i> fs;
  vs.push_back({0, 0, 1});
  for (int i = 1; i < nLat; ++i) {
    double theta = kPi * i / nLat;
    for (int j = 0; j < nLon; ++j) {
      double phi = 2.0 * kPi * j / nLon;
      vs.push_back({std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)});
    }
  }
  vs.push_back({0, 0, -1});
  int south = static_cast<int>(vs.size()) - 1;
  auto ring = [&](int i, int j) { return 1 + (i - 1) * nLon + (j % nLon); };
  for (int j = 0; j < nLon; ++j) fs.push_back({0, ring(1, j), ring(1, j + 1)});
  for (int i = 1; i < nLat - 1; ++i) {
    for (int j = 0; j < nLon; ++j) {
      int a = ring(i, j), b = ring(i, j + 1), c = ring(i + 1, j), d = ring(i + 1, j + 1);
      fs.push_back({a, c, d});
      fs.push_back({a, d, b});
    }
  }
  for (int j = 0; j < nLon; ++j) fs.push_back({south, ring(nLat - 1, j + 1), ring(nLat - 1, j)});
  return fromLists(vs, fs);
}

MeshData bumpySphere(const MeshData& sphere, std::uint64_t seed, double amplitude,
                     double frequency, int nBumps) {
  Rng rng(seed);
  std::vector<Eigen::Vector3d> dirs;
  std::vector<double> phases;
  for (int k = 0; k < nBumps; ++k) {
    Eigen::Vector3d d(rng.gaussian(), rng.gaussian(), rng.gaussian());
    dirs.push_back(d.normalized());
    phases.push_back(rng.uniform(0.0, 2.0 * kPi));
  }
  MeshData m = sphere;
  for (int v = 0; v < m.positions.rows(); ++v) {
    Eigen::Vector3d n = m.positions.row(v).normalized();
    double r = 1.0;
    for (int k = 0; k < nBumps; ++k)
      r += amplitude * std::sin(frequency * dirs[k].dot(n) + phases[k]) / nBumps;
    m.positions.row(v) = (r * n).transpose();
  }
  return m;
}

MeshData ellipsoid(const MeshData& sphere, double ax, double ay, double az) {
  MeshData m = sphere;
  m.positions.col(0) *= ax;
  m.positions.col(1) *= ay;
  m.positions.col(2) *= az;
  return m;
}

MeshData rectangleGrid(int nx, int ny, double width, double height) {
  std::vector<Eigen::Vector3d> vs;
  std::vector<Eigen::Vector3i> fs;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      vs.push_back({width * i / nx, height * j / ny, 0.0});
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      fs.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      fs.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return fromLists(vs, fs);
}

MeshData disk(int nRings, int nSectors) {
  std::vector<Eigen::Vector3d> vs;
  std::vector<Eigen::Vector3i> fs;
  vs.push_back({0, 0, 0});
  for (int r = 1; r <= nRings; ++r) {
    double rad = static_cast<double>(r) / nRings;
    for (int s = 0; s < nSectors; ++s) {
      double a = 2.0 * kPi * s / nSectors;
      vs.push_back({rad * std::cos(a), rad * std::sin(a), 0.0});
    }
  }
  auto ring = [&](int r, int s) { return 1 + (r - 1) * nSectors + (s % nSectors); };
  for (int s = 0; s < nSectors; ++s) fs.push_back({0, ring(1, s), ring(1, s + 1)});
  for (int r = 1; r < nRings; ++r) {
    for (int s = 0; s < nSectors; ++s) {
      int a = ring(r, s), b = ring(r, s + 1), c = ring(r + 1, s), d = ring(r + 1, s + 1);
      fs.push_back({a, c, d});
      fs.push_back({a, d, b});
    }
  }
  return fromLists(vs, fs);
}

MeshData annulus(int nRings, int nSectors, double rInner, double rOuter) {
  std::vector<Eigen::Vector3d> vs;
  std::vector<Eigen::Vector3i> fs;
  for (int r = 0; r <= nRings; ++r) {
    double rad = rInner + (rOuter - rInner) * r / nRings;
    for (int s = 0; s < nSectors; ++s) {
      double a = 2.0 * kPi * s / nSectors;
      vs.push_back({rad * std::cos(a), rad * std::sin(a), 0.0});
    }
  }
  auto ring = [&](int r, int s) { return r * nSectors + (s % nSectors); };
  for (int r = 0; r < nRings; ++r) {
    for (int s = 0; s < nSectors; ++s) {
      int a = ring(r, s), b = ring(r, s + 1), c = ring(r + 1, s), d = ring(r + 1, s + 1);
      fs.push_back({a, c, d});
      fs.push_back({a, d, b});
    }
  }
  return fromLists(vs, fs);
}

MeshData torus(int nU, int nV, double R, double r) {
  std::vector<Eigen::Vector3d> vs;
  std::vector<Eigen::Vector3i> fs;
  for (int i = 0; i < nU; ++i) {
    double u = 2.0 * kPi * i / nU;
    for (int j = 0; j < nV; ++j) {
      double v = 2.0 * kPi * j / nV;
      vs.push_back({(R + r * std::cos(v)) * std::cos(u), (R + r * std::cos(v)) * std::sin(u),
                    r * std::sin(v)});
    }
  }
  auto id = [&](int i, int j) { return (i % nU) * nV + (j % nV); };
  for (int i = 0; i < nU; ++i) {
    for (int j = 0; j < nV; ++j) {
      int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      fs.push_back({a, b, c});
      fs.push_back({a, c, d});
    }
  }
  return fromLists(vs, fs);
}

void jitterVertices(MeshData& mesh, std::uint64_t seed, double relativeAmplitude) {
  Rng rng(seed);
  double meanEdge = 0.0;
  int count = 0;
  for (int f = 0; f < mesh.faces.rows(); ++f) {
    for (int c = 0; c < 3; ++c) {
      meanEdge += (mesh.positions.row(mesh.faces(f, c)) - mesh.positions.row(mesh.faces(f, (c + 1) % 3))).norm();
      count++;
    }
  }
  meanEdge /= count;
  double amp = relativeAmplitude * meanEdge;
  for (int v = 0; v < mesh.positions.rows(); ++v) {
    Eigen::Vector3d d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    mesh.positions.row(v) += (amp * d).transpose();
  }
}

MeshData reverseOrientation(const MeshData& in) {
  MeshData m = in;
  m.faces.col(1).swap(m.faces.col(2));
  return m;
}

} // namespace ims
