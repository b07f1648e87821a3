#include "ims/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ims/bundle.hpp"

namespace ims {

namespace {

std::ifstream openIn(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream openOut(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  return out;
}

int parseObjIndex(const std::string& token, int nVertices, const std::string& path) {
  size_t slash = token.find('/');
  std::string head = slash == std::string::npos ? token : token.substr(0, slash);
  int idx = 0;
  try {
    idx = std::stoi(head);
  } catch (...) {
    throw FormatError(path + ": bad face index '" + token + "'");
  }
  if (idx < 0) idx = nVertices + idx + 1;  // negative indices count from the end
  if (idx < 1 || idx > nVertices) throw FormatError(path + ": face index " + head + " out of range");
  return idx - 1;
}

} // namespace

std::pair<Eigen::MatrixXd, Eigen::MatrixXi> loadObj(const std::string& path) {
  std::ifstream in = openIn(path);
  std::vector<Eigen::Vector3d> verts;
  std::vector<Eigen::Vector3i> faces;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    lineNo++;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z))
        throw FormatError(path + ":" + std::to_string(lineNo) + ": malformed vertex record");
      verts.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string token;
      while (ss >> token) idx.push_back(parseObjIndex(token, static_cast<int>(verts.size()), path));
      if (idx.size() != 3)
        throw FormatError(path + ":" + std::to_string(lineNo) + ": non-triangular face with " +
                          std::to_string(idx.size()) + " vertices");
      faces.emplace_back(idx[0], idx[1], idx[2]);
    }
    // vt, vn, comments and everything else are ignored
  }
  if (faces.empty()) throw FormatError(path + ": no faces found");

  // drop unreferenced vertices, remapping densely in vertex order
  std::vector<char> used(verts.size(), 0);
  for (const auto& f : faces)
    for (int c = 0; c < 3; ++c) used[f[c]] = 1;
  std::vector<int> remap(verts.size(), -1);
  int nUsed = 0;
  for (size_t v = 0; v < verts.size(); ++v)
    if (used[v]) remap[v] = nUsed++;
  Eigen::MatrixXd positions(nUsed, 3);
  for (size_t v = 0; v < verts.size(); ++v)
    if (remap[v] >= 0) positions.row(remap[v]) = verts[v].transpose();
  Eigen::MatrixXi F(static_cast<int>(faces.size()), 3);
  for (size_t f = 0; f < faces.size(); ++f)
    F.row(static_cast<int>(f)) << remap[faces[f][0]], remap[faces[f][1]], remap[faces[f][2]];
  return {std::move(positions), std::move(F)};
}

void writeObj(const std::string& path, const TriangleMesh& mesh, const Eigen::MatrixX2d* uv) {
  std::ofstream out = openOut(path);
  out.precision(17);
  for (int v = 0; v < mesh.nVertices(); ++v)
    out << "v " << mesh.positions(v, 0) << ' ' << mesh.positions(v, 1) << ' '
        << mesh.positions(v, 2) << '\n';
  if (uv) {
    for (int v = 0; v < uv->rows(); ++v) out << "vt " << (*uv)(v, 0) << ' ' << (*uv)(v, 1) << '\n';
    for (int f = 0; f < mesh.nFaces(); ++f)
      out << "f " << mesh.faces(f, 0) + 1 << '/' << mesh.faces(f, 0) + 1 << ' '
          << mesh.faces(f, 1) + 1 << '/' << mesh.faces(f, 1) + 1 << ' ' << mesh.faces(f, 2) + 1
          << '/' << mesh.faces(f, 2) + 1 << '\n';
  } else {
    for (int f = 0; f < mesh.nFaces(); ++f)
      out << "f " << mesh.faces(f, 0) + 1 << ' ' << mesh.faces(f, 1) + 1 << ' '
          << mesh.faces(f, 2) + 1 << '\n';
  }
}

std::vector<std::pair<int, int>> loadLandmarks(const std::string& path, int nA, int nB) {
  std::ifstream in = openIn(path);
  std::vector<std::pair<int, int>> pairs;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    lineNo++;
    std::istringstream ss(line);
    int a, b;
    if (!(ss >> a)) continue;  // blank line
    if (!(ss >> b)) throw FormatError(path + ":" + std::to_string(lineNo) + ": expected two vertex indices");
    if (a < 0 || a >= nA || b < 0 || b >= nB)
      throw FormatError(path + ":" + std::to_string(lineNo) + ": landmark vertex out of range");
    pairs.emplace_back(a, b);
  }
  return pairs;
}

std::vector<CurvePair> loadCurves(const std::string& path, int nA, int nB) {
  std::ifstream in = openIn(path);
  std::vector<CurvePair> curves;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    lineNo++;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    size_t posA = line.find("curveA:");
    size_t sep = line.find(';');
    size_t posB = line.find("curveB:");
    if (posA == std::string::npos || sep == std::string::npos || posB == std::string::npos)
      throw FormatError(path + ":" + std::to_string(lineNo) +
                        ": expected 'curveA: i0 i1 ... ; curveB: j0 j1 ...'");
    CurvePair cp;
    auto parseChain = [&](const std::string& text, int n, std::vector<int>& outChain) {
      std::istringstream ss(text);
      int v;
      while (ss >> v) {
        if (v < 0 || v >= n)
          throw FormatError(path + ":" + std::to_string(lineNo) + ": curve vertex out of range");
        outChain.push_back(v);
      }
      if (outChain.empty())
        throw FormatError(path + ":" + std::to_string(lineNo) + ": empty curve");
    };
    parseChain(line.substr(posA + 7, sep - posA - 7), nA, cp.curveA);
    parseChain(line.substr(posB + 7), nB, cp.curveB);
    curves.push_back(std::move(cp));
  }
  return curves;
}

void writeMapFile(const std::string& path, const std::vector<MapRecord>& records, int nTarget) {
  std::ofstream out = openOut(path);
  out.precision(17);
  out << "IMSMAP v1 " << records.size() << ' ' << nTarget << '\n';
  for (size_t v = 0; v < records.size(); ++v) {
    const MapRecord& r = records[v];
    out << v << ' ' << r.face << ' ' << r.barycentric[0] << ' ' << r.barycentric[1] << ' '
        << r.barycentric[2] << ' ' << (r.multiZero ? 1 : 0) << '\n';
  }
}

std::vector<MapRecord> loadMapFile(const std::string& path, int* nSource, int* nTarget) {
  std::ifstream in = openIn(path);
  std::string magic, version;
  int nSrc = 0, nTgt = 0;
  if (!(in >> magic >> version >> nSrc >> nTgt) || magic != "IMSMAP" || version != "v1")
    throw FormatError(path + ": expected 'IMSMAP v1 |V_src| |V_tgt|' header");
  std::vector<MapRecord> records(nSrc);
  for (int i = 0; i < nSrc; ++i) {
    int v, face, multi;
    MapRecord r;
    if (!(in >> v >> face >> r.barycentric[0] >> r.barycentric[1] >> r.barycentric[2] >> multi))
      throw FormatError(path + ": truncated map file at record " + std::to_string(i));
    if (v < 0 || v >= nSrc) throw FormatError(path + ": bad source vertex " + std::to_string(v));
    if (face < 0) throw FormatError(path + ": bad face index " + std::to_string(face));
    r.face = face;
    r.multiZero = multi != 0;
    records[v] = r;
  }
  if (nSource) *nSource = nSrc;
  if (nTarget) *nTarget = nTgt;
  return records;
}

void writeOverlayFile(const std::string& path, const std::vector<OverlayCrossing>& crossings) {
  std::ofstream out = openOut(path);
  out.precision(17);
  for (const auto& c : crossings)
    out << c.edgeA << ' ' << c.edgeB << ' ' << c.s << ' ' << c.t << '\n';
}

void writeSectionFile(const std::string& path, const Eigen::MatrixXcd& Z) {
  std::ofstream out = openOut(path, true);
  out << "IMSZ1 " << Z.rows() << ' ' << Z.cols() << '\n';
  std::vector<double> row(2 * Z.cols());
  for (int i = 0; i < Z.rows(); ++i) {
    for (int j = 0; j < Z.cols(); ++j) {
      row[2 * j] = Z(i, j).real();
      row[2 * j + 1] = Z(i, j).imag();
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
}

Eigen::MatrixXcd loadSectionFile(const std::string& path) {
  std::ifstream in = openIn(path, true);
  std::string magic;
  long rows = 0, cols = 0;
  if (!(in >> magic >> rows >> cols) || magic != "IMSZ1" || rows <= 0 || cols <= 0)
    throw FormatError(path + ": expected 'IMSZ1 rows cols' header");
  in.get();  // newline
  Eigen::MatrixXcd Z(rows, cols);
  std::vector<double> row(2 * cols);
  for (long i = 0; i < rows; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) throw FormatError(path + ": truncated section file at row " + std::to_string(i));
    for (long j = 0; j < cols; ++j) Z(i, j) = Complex(row[2 * j], row[2 * j + 1]);
  }
  return Z;
}

void writePotentialFile(const std::string& path, const Eigen::MatrixXd& V) {
  std::ofstream out = openOut(path, true);
  out << "IMSV1 " << V.rows() << ' ' << V.cols() << '\n';
  std::vector<double> row(V.cols());
  for (int i = 0; i < V.rows(); ++i) {
    for (int j = 0; j < V.cols(); ++j) row[j] = V(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
}

Eigen::MatrixXd loadPotentialFile(const std::string& path) {
  std::ifstream in = openIn(path, true);
  std::string magic;
  long rows = 0, cols = 0;
  if (!(in >> magic >> rows >> cols) || magic != "IMSV1" || rows <= 0 || cols <= 0)
    throw FormatError(path + ": expected 'IMSV1 rows cols' header");
  in.get();
  Eigen::MatrixXd V(rows, cols);
  std::vector<double> row(cols);
  for (long i = 0; i < rows; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) throw FormatError(path + ": truncated potential file at row " + std::to_string(i));
    for (long j = 0; j < cols; ++j) V(i, j) = row[j];
  }
  return V;
}

void writeConnectionFile(const std::string& path, const TriangleMesh& mesh, const Connection& conn) {
  std::ofstream out = openOut(path);
  out.precision(17);
  for (int e = 0; e < mesh.nEdges(); ++e)
    out << mesh.edgeVertices(e, 0) << ' ' << mesh.edgeVertices(e, 1) << ' ' << conn.r[e].real()
        << ' ' << conn.r[e].imag() << '\n';
  for (int f = 0; f < mesh.nFaces(); ++f)
    out << mesh.faces(f, 0) << ' ' << mesh.faces(f, 1) << ' ' << mesh.faces(f, 2) << ' '
        << conn.omega[f] << '\n';
}

Connection loadConnectionFile(const std::string& path, const TriangleMesh& mesh) {
  std::ifstream in = openIn(path);
  Eigen::VectorXd rho(mesh.nEdges());
  Eigen::VectorXd omega(mesh.nFaces());
  for (int e = 0; e < mesh.nEdges(); ++e) {
    int i, j;
    double re, im;
    if (!(in >> i >> j >> re >> im)) throw FormatError(path + ": truncated connection file (edges)");
    if (i != mesh.edgeVertices(e, 0) || j != mesh.edgeVertices(e, 1))
      throw FormatError(path + ": edge " + std::to_string(e) + " does not match the mesh");
    rho[e] = std::atan2(im, re);
  }
  for (int f = 0; f < mesh.nFaces(); ++f) {
    int i, j, k;
    double om;
    if (!(in >> i >> j >> k >> om)) throw FormatError(path + ": truncated connection file (faces)");
    if (i != mesh.faces(f, 0) || j != mesh.faces(f, 1) || k != mesh.faces(f, 2))
      throw FormatError(path + ": face " + std::to_string(f) + " does not match the mesh");
    omega[f] = om;
  }
  return connectionFromRho(std::move(rho), std::move(omega));
}

} // namespace ims
