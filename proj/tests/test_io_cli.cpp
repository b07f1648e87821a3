#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "ims/io.hpp"
#include "ims/pipeline.hpp"
#include "test_utils.hpp"

using namespace ims;
namespace fs = std::filesystem;

namespace {

std::string tempDir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() / ("ims_cli_test_" + std::to_string(counter++));
  fs::create_directories(dir);
  return dir.string();
}

std::string writeObjFile(const MeshData& data, const std::string& path) {
  TriangleMesh mesh = buildMesh(data.positions, data.faces);
  writeObj(path, mesh);
  return path;
}

int runCli(const std::string& args) {
  std::string cmd = std::string(IMS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

TEST(Io, SectionFileRoundTrip) {
  Eigen::MatrixXcd Z = test::randomUnitDiskSection(17, 23, 5);
  std::string path = tempDir() + "/z.bin";
  writeSectionFile(path, Z);
  Eigen::MatrixXcd back = loadSectionFile(path);
  EXPECT_EQ((back - Z).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Io, TruncatedSectionFileRejected) {
  Eigen::MatrixXcd Z = test::randomUnitDiskSection(8, 8, 5);
  std::string path = tempDir() + "/trunc.bin";
  writeSectionFile(path, Z);
  std::string blob = readFile(path);
  std::ofstream out(path, std::ios::binary);
  out.write(blob.data(), static_cast<std::streamsize>(blob.size() / 2));
  out.close();
  EXPECT_THROW(loadSectionFile(path), FormatError);
}

TEST(Io, PotentialFileRoundTrip) {
  Eigen::MatrixXd V = Eigen::MatrixXd::Random(9, 14);
  std::string path = tempDir() + "/v.bin";
  writePotentialFile(path, V);
  EXPECT_EQ((loadPotentialFile(path) - V).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Io, MapFileRoundTrip) {
  std::vector<MapRecord> records(5);
  for (int i = 0; i < 5; ++i) {
    records[i].face = 3 * i + 1;
    records[i].barycentric = Eigen::Vector3d(0.2, 0.3, 0.5);
    records[i].multiZero = i == 2;
  }
  std::string path = tempDir() + "/map.txt";
  writeMapFile(path, records, 99);
  int nSrc = 0, nTgt = 0;
  auto back = loadMapFile(path, &nSrc, &nTgt);
  EXPECT_EQ(nSrc, 5);
  EXPECT_EQ(nTgt, 99);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(back[i].face, records[i].face);
    EXPECT_EQ(back[i].multiZero, records[i].multiZero);
    EXPECT_EQ(back[i].barycentric, records[i].barycentric);
  }
}

TEST(Io, LandmarkAndCurveFiles) {
  std::string dir = tempDir();
  {
    std::ofstream out(dir + "/landmarks.txt");
    out << "0 5\n3 2\n";
  }
  auto lm = loadLandmarks(dir + "/landmarks.txt", 10, 10);
  ASSERT_EQ(lm.size(), 2u);
  EXPECT_EQ(lm[1].first, 3);
  EXPECT_THROW(loadLandmarks(dir + "/landmarks.txt", 2, 10), FormatError);

  {
    std::ofstream out(dir + "/curves.txt");
    out << "curveA: 0 1 2 ; curveB: 4 5\n";
  }
  auto curves = loadCurves(dir + "/curves.txt", 10, 10);
  ASSERT_EQ(curves.size(), 1u);
  EXPECT_EQ(curves[0].curveA.size(), 3u);
  EXPECT_EQ(curves[0].curveB.size(), 2u);
}

// --- pipeline-level checks (library side of the CLI) ---

TEST(Pipeline, PrepareSurfaceFillsAndFlips) {
  std::string dir = tempDir();
  MeshData d = disk(3, 12);
  std::string path = writeObjFile(d, dir + "/disk.obj");
  PreparedSurface prep = prepareSurface(path, true);
  EXPECT_EQ(prep.boundaryCurves.size(), 1u);
  EXPECT_TRUE(prep.solve.mesh.closed());
  EXPECT_EQ(prep.inputVertices + 1, prep.solve.mesh.nVertices());
}

TEST(Pipeline, CheckCommandPassesOnSphere) {
  std::string dir = tempDir();
  RunConfig config;
  config.meshAPath = writeObjFile(icosphere(2), dir + "/sphere.obj");
  config.useIdt = true;
  EXPECT_EQ(runCheck(config), 0);
}

TEST(Pipeline, CheckCommandFlagsDegenerateSliver) {
  std::string dir = tempDir();
  MeshData d = icosphere(1);
  // squash one vertex onto the segment between two of its neighbors
  int f = 0;
  int a = d.faces(f, 0), b = d.faces(f, 1), c = d.faces(f, 2);
  d.positions.row(c) = 0.5 * (d.positions.row(a) + d.positions.row(b));
  std::string path = writeObjFile(d, dir + "/sliver.obj");
  RunConfig config;
  config.meshAPath = path;
  EXPECT_GT(runCheck(config), 0);
}

// --- CLI end-to-end ---

TEST(Cli, ExitCodesForBadInputs) {
  std::string dir = tempDir();
  std::string sphere = writeObjFile(icosphere(1), dir + "/s.obj");
  std::string torusPath = writeObjFile(torus(10, 6, 1.0, 0.3), dir + "/t.obj");

  // missing mesh: input error
  EXPECT_EQ(runCli("solve --mesh-a " + dir + "/nonexistent.obj --mesh-b " + sphere), 2);
  // wrong genus: topology error
  EXPECT_EQ(runCli("solve --mesh-a " + torusPath + " --mesh-b " + sphere), 3);
  // check on the torus reports failures
  EXPECT_EQ(runCli("check --mesh-a " + torusPath), 1);
}

TEST(Cli, SolveExtractRoundTripIsByteIdentical) {
  std::string dir = tempDir();
  MeshData a = bumpySphere(octasphere(2), 3, 0.25, 2.0);
  MeshData b = bumpySphere(octasphere(2), 4, 0.25, 2.0);
  std::string pa = writeObjFile(a, dir + "/a.obj");
  std::string pb = writeObjFile(b, dir + "/b.obj");

  std::string out1 = dir + "/run1";
  int rc = runCli("solve --mesh-a " + pa + " --mesh-b " + pb + " --anneal 20 --seed 7 --out " +
                  out1 + " --max-iterations 200");
  ASSERT_EQ(rc, 0);
  ASSERT_TRUE(fs::exists(out1 + "/map_ab.txt"));
  ASSERT_TRUE(fs::exists(out1 + "/section.bin"));
  ASSERT_TRUE(fs::exists(out1 + "/summary.json"));
  ASSERT_TRUE(fs::exists(out1 + "/trace.csv"));
  ASSERT_TRUE(fs::exists(out1 + "/transfer_texture.obj"));
  ASSERT_TRUE(fs::exists(out1 + "/transfer_geometry.obj"));

  // determinism: a second run is byte-identical
  std::string out2 = dir + "/run2";
  ASSERT_EQ(runCli("solve --mesh-a " + pa + " --mesh-b " + pb + " --anneal 20 --seed 7 --out " +
                   out2 + " --max-iterations 200"),
            0);
  EXPECT_EQ(readFile(out1 + "/map_ab.txt"), readFile(out2 + "/map_ab.txt"));
  EXPECT_EQ(readFile(out1 + "/map_ba.txt"), readFile(out2 + "/map_ba.txt"));
  EXPECT_EQ(readFile(out1 + "/section.bin"), readFile(out2 + "/section.bin"));

  // extract from the saved section reproduces the same map files
  std::string out3 = dir + "/run3";
  ASSERT_EQ(runCli("extract --mesh-a " + pa + " --mesh-b " + pb + " --section " + out1 +
                   "/section.bin --out " + out3),
            0);
  EXPECT_EQ(readFile(out1 + "/map_ab.txt"), readFile(out3 + "/map_ab.txt"));
  EXPECT_EQ(readFile(out1 + "/map_ba.txt"), readFile(out3 + "/map_ba.txt"));

  // mismatched meshes are a size error
  std::string pc = writeObjFile(icosphere(1), dir + "/c.obj");
  EXPECT_EQ(runCli("extract --mesh-a " + pc + " --mesh-b " + pb + " --section " + out1 +
                   "/section.bin --out " + dir + "/run4"),
            2);
}

TEST(Cli, ReversedOrientationTargetGivesNonIdentityMap) {
  // matching a shape against its orientation-reversed copy cannot return the
  // identity; the solver finds an orientation-compatible symmetric map
  std::string dir = tempDir();
  MeshData a = ellipsoid(octasphere(2), 1.0, 0.8, 0.65);
  MeshData b = reverseOrientation(a);
  std::string pa = writeObjFile(a, dir + "/a.obj");
  std::string pb = writeObjFile(b, dir + "/b.obj");
  std::string out = dir + "/sym";
  ASSERT_EQ(runCli("solve --mesh-a " + pa + " --mesh-b " + pb + " --anneal 20 --seed 2 --out " +
                   out + " --max-iterations 400"),
            0);
  int nSrc = 0, nTgt = 0;
  auto records = loadMapFile(out + "/map_ab.txt", &nSrc, &nTgt);
  TriangleMesh meshA = buildMesh(a.positions, a.faces);
  normalizeToUnitArea(meshA);
  TriangleMesh meshB = buildMesh(b.positions, b.faces);
  normalizeToUnitArea(meshB);
  double meanEdge = meshA.edgeLengths.mean();

  Eigen::MatrixXd images(nSrc, 3);
  for (int v = 0; v < nSrc; ++v) {
    Eigen::Vector3d img = Eigen::Vector3d::Zero();
    for (int c = 0; c < 3; ++c)
      img += records[v].barycentric[c] *
             meshB.positions.row(meshB.faces(records[v].face, c)).transpose();
    images.row(v) = img.transpose();
  }
  double identityDisp = (images - meshA.positions).rowwise().norm().mean();
  double bestReflection = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    Eigen::MatrixXd reflected = meshA.positions;
    reflected.col(axis) *= -1.0;
    bestReflection = std::min(bestReflection, (images - reflected).rowwise().norm().mean());
  }
  // the computed map is a reflection-like symmetry, not the identity
  EXPECT_GT(identityDisp, meanEdge);
  EXPECT_LT(bestReflection, 0.6 * identityDisp);
}
