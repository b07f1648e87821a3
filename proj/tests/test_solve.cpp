#include <gtest/gtest.h>

#include "ims/extract.hpp"
#include "ims/solve.hpp"
#include "ims/spatial.hpp"
#include "test_utils.hpp"

using namespace ims;

namespace {

struct Pair {
  Surface A, B;
  Connection connA, connB;
  OperatorSet opsA, opsB;
};

Pair makePair(const MeshData& a, const MeshData& b) {
  Pair p;
  p.A = test::makeSphereSurface(a);
  p.B = test::makeSphereSurface(b);
  p.connA = surfaceConnection(p.A);
  p.connB = surfaceConnection(p.B);
  p.opsA = buildFemMatrices(p.A, p.connA);
  p.opsB = buildFemMatrices(p.B, p.connB);
  return p;
}

} // namespace

TEST(BaseEigenvalue, NonnegativeAndMatchesDenseOracle) {
  // asymmetric bumpy meshes keep the ground level non-degenerate
  Pair p = makePair(bumpySphere(icosphere(2), 5, 0.25, 2.3), bumpySphere(octasphere(2), 6, 0.3, 1.7));
  ASSERT_LE(p.A.mesh.nVertices(), 200);
  ASSERT_LE(p.B.mesh.nVertices(), 200);

  double la = smallestPencilEigenvalue(p.opsA.laplacian, p.opsA.mass, 1e-10, 4000);
  double lb = smallestPencilEigenvalue(p.opsB.laplacian, p.opsB.mass, 1e-10, 4000);
  EXPECT_GT(la, 0.0);  // total curvature 2*pi forbids covariantly constant sections
  EXPECT_GT(lb, 0.0);

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> eigA(p.opsA.laplacian.toDense(),
                                                                  p.opsA.mass.toDense());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> eigB(p.opsB.laplacian.toDense(),
                                                                  p.opsB.mass.toDense());
  EXPECT_LT(test::relErr(la, eigA.eigenvalues()[0]), 1e-8);
  EXPECT_LT(test::relErr(lb, eigB.eigenvalues()[0]), 1e-8);
  EXPECT_GT(eigA.eigenvalues()[0], 0.0);

  double lambda0 = baseEigenvalue(p.opsA, p.opsB, 1e-10, 4000);
  EXPECT_LT(test::relErr(lambda0, eigA.eigenvalues()[0] + eigB.eigenvalues()[0]), 1e-8);
}

TEST(EigenInit, RayleighMonotoneAndMatchesDense) {
  Pair p = makePair(bumpySphere(octasphere(1), 3, 0.35, 2.0), bumpySphere(icosahedron(), 4, 0.3, 1.5));
  const int nA = p.A.mesh.nVertices(), nB = p.B.mesh.nVertices();
  ASSERT_LE(nA, 30);
  ASSERT_LE(nB, 30);

  auto [phi, psi] = nearestNeighborMaps(p.A.mesh, p.B.mesh);
  SliceConnection sc = buildSliceConnection(p.A, p.B, p.connA, p.connB, phi, psi);

  SolverConfig cfg;
  cfg.eigTol = 1e-8;
  cfg.eigMaxIterations = 4000;
  cfg.seed = 9;
  EigenInitResult res = minEigenvectorInit(p.A, p.B, sc, cfg);
  ASSERT_TRUE(res.converged);

  for (size_t k = 1; k < res.rayleighTrace.size(); ++k)
    EXPECT_LE(res.rayleighTrace[k], res.rayleighTrace[k - 1] * (1.0 + 1e-12));

  // dense oracle: assemble the slicewise operator column by column
  const long n = static_cast<long>(nA) * nB;
  Eigen::MatrixXcd H(n, n);
  Section basis = Section::Zero(nA, nB), out;
  for (long c = 0; c < n; ++c) {
    basis(c % nA, c / nA) = 1.0;
    slicewiseLaplacianApply(p.A, p.B, sc, basis, out);
    H.col(c) = Eigen::Map<const Eigen::VectorXcd>(out.data(), n);
    basis(c % nA, c / nA) = 0.0;
  }
  Eigen::VectorXd mProd(n);
  for (long c = 0; c < n; ++c)
    mProd[c] = p.A.geom.vertexDualAreas[c % nA] * p.B.geom.vertexDualAreas[c / nA];
  Eigen::MatrixXcd M = mProd.asDiagonal().toDenseMatrix().cast<Complex>();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> eig(
      0.5 * (H + H.adjoint()).eval(), M);

  EXPECT_LT(test::relErr(res.eigenvalue, eig.eigenvalues()[0]), 1e-8);

  // eigenvector angle in the mass inner product, phase-invariant
  Eigen::Map<const Eigen::VectorXcd> zFlat(res.Z.data(), n);
  Eigen::VectorXcd v1 = zFlat.normalized();
  Eigen::VectorXcd v2 = eig.eigenvectors().col(0).normalized();
  Eigen::VectorXcd mv1 = mProd.asDiagonal() * v1;
  double cosAngle = std::abs((v2.adjoint() * mv1)(0)) /
                    std::sqrt(std::abs((v1.adjoint() * (mProd.asDiagonal() * v1))(0)) *
                              std::abs((v2.adjoint() * (mProd.asDiagonal() * v2))(0)));
  EXPECT_GT(cosAngle, std::cos(1e-4));
}

TEST(EigenInit, DeterministicGivenSeed) {
  Pair p = makePair(octasphere(1), icosahedron());
  auto [phi, psi] = nearestNeighborMaps(p.A.mesh, p.B.mesh);
  SliceConnection sc = buildSliceConnection(p.A, p.B, p.connA, p.connB, phi, psi);
  SolverConfig cfg;
  cfg.seed = 3;
  EigenInitResult r1 = minEigenvectorInit(p.A, p.B, sc, cfg);
  EigenInitResult r2 = minEigenvectorInit(p.A, p.B, sc, cfg);
  EXPECT_EQ((r1.Z - r2.Z).cwiseAbs().maxCoeff(), 0.0);
}

TEST(EigenInit, ZeroSetApproximatesNearestNeighborGraph) {
  // the initializer's zero set should track the input map on a near-isometric
  // pair: extracted images within 2 mean edge lengths of the NN targets
  Pair p = makePair(icosphere(2), bumpySphere(icosphere(2), 77, 0.02, 1.5));
  auto [phi, psi] = nearestNeighborMaps(p.A.mesh, p.B.mesh);
  SliceConnection sc = buildSliceConnection(p.A, p.B, p.connA, p.connB, phi, psi);
  SolverConfig cfg;
  cfg.eigTol = 1e-8;
  EigenInitResult res = minEigenvectorInit(p.A, p.B, sc, cfg);

  double meanEdge = p.B.mesh.edgeLengths.mean();
  int good = 0, total = 0;
  for (int v = 0; v < p.A.mesh.nVertices(); ++v) {
    VertexImage im;
    try {
      im = mapVertex(p.B, p.connB, res.Z, v);
    } catch (const ExtractionError&) {
      total++;
      continue;
    }
    Eigen::Vector3d image = p.B.mesh.facePoint(im.face, im.barycentric);
    Eigen::Vector3d target =
        p.B.mesh.facePoint(phi.targetFace[v], phi.barycentric.row(v).transpose());
    if ((image - target).norm() <= 2.0 * meanEdge) good++;
    total++;
  }
  EXPECT_GE(static_cast<double>(good) / total, 0.9);
}

TEST(Minimize, EnergyNonIncreasingAndConverges) {
  Pair p = makePair(bumpySphere(octasphere(2), 1, 0.1, 2.0), bumpySphere(octasphere(2), 2, 0.1, 2.0));
  double lambda0 = baseEigenvalue(p.opsA, p.opsB, 1e-8, 2000);

  SolverConfig cfg;
  cfg.schedule = {100.0};
  cfg.maxIterations = 400;
  cfg.seed = 4;
  Section Z0 = randomSection(p.A.mesh.nVertices(), p.B.mesh.nVertices(), 4);
  PinningPotential pot;
  MinimizeResult res = minimize(p.opsA, p.opsB, Z0, cfg, pot, lambda0);

  ASSERT_GE(res.trace.size(), 2u);
  for (size_t k = 1; k < res.trace.size(); ++k)
    EXPECT_LE(res.trace[k].energy, res.trace[k - 1].energy + 1e-12);
  EXPECT_FALSE(collapseCheck(res.Z));
}

TEST(Minimize, SubcriticalLambdaCollapses) {
  Pair p = makePair(octasphere(2), icosphere(2));
  double lambda0 = baseEigenvalue(p.opsA, p.opsB, 1e-8, 2000);

  SolverConfig cfg;
  cfg.schedule = {0.5};
  cfg.gradTol = 1e-12;  // run the quadratic basin down to the critical point
  cfg.maxIterations = 1000;
  Section Z0 = randomSection(p.A.mesh.nVertices(), p.B.mesh.nVertices(), 8);
  EXPECT_FALSE(collapseCheck(Z0));
  PinningPotential pot;
  MinimizeResult res = minimize(p.opsA, p.opsB, Z0, cfg, pot, lambda0);
  EXPECT_LT(res.Z.cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_TRUE(collapseCheck(res.Z));
}

TEST(Minimize, WarmStartedStagesKeepDecreasing) {
  Pair p = makePair(octasphere(1), icosahedron());
  double lambda0 = baseEigenvalue(p.opsA, p.opsB, 1e-8, 2000);
  SolverConfig cfg;
  cfg.schedule = {10.0, 100.0};
  cfg.maxIterations = 200;
  Section Z0 = randomSection(p.A.mesh.nVertices(), p.B.mesh.nVertices(), 5);
  PinningPotential pot;
  MinimizeResult res = minimize(p.opsA, p.opsB, Z0, cfg, pot, lambda0);
  // within each stage the energy is non-increasing
  for (size_t k = 1; k < res.trace.size(); ++k) {
    if (res.trace[k].stage == res.trace[k - 1].stage)
      EXPECT_LE(res.trace[k].energy, res.trace[k - 1].energy + 1e-12);
  }
  // both stages appear
  EXPECT_EQ(res.trace.front().stage, 0);
  EXPECT_EQ(res.trace.back().stage, 1);
}

TEST(CollapseCheck, Thresholds) {
  Section big = Section::Constant(3, 3, Complex(0.5, 0.5));
  EXPECT_FALSE(collapseCheck(big));
  Section small = Section::Constant(3, 3, Complex(1e-3, 0));
  EXPECT_TRUE(collapseCheck(small));
}

TEST(RandomSection, UnitDiskAndDeterministic) {
  Section a = randomSection(20, 30, 42);
  Section b = randomSection(20, 30, 42);
  EXPECT_EQ((a - b).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE(a.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_GT(a.cwiseAbs().maxCoeff(), 0.5);  // almost surely
}
