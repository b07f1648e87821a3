#include "ims/multires.hpp"

#include "ims/parallel.hpp"

namespace ims {

Section upsampleSection(const Surface& coarseA, const Surface& coarseB, const Connection& connA0,
                        const Connection& connB0, const Section& Z0, const Surface& fineA,
                        const Surface& fineB) {
  if (Z0.rows() != coarseA.mesh.nVertices() || Z0.cols() != coarseB.mesh.nVertices())
    throw FormatError("coarse section does not match the coarse meshes");

  FaceBvh bvhA(coarseA.mesh), bvhB(coarseB.mesh);
  const int nA = fineA.mesh.nVertices();
  const int nB = fineB.mesh.nVertices();

  std::vector<Eigen::Vector3cd> weightsA(nA);
  std::vector<int> faceA(nA);
  parallelFor(nA, [&](int i) {
    ClosestPointResult cp = bvhA.closestPoint(fineA.mesh.positions.row(i));
    faceA[i] = cp.face;
    weightsA[i] = femWeights(coarseA.mesh, connA0, cp.face, cp.barycentric);
  });
  std::vector<Eigen::Vector3cd> weightsB(nB);
  std::vector<int> faceB(nB);
  parallelFor(nB, [&](int j) {
    ClosestPointResult cp = bvhB.closestPoint(fineB.mesh.positions.row(j));
    faceB[j] = cp.face;
    weightsB[j] = femWeights(coarseB.mesh, connB0, cp.face, cp.barycentric);
  });

  Section Z(nA, nB);
  parallelFor(nB, [&](int j) {
    for (int i = 0; i < nA; ++i) {
      Complex z(0, 0);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          z += weightsA[i][a] * weightsB[j][b] *
               Z0(coarseA.mesh.faces(faceA[i], a), coarseB.mesh.faces(faceB[j], b));
      Z(i, j) = z;
    }
  });
  return Z;
}

std::pair<InputMap, InputMap> geometricInitialization(const Surface& coarseA,
                                                      const Surface& coarseB,
                                                      const Connection& connA0,
                                                      const Connection& connB0, const Section& Z0,
                                                      const Surface& fineA, const Surface& fineB) {
  FaceBvh bvhCoarseA(coarseA.mesh), bvhCoarseB(coarseB.mesh);
  FaceBvh bvhFineA(fineA.mesh), bvhFineB(fineB.mesh);

  InputMap phi, psi;
  phi.targetFace.resize(fineA.mesh.nVertices());
  phi.barycentric.resize(fineA.mesh.nVertices(), 3);
  psi.targetFace.resize(fineB.mesh.nVertices());
  psi.barycentric.resize(fineB.mesh.nVertices(), 3);

  std::vector<std::string> errors(fineA.mesh.nVertices() + fineB.mesh.nVertices());
  parallelFor(fineA.mesh.nVertices(), [&](int v) {
    try {
      ClosestPointResult onCoarse = bvhCoarseA.closestPoint(fineA.mesh.positions.row(v));
      VertexImage image =
          mapPoint(coarseA, coarseB, connA0, connB0, Z0, onCoarse.face, onCoarse.barycentric);
      Eigen::Vector3d p = coarseB.mesh.facePoint(image.face, image.barycentric);
      ClosestPointResult onFine = bvhFineB.closestPoint(p);
      phi.targetFace[v] = onFine.face;
      phi.barycentric.row(v) = onFine.barycentric.transpose();
    } catch (const Error& e) {
      errors[v] = e.what();
    }
  });
  parallelFor(fineB.mesh.nVertices(), [&](int v) {
    try {
      ClosestPointResult onCoarse = bvhCoarseB.closestPoint(fineB.mesh.positions.row(v));
      Eigen::Vector3cd w = femWeights(coarseB.mesh, connB0, onCoarse.face, onCoarse.barycentric);
      Eigen::VectorXcd slice = Eigen::VectorXcd::Zero(Z0.rows());
      for (int c = 0; c < 3; ++c)
        slice += w[c] * Z0.col(coarseB.mesh.faces(onCoarse.face, c));
      VertexImage image = locateSliceZero(coarseA, connA0, slice);
      Eigen::Vector3d p = coarseA.mesh.facePoint(image.face, image.barycentric);
      ClosestPointResult onFine = bvhFineA.closestPoint(p);
      psi.targetFace[v] = onFine.face;
      psi.barycentric.row(v) = onFine.barycentric.transpose();
    } catch (const Error& e) {
      errors[fineA.mesh.nVertices() + v] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw ExtractionError("geometric initialization: " + e);
  return {std::move(phi), std::move(psi)};
}

int fineAnchorForCoarse(const Surface& coarse, int coarseAnchor, const Surface& fine) {
  Eigen::Vector3d target = coarse.mesh.facePoint(coarseAnchor, Eigen::Vector3d(1, 1, 1) / 3.0);
  FaceBvh bvh(fine.mesh);
  return bvh.closestPoint(target).face;
}

} // namespace ims
