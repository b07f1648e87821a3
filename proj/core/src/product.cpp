#include "ims/product.hpp"

#include <algorithm>
#include <cmath>

#include "ims/geodesics.hpp"
#include "ims/parallel.hpp"

namespace ims {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
} // namespace

void spmmLeft(const SpMatC& A, const Eigen::MatrixXcd& X, Eigen::MatrixXcd& Y) {
  Y.resize(A.rows(), X.cols());
  parallelFor(static_cast<int>(X.cols()), [&](int j) { Y.col(j) = A * X.col(j); });
}

void spmmRightT(const Eigen::MatrixXcd& X, const SpMatC& BT, Eigen::MatrixXcd& Y) {
  Y.resize(X.rows(), BT.cols());
  parallelFor(static_cast<int>(BT.cols()), [&](int j) {
    Y.col(j).setZero();
    for (SpMatC::InnerIterator it(BT, j); it; ++it) Y.col(j) += it.value() * X.col(it.row());
  });
}

double dirichletEnergy(const OperatorSet& opsA, const OperatorSet& opsB, const Section& Z) {
  if (Z.rows() != opsA.laplacian.rows() || Z.cols() != opsB.laplacian.rows())
    throw FormatError("section is " + std::to_string(Z.rows()) + "x" + std::to_string(Z.cols()) +
                      " but operators expect " + std::to_string(opsA.laplacian.rows()) + "x" +
                      std::to_string(opsB.laplacian.rows()));
  Eigen::MatrixXcd t1, t2;
  spmmLeft(opsA.laplacian, Z, t1);
  spmmRightT(t1, opsB.massT, t2);  // L_A Z M_B^T
  double e = 0.5 * Z.cwiseProduct(t2.conjugate()).sum().real();
  spmmLeft(opsA.mass, Z, t1);
  spmmRightT(t1, opsB.laplacianT, t2);  // M_A Z L_B^T
  e += 0.5 * Z.cwiseProduct(t2.conjugate()).sum().real();
  return e;
}

double glEnergyAndGradient(const OperatorSet& opsA, const OperatorSet& opsB, const Section& Z,
                           double lambda, const PinningPotential& V, Eigen::MatrixXcd& grad,
                           GlWorkspace& ws) {
  const int nA = static_cast<int>(Z.rows());
  const int nB = static_cast<int>(Z.cols());
  if (nA != opsA.laplacian.rows() || nB != opsB.laplacian.rows())
    throw FormatError("section dimensions do not match the operator sets");
  if (!V.trivial() && (V.V.rows() != nA || V.V.cols() != nB))
    throw FormatError("pinning potential dimensions do not match the section");
  if (lambda <= 0) throw NumericalError("Ginzburg-Landau parameter must be positive");

  // Dirichlet part: grad_D = L_A Z M_B^T + M_A Z L_B^T, energy = 1/2 <Z, grad_D>
  spmmLeft(opsA.laplacian, Z, ws.t1);
  spmmRightT(ws.t1, opsB.massT, grad);
  spmmLeft(opsA.mass, Z, ws.t1);
  spmmRightT(ws.t1, opsB.laplacianT, ws.t2);
  grad += ws.t2;
  double energy = 0.5 * Z.cwiseProduct(grad.conjugate()).sum().real();

  // circular well, vertex-lumped: sum_ij mA_i mB_j (|Z_ij|^2 - V_ij)^2
  const Eigen::VectorXd& mA = opsA.lumpedMass;
  const Eigen::VectorXd& mB = opsB.lumpedMass;
  double well = 0.0;
  for (int j = 0; j < nB; ++j) {
    double colSum = 0.0;
    for (int i = 0; i < nA; ++i) {
      double u = std::norm(Z(i, j)) - V.at(i, j);
      double w = mA[i] * u;
      colSum += w * u;
      grad(i, j) += lambda * mB[j] * w * Z(i, j);
    }
    well += mB[j] * colSum;
  }
  energy += 0.25 * lambda * well;

  if (!std::isfinite(energy))
    throw NumericalError("Ginzburg-Landau energy is not finite");
  return energy;
}

PinningPotential buildPinningPotential(
    const Surface& A, const Surface& B, const std::vector<std::pair<int, int>>& landmarks,
    const std::vector<std::pair<std::vector<int>, std::vector<int>>>& curves, double sigmaA,
    double sigmaB) {
  PinningPotential pot;
  pot.sigmaA = sigmaA;
  pot.sigmaB = sigmaB;
  pot.landmarks = landmarks;
  pot.curves = curves;
  if (landmarks.empty() && curves.empty()) return pot;  // V == 1
  if (!(sigmaA > 0) || !(sigmaB > 0))
    throw FormatError("pinning kernel widths must be positive");

  const int nA = A.mesh.nVertices();
  const int nB = B.mesh.nVertices();
  GeodesicSolver geoA(A), geoB(B);

  // exp(-dA^2/(2 sigmaA^2) - dB^2/(2 sigmaB^2)) accumulated constraint-wise
  Eigen::MatrixXd best = Eigen::MatrixXd::Zero(nA, nB);
  auto accumulate = [&](const Eigen::VectorXd& dA, const Eigen::VectorXd& dB) {
    Eigen::VectorXd gA = (-dA.array().square() / (2.0 * sigmaA * sigmaA)).exp();
    Eigen::VectorXd gB = (-dB.array().square() / (2.0 * sigmaB * sigmaB)).exp();
    parallelFor(nB, [&](int j) {
      for (int i = 0; i < nA; ++i) best(i, j) = std::max(best(i, j), gA[i] * gB[j]);
    });
  };

  for (const auto& [la, lb] : landmarks)
    accumulate(geoA.distance({la}), geoB.distance({lb}));
  for (const auto& [ca, cb] : curves)
    accumulate(geoA.distanceToCurve(ca), geoB.distanceToCurve(cb));

  pot.V = 1.0 - best.array();
  return pot;
}

CsrPattern buildCsrPattern(const TriangleMesh& mesh) {
  const int nV = mesh.nVertices();
  std::vector<std::vector<int>> adj(nV);
  for (int v = 0; v < nV; ++v) adj[v].push_back(v);
  for (int e = 0; e < mesh.nEdges(); ++e) {
    int a = mesh.edgeVertices(e, 0), b = mesh.edgeVertices(e, 1);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  CsrPattern p;
  p.rowPtr.resize(nV + 1, 0);
  for (int v = 0; v < nV; ++v) {
    auto& row = adj[v];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    p.rowPtr[v + 1] = p.rowPtr[v] + static_cast<int>(row.size());
  }
  p.cols.reserve(p.rowPtr[nV]);
  for (int v = 0; v < nV; ++v) p.cols.insert(p.cols.end(), adj[v].begin(), adj[v].end());

  auto slot = [&](int r, int c) {
    auto beg = p.cols.begin() + p.rowPtr[r];
    auto end = p.cols.begin() + p.rowPtr[r + 1];
    auto it = std::lower_bound(beg, end, c);
    return static_cast<int>(it - p.cols.begin());
  };
  p.cornerSlots.resize(mesh.nHalfedges());
  for (int f = 0; f < mesh.nFaces(); ++f) {
    for (int c = 0; c < 3; ++c) {
      int i = mesh.faces(f, c), j = mesh.faces(f, (c + 1) % 3), k = mesh.faces(f, (c + 2) % 3);
      p.cornerSlots[3 * f + c] = {slot(j, k), slot(k, j), slot(i, i)};
    }
  }
  return p;
}

namespace {

// Per-slice FEM Laplacian values on the shared pattern. omega is zero except
// at a few faces (the retarget deltas), passed as (face, value) pairs.
void assembleSliceLaplacian(const TriangleMesh& mesh, const IntrinsicGeometry& geom,
                            const CsrPattern& pattern,
                            const std::function<Complex(int halfedge)>& transport,
                            const std::function<double(int face)>& omegaAt,
                            Complex* values) {
  std::fill(values, values + pattern.nnz(), Complex(0, 0));
  const Complex f1zero = f1(0.0), f2zero = f2(0.0);
  for (int f = 0; f < mesh.nFaces(); ++f) {
    double area = geom.faceAreas[f];
    double om = omegaAt(f);
    Complex vf1 = om == 0.0 ? f1zero : f1(om);
    Complex vf2 = om == 0.0 ? f2zero : f2(om);
    for (int c = 0; c < 3; ++c) {
      double lij = mesh.edgeLengths[mesh.halfedgeEdge[3 * f + c]];
      double ljk = mesh.edgeLengths[mesh.halfedgeEdge[3 * f + (c + 1) % 3]];
      double lki = mesh.edgeLengths[mesh.halfedgeEdge[3 * f + (c + 2) % 3]];
      Complex rjkBar = std::conj(transport(3 * f + (c + 1) % 3));
      double alpha = 0.5 * (lij * lij - ljk * ljk + lki * lki);
      Complex wL = rjkBar / area * ((lij * lij + lki * lki) * vf1 + alpha * vf2);
      const auto& slots = pattern.cornerSlots[3 * f + c];
      values[slots[0]] += wL;
      values[slots[1]] += std::conj(wL);
      values[slots[2]] +=
          (ljk * ljk + om * om * (lij * lij + alpha + lki * lki) / 90.0) / (4.0 * area);
    }
  }
}

// y = A x for the shared-pattern CSR slice matrices
template <typename XVec, typename YVec>
void csrApply(const CsrPattern& p, const Complex* values, const XVec& x, YVec&& y) {
  for (int r = 0; r < p.rows(); ++r) {
    Complex acc(0, 0);
    for (int s = p.rowPtr[r]; s < p.rowPtr[r + 1]; ++s) acc += values[s] * x[p.cols[s]];
    y[r] = acc;
  }
}

// Retargeted slice connections for one surface: for each slice, transport
// values of prescribeCurvature(conn, omegaTarget) without re-factorizing.
struct SliceRetargeter {
  const Surface& surface;
  const Connection& base;
  DualPoissonSolver poisson;
  Eigen::VectorXd rhsBase;  // base.omega

  SliceRetargeter(const Surface& s, const Connection& conn)
      : surface(s), base(conn), poisson(s, 0), rhsBase(conn.omega) {}

  // rho column for curvature 2*pi*delta_{face}
  Eigen::VectorXd rhoForDelta(int face) const {
    Eigen::VectorXd rhs = -rhsBase;  // 2*pi*delta_face - omega0
    rhs[face] += kTwoPi;
    return base.rho + poisson.oneForm(poisson.solve(rhs));
  }

  Eigen::VectorXd rhoForDensity(const Eigen::VectorXd& density) const {
    double sum = density.sum();
    if (std::abs(sum - kTwoPi) > 1e-9)
      throw NumericalError("slice curvature density must sum to 2*pi, got " + std::to_string(sum));
    return base.rho + poisson.oneForm(poisson.solve(density - rhsBase));
  }
};

} // namespace

SliceConnection buildSliceConnection(const Surface& A, const Surface& B, const Connection& connA,
                                     const Connection& connB, const InputMap& phi,
                                     const InputMap& psi) {
  const int nVA = A.mesh.nVertices(), nVB = B.mesh.nVertices();
  const int nEA = A.mesh.nEdges(), nEB = B.mesh.nEdges();
  if (static_cast<int>(phi.targetFace.size()) != nVA ||
      static_cast<int>(psi.targetFace.size()) != nVB)
    throw FormatError("input maps do not match the mesh sizes");
  for (int v = 0; v < nVA; ++v)
    if (phi.targetFace[v] < 0 || phi.targetFace[v] >= B.mesh.nFaces())
      throw FormatError("phi(" + std::to_string(v) + ") references a nonexistent face of B");
  for (int v = 0; v < nVB; ++v)
    if (psi.targetFace[v] < 0 || psi.targetFace[v] >= A.mesh.nFaces())
      throw FormatError("psi(" + std::to_string(v) + ") references a nonexistent face of A");

  SliceConnection sc;
  sc.phi = phi.targetFace;
  sc.psi = psi.targetFace;
  sc.patternA = buildCsrPattern(A.mesh);
  sc.patternB = buildCsrPattern(B.mesh);
  sc.rEV.resize(nEA, nVB);
  sc.rVE.resize(nVA, nEB);
  sc.sliceValuesA.resize(sc.patternA.nnz(), nVB);
  sc.sliceValuesB.resize(sc.patternB.nnz(), nVA);

  {
    SliceRetargeter retarget(B, connB);
    parallelFor(nVA, [&](int v) {
      Eigen::VectorXd rho = retarget.rhoForDelta(sc.phi[v]);
      for (int e = 0; e < nEB; ++e) sc.rVE(v, e) = std::polar(1.0, rho[e]);
      auto transport = [&](int h) {
        Complex r = sc.rVE(v, B.mesh.halfedgeEdge[h]);
        return B.mesh.halfedgeSign[h] > 0 ? r : std::conj(r);
      };
      auto omegaAt = [&](int f) { return f == sc.phi[v] ? kTwoPi : 0.0; };
      assembleSliceLaplacian(B.mesh, B.geom, sc.patternB, transport, omegaAt,
                             sc.sliceValuesB.col(v).data());
    });
  }
  {
    SliceRetargeter retarget(A, connA);
    parallelFor(nVB, [&](int v) {
      Eigen::VectorXd rho = retarget.rhoForDelta(sc.psi[v]);
      for (int e = 0; e < nEA; ++e) sc.rEV(e, v) = std::polar(1.0, rho[e]);
      auto transport = [&](int h) {
        Complex r = sc.rEV(A.mesh.halfedgeEdge[h], v);
        return A.mesh.halfedgeSign[h] > 0 ? r : std::conj(r);
      };
      auto omegaAt = [&](int f) { return f == sc.psi[v] ? kTwoPi : 0.0; };
      assembleSliceLaplacian(A.mesh, A.geom, sc.patternA, transport, omegaAt,
                             sc.sliceValuesA.col(v).data());
    });
  }
  return sc;
}

SliceConnection buildSliceConnectionFromDensities(const Surface& A, const Surface& B,
                                                  const Connection& connA, const Connection& connB,
                                                  const std::vector<Eigen::VectorXd>& densityOnB,
                                                  const std::vector<Eigen::VectorXd>& densityOnA) {
  const int nVA = A.mesh.nVertices(), nVB = B.mesh.nVertices();
  const int nEA = A.mesh.nEdges(), nEB = B.mesh.nEdges();
  if (static_cast<int>(densityOnB.size()) != nVA || static_cast<int>(densityOnA.size()) != nVB)
    throw FormatError("density lists do not match the mesh sizes");

  SliceConnection sc;
  sc.phi.assign(nVA, -1);
  sc.psi.assign(nVB, -1);
  sc.patternA = buildCsrPattern(A.mesh);
  sc.patternB = buildCsrPattern(B.mesh);
  sc.rEV.resize(nEA, nVB);
  sc.rVE.resize(nVA, nEB);
  sc.sliceValuesA.resize(sc.patternA.nnz(), nVB);
  sc.sliceValuesB.resize(sc.patternB.nnz(), nVA);

  {
    SliceRetargeter retarget(B, connB);
    parallelFor(nVA, [&](int v) {
      Eigen::VectorXd rho = retarget.rhoForDensity(densityOnB[v]);
      for (int e = 0; e < nEB; ++e) sc.rVE(v, e) = std::polar(1.0, rho[e]);
      auto transport = [&](int h) {
        Complex r = sc.rVE(v, B.mesh.halfedgeEdge[h]);
        return B.mesh.halfedgeSign[h] > 0 ? r : std::conj(r);
      };
      auto omegaAt = [&](int f) { return densityOnB[v][f]; };
      assembleSliceLaplacian(B.mesh, B.geom, sc.patternB, transport, omegaAt,
                             sc.sliceValuesB.col(v).data());
    });
  }
  {
    SliceRetargeter retarget(A, connA);
    parallelFor(nVB, [&](int v) {
      Eigen::VectorXd rho = retarget.rhoForDensity(densityOnA[v]);
      for (int e = 0; e < nEA; ++e) sc.rEV(e, v) = std::polar(1.0, rho[e]);
      auto transport = [&](int h) {
        Complex r = sc.rEV(A.mesh.halfedgeEdge[h], v);
        return A.mesh.halfedgeSign[h] > 0 ? r : std::conj(r);
      };
      auto omegaAt = [&](int f) { return densityOnA[v][f]; };
      assembleSliceLaplacian(A.mesh, A.geom, sc.patternA, transport, omegaAt,
                             sc.sliceValuesA.col(v).data());
    });
  }
  return sc;
}

void slicewiseLaplacianApply(const Surface& A, const Surface& B, const SliceConnection& sc,
                             const Section& Z, Section& out) {
  const int nVA = A.mesh.nVertices(), nVB = B.mesh.nVertices();
  if (Z.rows() != nVA || Z.cols() != nVB) throw FormatError("section does not match the meshes");
  if (sc.sliceValuesA.size() == 0 || sc.sliceValuesB.size() == 0)
    throw NumericalError("slice connection caches were released");

  const Eigen::VectorXd& mA = A.geom.vertexDualAreas;
  const Eigen::VectorXd& mB = B.geom.vertexDualAreas;

  // pass 1: B-slices (rows of Z), through the transpose for contiguous access
  Eigen::MatrixXcd Zt = Z.transpose();
  Eigen::MatrixXcd outT(nVB, nVA);
  parallelFor(nVA, [&](int v) {
    csrApply(sc.patternB, sc.sliceValuesB.col(v).data(), Zt.col(v), outT.col(v));
    outT.col(v) *= mA[v];
  });
  out = outT.transpose();

  // pass 2: A-slices (columns of Z)
  Eigen::MatrixXcd cols(nVA, nVB);
  parallelFor(nVB, [&](int w) {
    csrApply(sc.patternA, sc.sliceValuesA.col(w).data(), Z.col(w), cols.col(w));
    out.col(w) += mB[w] * cols.col(w);
  });
}

void massApply(const Surface& A, const Surface& B, const Section& Z, Section& out) {
  const Eigen::VectorXd& mA = A.geom.vertexDualAreas;
  const Eigen::VectorXd& mB = B.geom.vertexDualAreas;
  if (Z.rows() != mA.size() || Z.cols() != mB.size())
    throw FormatError("section does not match the meshes");
  out = mA.asDiagonal() * Z * mB.asDiagonal();
}

} // namespace ims
