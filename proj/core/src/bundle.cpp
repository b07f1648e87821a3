#include "ims/bundle.hpp"

#include <cmath>
#include <deque>

namespace ims {

namespace {
constexpr double kPi = 3.14159265358979323846;
} // namespace

Connection connectionFromRho(Eigen::VectorXd rho, Eigen::VectorXd omega) {
  Connection c;
  c.rho = std::move(rho);
  c.omega = std::move(omega);
  c.r.resize(c.rho.size());
  for (int e = 0; e < c.rho.size(); ++e) c.r[e] = std::polar(1.0, c.rho[e]);
  return c;
}

double compatibilityResidual(const Surface& s, const Connection& conn) {
  const TriangleMesh& mesh = s.mesh;
  double worst = 0.0;
  for (int f = 0; f < mesh.nFaces(); ++f) {
    Complex hol = conn.transport(mesh, 3 * f) * conn.transport(mesh, 3 * f + 1) *
                  conn.transport(mesh, 3 * f + 2);
    worst = std::max(worst, std::abs(hol - std::polar(1.0, conn.omega[f])));
  }
  return worst;
}

Connection leviCivitaConnection(const Surface& s) {
  const TriangleMesh& mesh = s.mesh;
  const IntrinsicGeometry& g = s.geom;
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(mesh.nEdges());
  for (int e = 0; e < mesh.nEdges(); ++e) {
    int h = mesh.edgeHalfedge[e];
    int t = mesh.twin[h];
    if (t < 0) continue;  // boundary edges keep trivial transport
    Complex r = -g.halfedgeDirs[t] / g.halfedgeDirs[h];
    rho[e] = std::arg(r);
  }
  Eigen::VectorXd omega(mesh.nFaces());
  for (int f = 0; f < mesh.nFaces(); ++f)
    omega[f] = g.cornerScaledAngles[3 * f] + g.cornerScaledAngles[3 * f + 1] +
               g.cornerScaledAngles[3 * f + 2] - kPi;
  return connectionFromRho(std::move(rho), std::move(omega));
}

DualPoissonSolver::DualPoissonSolver(const Surface& s, int pinnedFace, bool weighted) {
  d1_ = s.geom.d1;
  invWeights_ = weighted ? Eigen::VectorXd(s.geom.star1.cwiseInverse())
                         : Eigen::VectorXd(Eigen::VectorXd::Ones(d1_.cols()));
  SpMat K = d1_ * invWeights_.asDiagonal() * SpMat(d1_.transpose());
  K.coeffRef(pinnedFace, pinnedFace) += 1.0;
  solver_.compute(K);
  if (solver_.info() != Eigen::Success)
    throw NumericalError("dual Poisson factorization failed; the 2-form Laplacian has a "
                         "one-dimensional constant kernel which is pinned at face " +
                         std::to_string(pinnedFace));
}

Eigen::VectorXd DualPoissonSolver::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd u = solver_.solve(rhs);
  if (!u.allFinite()) throw NumericalError("dual Poisson solve produced non-finite values");
  return u;
}

Eigen::VectorXd DualPoissonSolver::oneForm(const Eigen::VectorXd& u) const {
  return invWeights_.asDiagonal() * (d1_.transpose() * u);
}

Connection surfaceConnection(const Surface& s, int anchorFace) {
  const TriangleMesh& mesh = s.mesh;
  Connection lc = leviCivitaConnection(s);
  Eigen::VectorXd omega = 0.5 * lc.omega;

  if (anchorFace < 0 || anchorFace >= mesh.nFaces())
    throw FormatError("anchor face " + std::to_string(anchorFace) + " out of range");
  Eigen::VectorXd rhs = omega;
  rhs[anchorFace] -= 2.0 * kPi;
  DualPoissonSolver poisson(s, anchorFace);
  Eigen::VectorXd alpha = poisson.oneForm(poisson.solve(rhs));
  return connectionFromRho(std::move(alpha), std::move(omega));
}

Connection prescribeCurvature(const Surface& s, const Connection& r0,
                              const Eigen::VectorXd& omegaTarget) {
  double sum0 = r0.omega.sum();
  double sumT = omegaTarget.sum();
  if (std::abs(sum0 - sumT) > 1e-9)
    throw NumericalError("prescribed curvature must keep the total: sum(omega0) = " +
                         std::to_string(sum0) + ", sum(target) = " + std::to_string(sumT));
  DualPoissonSolver poisson(s, 0);
  Eigen::VectorXd alpha = poisson.oneForm(poisson.solve(omegaTarget - r0.omega));
  return connectionFromRho(r0.rho + alpha, omegaTarget);
}

Connection vectorFieldConnection(const Surface& s, int anchorFace) {
  const TriangleMesh& mesh = s.mesh;
  Connection lc = leviCivitaConnection(s);
  Eigen::VectorXd omega = 0.5 * lc.omega;

  int chi = mesh.eulerCharacteristic();
  Eigen::VectorXd omegaTilde = lc.omega;
  omegaTilde[anchorFace] -= 2.0 * kPi * (chi - 1);

  DualPoissonSolver poisson(s, anchorFace, /*weighted=*/false);
  Eigen::VectorXd rhoTilde = poisson.oneForm(poisson.solve(omega - omegaTilde));
  return connectionFromRho(lc.rho + rhoTilde, std::move(omega));
}

Connection spinConnection(const Surface& s) {
  const TriangleMesh& mesh = s.mesh;
  Connection lc = leviCivitaConnection(s);
  Eigen::VectorXd rho = 0.5 * lc.rho;  // principal square root
  Eigen::VectorXd omega = 0.5 * lc.omega;

  // dual spanning tree; leaves-to-root sign fixing through the parent edge
  const int nF = mesh.nFaces();
  std::vector<int> parentEdge(nF, -1), order;
  {
    std::vector<char> seen(nF, 0);
    std::deque<int> queue{0};
    seen[0] = 1;
    order.push_back(0);
    while (!queue.empty()) {
      int f = queue.front();
      queue.pop_front();
      for (int c = 0; c < 3; ++c) {
        int t = mesh.twin[3 * f + c];
        if (t < 0) continue;
        int g = t / 3;
        if (seen[g]) continue;
        seen[g] = 1;
        parentEdge[g] = mesh.halfedgeEdge[3 * f + c];
        order.push_back(g);
        queue.push_back(g);
      }
    }
  }
  Connection conn = connectionFromRho(std::move(rho), std::move(omega));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int f = *it;
    if (parentEdge[f] < 0) continue;
    Complex hol = conn.transport(mesh, 3 * f) * conn.transport(mesh, 3 * f + 1) *
                  conn.transport(mesh, 3 * f + 2) * std::polar(1.0, -conn.omega[f]);
    if (hol.real() < 0.0) {
      int e = parentEdge[f];
      conn.rho[e] += kPi;
      conn.r[e] = -conn.r[e];
    }
  }
  if (compatibilityResidual(s, conn) > 1e-9)
    throw TopologyError("spin connection sign assignment failed (inconsistent cycle)");
  return conn;
}

Complex f0(double s) {
  if (std::abs(s) < 0.1) {
    double s2 = s * s;
    return {1.0 / 12.0 - s2 / 360.0 + s2 * s2 / 20160.0,
            s / 60.0 - s * s2 / 2520.0 + s * s2 * s2 / 181440.0};
  }
  Complex eis = std::polar(1.0, s);
  Complex num = Complex(-6.0 + 3.0 * s * s, -6.0 * s + s * s * s) + 6.0 * eis;
  return num / (3.0 * s * s * s * s);
}

Complex f1(double s) {
  if (std::abs(s) < 0.1) {
    double s2 = s * s;
    return {s2 / 120.0 - s2 * s2 / 2688.0 + s2 * s2 * s2 / 129600.0,
            -s / 24.0 + s * s2 / 504.0 - s * s2 * s2 / 17280.0};
  }
  Complex eis = std::polar(1.0, s);
  double s2 = s * s, s4 = s2 * s2, s5 = s4 * s;
  Complex num = Complex(3.0 + s4 / 24.0, s - s5 / 60.0) + Complex(-3.0 + s2 / 2.0, 2.0 * s) * eis;
  return num / s4;
}

Complex f2(double s) {
  if (std::abs(s) < 0.1) {
    double s2 = s * s;
    return {-0.25 + s2 / 45.0 - s2 * s2 / 1120.0 + s2 * s2 * s2 / 56700.0,
            -s / 24.0 + 5.0 * s * s2 / 1008.0 - 7.0 * s * s2 * s2 / 51840.0};
  }
  Complex eis = std::polar(1.0, s);
  double s2 = s * s, s3 = s2 * s, s4 = s2 * s2, s5 = s4 * s;
  Complex num = Complex(4.0 - s4 / 12.0, s - s3 / 6.0 + s5 / 30.0) + Complex(-4.0 + s2, 3.0 * s) * eis;
  return num / s4;
}

OperatorSet buildFemMatrices(const Surface& s, const Connection& conn) {
  const TriangleMesh& mesh = s.mesh;
  const IntrinsicGeometry& g = s.geom;
  const int nV = mesh.nVertices();

  std::vector<Eigen::Triplet<Complex>> lTrips, mTrips;
  lTrips.reserve(9 * mesh.nFaces());
  mTrips.reserve(9 * mesh.nFaces());

  for (int f = 0; f < mesh.nFaces(); ++f) {
    double area = g.faceAreas[f];
    double om = conn.omega[f];
    Complex vf0 = f0(om), vf1 = f1(om), vf2 = f2(om);
    for (int c = 0; c < 3; ++c) {
      int i = mesh.faces(f, c);
      int j = mesh.faces(f, (c + 1) % 3);
      int k = mesh.faces(f, (c + 2) % 3);
      double lij = mesh.edgeLengths[mesh.halfedgeEdge[3 * f + c]];
      double ljk = mesh.edgeLengths[mesh.halfedgeEdge[3 * f + (c + 1) % 3]];
      double lki = mesh.edgeLengths[mesh.halfedgeEdge[3 * f + (c + 2) % 3]];
      Complex rjkBar = std::conj(conn.transport(mesh, 3 * f + (c + 1) % 3));
      double alpha = 0.5 * (lij * lij - ljk * ljk + lki * lki);

      Complex wL = rjkBar / area * ((lij * lij + lki * lki) * vf1 + alpha * vf2);
      lTrips.emplace_back(j, k, wL);
      lTrips.emplace_back(k, j, std::conj(wL));
      lTrips.emplace_back(i, i,
                          (ljk * ljk + om * om * (lij * lij + alpha + lki * lki) / 90.0) /
                              (4.0 * area));

      Complex wM = area * rjkBar * vf0;
      mTrips.emplace_back(j, k, wM);
      mTrips.emplace_back(k, j, std::conj(wM));
      mTrips.emplace_back(i, i, area / 6.0);
    }
  }

  OperatorSet ops;
  ops.laplacian.resize(nV, nV);
  ops.laplacian.setFromTriplets(lTrips.begin(), lTrips.end());
  ops.mass.resize(nV, nV);
  ops.mass.setFromTriplets(mTrips.begin(), mTrips.end());
  ops.laplacianT = ops.laplacian.transpose();
  ops.massT = ops.mass.transpose();
  ops.lumpedMass = g.vertexDualAreas;
  return ops;
}

Eigen::Vector3d inFaceConnectionForm(const TriangleMesh& mesh, const Connection& conn, int f) {
  Eigen::Vector3d t;
  for (int c = 0; c < 3; ++c) t[c] = conn.transportAngle(mesh, 3 * f + c);
  double m = std::round((t.sum() - conn.omega[f]) / (2.0 * kPi));
  t[0] -= 2.0 * kPi * m;
  return t;
}

} // namespace ims
