#include "ims/extract.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "ims/parallel.hpp"
#include "ims/rng.hpp"

namespace ims {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double wrapToPi(double a) {
  // principal value in [-pi, pi)
  a = std::fmod(a + kPi, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a - kPi;
}
} // namespace

std::pair<AngularForm, IndexForm> sliceIndexForm(const Surface& s, const Connection& conn,
                                                 Eigen::VectorXcd slice) {
  const TriangleMesh& mesh = s.mesh;
  for (int v = 0; v < slice.size(); ++v)
    if (slice[v] == Complex(0, 0)) slice[v] = Complex(1e-300, 0);

  AngularForm af;
  af.omega.resize(mesh.nEdges());
  for (int e = 0; e < mesh.nEdges(); ++e) {
    int i = mesh.edgeVertices(e, 0), j = mesh.edgeVertices(e, 1);
    Complex q = slice[j] / (conn.r[e] * slice[i]);
    double w = std::arg(q);
    if (w == kPi) w = -kPi;  // arg returns (-pi, pi]; the form lives in [-pi, pi)
    af.omega[e] = w;
  }

  IndexForm idx;
  idx.ind.resize(mesh.nFaces());
  for (int f = 0; f < mesh.nFaces(); ++f) {
    double total = conn.omega[f];
    for (int c = 0; c < 3; ++c) {
      int h = 3 * f + c;
      total += mesh.halfedgeSign[h] * af.omega[mesh.halfedgeEdge[h]];
    }
    double rawIndex = total / kTwoPi;
    double rounded = std::round(rawIndex);
    if (std::abs(rawIndex - rounded) > 1e-6)
      throw ExtractionError("non-integer index " + std::to_string(rawIndex) + " on face " +
                            std::to_string(f) + " (zero crossing an edge)");
    idx.ind[f] = static_cast<int>(rounded);
  }
  return {std::move(af), std::move(idx)};
}

namespace {

// interpolant of the zero equation at homotopy state (omega, Omega)
Complex triangleInterpolant(const Eigen::Vector3d& omega, double Omega,
                            const Eigen::Vector3d& absZ, double bj, double bk) {
  double bi = 1.0 - bj - bk;
  Complex term1 = bi * absZ[0];
  Complex term2 = bj * absZ[1] * std::polar(1.0, bk * Omega + omega[0]);
  Complex term3 = bk * absZ[2] * std::polar(1.0, -(bj * Omega + omega[2]));
  return term1 + term2 + term3;
}

// one Newton solve at fixed homotopy state; returns false on divergence
bool newtonSolve(const Eigen::Vector3d& omega, double Omega, const Eigen::Vector3d& absZ,
                 double& bj, double& bk) {
  const double scale = absZ.maxCoeff();
  for (int it = 0; it < 100; ++it) {
    Complex ephiJ = std::polar(1.0, bk * Omega + omega[0]);
    Complex ephiK = std::polar(1.0, -(bj * Omega + omega[2]));
    Complex F = (1.0 - bj - bk) * absZ[0] + bj * absZ[1] * ephiJ + bk * absZ[2] * ephiK;
    if (std::abs(F) <= 1e-13 * scale) return true;
    Complex dFdbj = -absZ[0] + absZ[1] * ephiJ +
                    bk * absZ[2] * Complex(0, -Omega) * ephiK;
    Complex dFdbk = -absZ[0] + bj * absZ[1] * Complex(0, Omega) * ephiJ + absZ[2] * ephiK;
    Eigen::Matrix2d J;
    J << dFdbj.real(), dFdbk.real(), dFdbj.imag(), dFdbk.imag();
    Eigen::Vector2d rhs(-F.real(), -F.imag());
    double det = J.determinant();
    if (std::abs(det) < 1e-300) return false;
    Eigen::Vector2d step = J.inverse() * rhs;
    if (!step.allFinite()) return false;
    double nj = bj + step[0], nk = bk + step[1];
    // keep iterates in the closed simplex; damp on clamp
    if (nj < 0 || nk < 0 || nj + nk > 1) {
      nj = bj + 0.5 * step[0];
      nk = bk + 0.5 * step[1];
      nj = std::clamp(nj, 1e-12, 1.0 - 1e-12);
      nk = std::clamp(nk, 1e-12, 1.0 - 1e-12);
      if (nj + nk > 1.0 - 1e-12) {
        double excess = nj + nk - (1.0 - 1e-12);
        nj -= 0.5 * excess;
        nk -= 0.5 * excess;
      }
    }
    if (std::abs(nj - bj) + std::abs(nk - bk) < 1e-16 && std::abs(F) > 1e-10 * scale) return false;
    bj = nj;
    bk = nk;
  }
  Complex F = triangleInterpolant(omega, Omega, absZ, bj, bk);
  return std::abs(F) <= 1e-10 * scale;
}

void homotopyState(const Eigen::Vector3d& omega0, double Omega0, double t, Eigen::Vector3d& omega,
                   double& Omega) {
  double sij = omega0[0], sjk = omega0[1], ski = omega0[2];
  omega[0] = sij + (1.0 - t) / 3.0 * (Omega0 - 2.0 * sij + sjk + ski);
  omega[1] = sjk + (1.0 - t) / 3.0 * (Omega0 + sij - 2.0 * sjk + ski);
  omega[2] = ski + (1.0 - t) / 3.0 * (Omega0 + sij + sjk - 2.0 * ski);
  Omega = t * Omega0;
}

} // namespace

Eigen::Vector3d findTriangleZero(const Eigen::Vector3d& omega0, double Omega0,
                                 const Eigen::Vector3d& absZ, double* residualOut) {
  double indexSum = omega0.sum() + Omega0;
  double ind = indexSum / kTwoPi;
  if (std::abs(std::abs(ind) - 1.0) > 1e-6)
    throw ExtractionError("findTriangleZero requires a singular triangle of index +-1, got " +
                          std::to_string(ind));
  if (!(absZ.minCoeff() > 0))
    throw ExtractionError("findTriangleZero requires positive corner magnitudes");

  // t = 0: all omegas equal 2*pi*ind/3, the interpolant is linear; solve directly
  Eigen::Vector3d omega;
  double Omega;
  homotopyState(omega0, Omega0, 0.0, omega, Omega);
  double bj, bk;
  {
    Complex cj = absZ[1] * std::polar(1.0, omega[0]) - absZ[0];
    Complex ck = absZ[2] * std::polar(1.0, -omega[2]) - absZ[0];
    Eigen::Matrix2d J;
    J << cj.real(), ck.real(), cj.imag(), ck.imag();
    Eigen::Vector2d rhs(-absZ[0], 0.0);
    Eigen::Vector2d b = J.inverse() * rhs;
    bj = b[0];
    bk = b[1];
  }

  // track the zero to t = 1 with adaptive step halving
  const double minStep = 1.0 / 1024.0;
  double t = 0.0, step = 1.0 / 32.0;
  while (t < 1.0) {
    double tNext = std::min(1.0, t + step);
    homotopyState(omega0, Omega0, tNext, omega, Omega);
    for (int c = 0; c < 3; ++c) {
      if (tNext < 1.0 && !(omega[c] > -kPi && omega[c] < kPi))
        throw ExtractionError("homotopy edge form left (-pi, pi) at t = " + std::to_string(tNext));
    }
    if (std::abs(omega.sum() + Omega - indexSum) > 1e-9)
      throw ExtractionError("homotopy index conservation violated");

    double tj = bj, tk = bk;
    if (newtonSolve(omega, Omega, absZ, tj, tk)) {
      bj = tj;
      bk = tk;
      t = tNext;
      step = std::min(step * 2.0, 1.0 / 32.0);
    } else {
      step *= 0.5;
      if (step < minStep)
        throw ExtractionError("homotopy continuation stalled at t = " + std::to_string(t));
    }
  }

  if (residualOut) {
    homotopyState(omega0, Omega0, 1.0, omega, Omega);
    *residualOut =
        std::abs(triangleInterpolant(omega, Omega, absZ, bj, bk)) / absZ.maxCoeff();
  }
  double bi = std::max(0.0, 1.0 - bj - bk);
  return {bi, bj, bk};
}

VertexImage locateSliceZero(const Surface& target, const Connection& connTarget,
                            const Eigen::VectorXcd& slice) {
  const TriangleMesh& mesh = target.mesh;
  auto locate = [&](const Eigen::VectorXcd& z) {
    auto [af, idx] = sliceIndexForm(target, connTarget, z);
    int indexSum = idx.ind.sum();
    if (indexSum != 1)
      throw ExtractionError("slice index sum is " + std::to_string(indexSum) +
                            ", expected 1 for a matching bundle");

    VertexImage best;
    for (int f = 0; f < mesh.nFaces(); ++f) {
      if (idx.ind[f] == 0) continue;
      best.indexedFaces++;
      if (std::abs(idx.ind[f]) != 1) continue;  // cannot locate |ind| >= 2 analytically
      Eigen::Vector3d omega0;
      Eigen::Vector3d absZ;
      for (int c = 0; c < 3; ++c) {
        int h = 3 * f + c;
        omega0[c] = mesh.halfedgeSign[h] * af.omega[mesh.halfedgeEdge[h]];
        absZ[c] = std::abs(z[mesh.faces(f, c)]);
      }
      double residual = 0.0;
      Eigen::Vector3d bary = findTriangleZero(omega0, connTarget.omega[f], absZ, &residual);
      if (best.face < 0 || residual < best.residual) {
        best.face = f;
        best.barycentric = bary;
        best.residual = residual;
      }
    }
    if (best.face < 0) throw ExtractionError("no locatable zero on slice");
    best.multiZero = best.indexedFaces > 1;
    return best;
  };

  try {
    return locate(slice);
  } catch (const ExtractionError&) {
    // degenerate edge zero (omega = -pi): jitter the phase once and retry
    Eigen::VectorXcd jittered = slice;
    Rng rng(0x9e3779b97f4a7c15ull);
    for (int v = 0; v < jittered.size(); ++v)
      jittered[v] *= std::polar(1.0, 1e-10 * (rng.uniform() - 0.5));
    return locate(jittered);
  }
}

VertexImage mapVertex(const Surface& B, const Connection& connB, const Section& Z, int vA) {
  return locateSliceZero(B, connB, Z.row(vA).transpose());
}

Eigen::Vector3cd femWeights(const TriangleMesh& mesh, const Connection& conn, int f,
                            const Eigen::Vector3d& bary) {
  Eigen::Vector3d rho = inFaceConnectionForm(mesh, conn, f);
  Eigen::Vector3cd w;
  for (int c = 0; c < 3; ++c) {
    // phase of the straight-line transport integral from corner c to bary
    double phase = rho[c] * bary[(c + 1) % 3] - rho[(c + 2) % 3] * bary[(c + 2) % 3];
    w[c] = bary[c] * std::polar(1.0, phase);
  }
  return w;
}

VertexImage mapPoint(const Surface& A, const Surface& B, const Connection& connA,
                     const Connection& connB, const Section& Z, int faceA,
                     const Eigen::Vector3d& baryA) {
  Eigen::Vector3cd w = femWeights(A.mesh, connA, faceA, baryA);
  Eigen::VectorXcd slice = Eigen::VectorXcd::Zero(Z.cols());
  for (int c = 0; c < 3; ++c) slice += w[c] * Z.row(A.mesh.faces(faceA, c)).transpose();
  return locateSliceZero(B, connB, slice);
}

std::vector<OverlayCrossing> edgeEdgeIntersections(const Surface& A, const Surface& B,
                                                   const Connection& connA,
                                                   const Connection& connB, const Section& Z) {
  const TriangleMesh& mA = A.mesh;
  const TriangleMesh& mB = B.mesh;
  const int nEA = mA.nEdges(), nEB = mB.nEdges();

  std::vector<std::vector<OverlayCrossing>> perEdge(nEA);
  parallelFor(nEA, [&](int ea) {
    int u = mA.edgeVertices(ea, 0), v = mA.edgeVertices(ea, 1);
    Complex rA = connA.r[ea];
    for (int eb = 0; eb < nEB; ++eb) {
      int w = mB.edgeVertices(eb, 0), x = mB.edgeVertices(eb, 1);
      Complex zi = Z(u, w), zj = Z(v, w), zk = Z(v, x), zl = Z(u, x);

      // quick reject: the bilinear interpolant stays inside the convex hull
      // of the transported corner values
      Complex rB = connB.r[eb];
      Complex w0 = zi;
      Complex w1 = zj * std::conj(rA);
      Complex w2 = zk * std::conj(rA) * std::conj(rB);
      Complex w3 = zl * std::conj(rB);
      bool allRePos = w0.real() > 0 && w1.real() > 0 && w2.real() > 0 && w3.real() > 0;
      bool allReNeg = w0.real() < 0 && w1.real() < 0 && w2.real() < 0 && w3.real() < 0;
      bool allImPos = w0.imag() > 0 && w1.imag() > 0 && w2.imag() > 0 && w3.imag() > 0;
      bool allImNeg = w0.imag() < 0 && w1.imag() < 0 && w2.imag() < 0 && w3.imag() < 0;
      if (allRePos || allReNeg || allImPos || allImNeg) continue;
      if (std::abs(zi) < 1e-300) continue;

      // interpolant as s*t*a + s*b + t*c + d after dividing by z_i and the
      // corner phase; t solves a real quadratic, s follows as a quotient
      Complex uj = w1 / zi, uk = w2 / zi, ul = w3 / zi;
      Complex a = 1.0 - uj - ul + uk;
      Complex b = uj - 1.0;
      Complex c = ul - 1.0;
      Complex d = 1.0;

      double qa = (a * std::conj(c)).imag();
      double qb = (a * std::conj(d) - c * std::conj(b)).imag();
      double qc = (b * std::conj(d)).imag();

      double roots[2];
      int nRoots = 0;
      if (std::abs(qa) < 1e-14) {
        if (std::abs(qb) > 1e-300) roots[nRoots++] = -qc / qb;
      } else {
        double disc = qb * qb - 4.0 * qa * qc;
        if (disc >= 0) {
          double sq = std::sqrt(disc);
          // numerically stable pair
          double q = -0.5 * (qb + (qb >= 0 ? sq : -sq));
          roots[nRoots++] = q / qa;
          if (std::abs(q) > 1e-300) roots[nRoots++] = qc / q;
        }
      }
      double scale = std::max({1.0, std::abs(a), std::abs(b), std::abs(c)});
      for (int ri = 0; ri < nRoots; ++ri) {
        double t = roots[ri];
        if (!(t >= 0.0 && t <= 1.0)) continue;
        double den = (a * t + b).real();
        if (std::abs(den) < 1e-300) continue;
        double sVal = -(c * t + d).real() / den;
        if (!(sVal >= 0.0 && sVal <= 1.0)) continue;
        Complex resid = sVal * t * a + sVal * b + t * c + d;
        if (std::abs(resid) > 1e-9 * scale) continue;
        perEdge[ea].push_back({ea, eb, sVal, t});
      }
    }
  });

  std::vector<OverlayCrossing> out;
  for (auto& list : perEdge) out.insert(out.end(), list.begin(), list.end());
  return out;
}

CorrespondenceMap extractCorrespondence(const Surface& A, const Surface& B,
                                        const Connection& connA, const Connection& connB,
                                        const Section& Z, bool withOverlay) {
  CorrespondenceMap map;
  map.aToB.resize(A.mesh.nVertices());
  map.bToA.resize(B.mesh.nVertices());

  std::vector<std::string> errors(A.mesh.nVertices() + B.mesh.nVertices());
  parallelFor(A.mesh.nVertices(), [&](int v) {
    try {
      map.aToB[v] = mapVertex(B, connB, Z, v);
    } catch (const Error& e) {
      errors[v] = e.what();
    }
  });
  parallelFor(B.mesh.nVertices(), [&](int v) {
    try {
      map.bToA[v] = locateSliceZero(A, connA, Z.col(v));
    } catch (const Error& e) {
      errors[A.mesh.nVertices() + v] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw ExtractionError(e);

  int multiAB = 0, multiBA = 0;
  for (const auto& im : map.aToB) multiAB += im.multiZero ? 1 : 0;
  for (const auto& im : map.bToA) multiBA += im.multiZero ? 1 : 0;
  map.multiZeroFractionAB = static_cast<double>(multiAB) / A.mesh.nVertices();
  map.multiZeroFractionBA = static_cast<double>(multiBA) / B.mesh.nVertices();

  if (withOverlay) map.crossings = edgeEdgeIntersections(A, B, connA, connB, Z);
  return map;
}

DistortionReport distortionReport(const Surface& A, const Eigen::MatrixXd& imagePoints,
                                  const Eigen::MatrixXd& imageNormals,
                                  const std::vector<char>& vertexExcluded) {
  const TriangleMesh& mesh = A.mesh;
  const int nF = mesh.nFaces();
  DistortionReport rep;
  rep.sigma1 = Eigen::VectorXd::Zero(nF);
  rep.sigma2 = Eigen::VectorXd::Zero(nF);
  rep.flipped.assign(nF, 0);
  rep.excluded.assign(nF, 0);
  rep.areaSource = A.geom.totalArea;

  for (int f = 0; f < nF; ++f) {
    int vi = mesh.faces(f, 0), vj = mesh.faces(f, 1), vk = mesh.faces(f, 2);
    double area = A.geom.faceAreas[f];
    if (!vertexExcluded.empty() && (vertexExcluded[vi] || vertexExcluded[vj] || vertexExcluded[vk])) {
      rep.excluded[f] = 1;
      rep.nExcluded++;
      rep.graphArea += 2.0 * area;  // neutral contribution sigma = 1
      rep.detIntegral += area;
      rep.halfDirichlet += area;
      continue;
    }

    // source frame from intrinsic lengths
    double lij = mesh.edgeLengths[mesh.halfedgeEdge[3 * f]];
    double ljk = mesh.edgeLengths[mesh.halfedgeEdge[3 * f + 1]];
    double lki = mesh.edgeLengths[mesh.halfedgeEdge[3 * f + 2]];
    double xk = (lij * lij + lki * lki - ljk * ljk) / (2.0 * lij);
    double yk = std::sqrt(std::max(0.0, lki * lki - xk * xk));
    Eigen::Matrix2d P;
    P << lij, xk, 0.0, yk;

    // image frame in the image triangle's own plane (an isometric layout);
    // the target surface normal only decides the orientation sign
    Eigen::Vector3d qi = imagePoints.row(vi), qj = imagePoints.row(vj), qk = imagePoints.row(vk);
    Eigen::Vector3d ej = qj - qi, ek = qk - qi;
    Eigen::Vector3d windingNormal = ej.cross(ek);
    if (windingNormal.norm() < 1e-300 || ej.norm() < 1e-300) {
      rep.excluded[f] = 1;
      rep.nExcluded++;
      rep.graphArea += 2.0 * area;
      rep.detIntegral += area;
      rep.halfDirichlet += area;
      continue;
    }
    Eigen::Vector3d surfaceNormal =
        imageNormals.row(vi) + imageNormals.row(vj) + imageNormals.row(vk);
    bool flip = surfaceNormal.dot(windingNormal) < 0;
    Eigen::Vector3d e1 = ej.normalized();
    Eigen::Vector3d e2 = windingNormal.normalized().cross(e1);
    Eigen::Matrix2d Q;
    Q << e1.dot(ej), e1.dot(ek), e2.dot(ej), e2.dot(ek);
    if (flip) Q.row(1) *= -1.0;

    Eigen::Matrix2d J = Q * P.inverse();
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(J);
    double s1 = svd.singularValues()[0];
    double s2 = svd.singularValues()[1];
    rep.sigma1[f] = s1;
    rep.sigma2[f] = s2;
    rep.flipped[f] = J.determinant() < 0 ? 1 : 0;

    rep.graphArea += area * std::sqrt((1.0 + s1 * s1) * (1.0 + s2 * s2));
    rep.detIntegral += area * s1 * s2;
    rep.halfDirichlet += area * 0.5 * (s1 * s1 + s2 * s2);
    if (s2 > 1e-12) {
      rep.symmetricDirichlet +=
          area * (s1 * s1 + s2 * s2 + 1.0 / (s1 * s1) + 1.0 / (s2 * s2));
    } else {
      rep.excluded[f] = 1;
      rep.nExcluded++;
    }
  }
  return rep;
}

} // namespace ims
