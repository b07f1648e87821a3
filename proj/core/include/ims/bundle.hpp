#pragma once

#include <Eigen/Core>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "ims/mesh.hpp"

namespace ims {

// Discrete complex line bundle on one surface: a unit parallel-transport
// coefficient per edge (canonical orientation, r_ji = r_ij^{-1}) plus a
// compatible curvature per face: r_ki r_jk r_ij = exp(i Omega_ijk).
// rho is a real lift of the transport angles, r = exp(i rho).
struct Connection {
  Eigen::VectorXd rho;    // per edge
  Eigen::VectorXcd r;     // cached exp(i rho)
  Eigen::VectorXd omega;  // per face

  Complex transport(const TriangleMesh& mesh, int halfedge) const {
    const Complex& re = r[mesh.halfedgeEdge[halfedge]];
    return mesh.halfedgeSign[halfedge] > 0 ? re : Complex(re.real(), -re.imag());
  }
  double transportAngle(const TriangleMesh& mesh, int halfedge) const {
    double a = rho[mesh.halfedgeEdge[halfedge]];
    return mesh.halfedgeSign[halfedge] > 0 ? a : -a;
  }
};

Connection connectionFromRho(Eigen::VectorXd rho, Eigen::VectorXd omega);

// Per-face holonomy defect max_f |r_ki r_jk r_ij - exp(i Omega_f)|.
double compatibilityResidual(const Surface& s, const Connection& conn);

// Levi-Civita transport on the rescaled vertex tangent planes;
// curvature sums to 2*pi*chi.
Connection leviCivitaConnection(const Surface& s);

// The default matching bundle: curvature = half the Levi-Civita curvature
// (total 2*pi), built from the trivial bundle with a 2*pi skyscraper at
// anchorFace via a dual Poisson solve. Fibers stay globally trivialized.
Connection surfaceConnection(const Surface& s, int anchorFace = 0);

// Moves the curvature of r0 to omegaTarget (sums must agree to 1e-9) through
// the Hodge-exact offset alpha = *1^{-1} d1^T u.
Connection prescribeCurvature(const Surface& s, const Connection& r0,
                              const Eigen::VectorXd& omegaTarget);

// Levi-Civita times a minimal-norm offset form; same curvature as
// surfaceConnection (Gaussian curvature halved).
Connection vectorFieldConnection(const Surface& s, int anchorFace = 0);

// Square root of Levi-Civita with spanning-tree sign fixing.
Connection spinConnection(const Surface& s);

// FEM operators for sections of the bundle.
struct OperatorSet {
  SpMatC laplacian;            // L: Hermitian PSD
  SpMatC mass;                 // M: Hermitian PD
  SpMatC laplacianT, massT;    // cached transposes for right multiplication
  Eigen::VectorXd lumpedMass;  // scalar barycentric vertex areas
};

OperatorSet buildFemMatrices(const Surface& s, const Connection& conn);

// Helper integrals with a removable singularity at s = 0; closed forms for
// |s| >= 0.1, Taylor expansions below.
Complex f0(double s);
Complex f1(double s);
Complex f2(double s);

// In-face representative of the connection form: halfedge angles (t0,t1,t2)
// with t0+t1+t2 = Omega_f exactly; the 2*pi ambiguity is absorbed into the
// first halfedge.
Eigen::Vector3d inFaceConnectionForm(const TriangleMesh& mesh, const Connection& conn, int f);

// Poisson solves on dual 0-forms: K = d1 W^{-1} d1^T with a rank-one pin at
// pinnedFace (exact because admissible right-hand sides sum to zero).
// weighted = true uses W = *1, otherwise W = Id (plain minimal-norm offsets).
class DualPoissonSolver {
public:
  DualPoissonSolver(const Surface& s, int pinnedFace, bool weighted = true);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  // alpha = W^{-1} d1^T u
  Eigen::VectorXd oneForm(const Eigen::VectorXd& u) const;

private:
  SpMat d1_;
  Eigen::VectorXd invWeights_;
  Eigen::SimplicialLDLT<SpMat> solver_;
};

} // namespace ims
