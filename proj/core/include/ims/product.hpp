#pragma once

#include <array>
#include <vector>

#include "ims/bundle.hpp"

namespace ims {

// The implicit map: a complex matrix indexed by (vertex of A, vertex of B).
using Section = Eigen::MatrixXcd;

// E^D(Z) = 1/2 <Z, L_A Z M_B^T> + 1/2 <Z, M_A Z L_B^T> with <X,Y> = Re tr[X^dag Y].
double dirichletEnergy(const OperatorSet& opsA, const OperatorSet& opsB, const Section& Z);

// Spatially varying circular-well floor V in [0,1]; empty matrix means V == 1
// (the plain quartic well). Kernel widths are in geodesic-distance units.
struct PinningPotential {
  Eigen::MatrixXd V;
  double sigmaA = 1.0, sigmaB = 1.0;
  std::vector<std::pair<int, int>> landmarks;
  std::vector<std::pair<std::vector<int>, std::vector<int>>> curves;

  bool trivial() const { return V.size() == 0; }
  double at(int i, int j) const { return trivial() ? 1.0 : V(i, j); }
};

// Gaussian wells at landmarks and curve products, combined by pointwise min.
PinningPotential buildPinningPotential(
    const Surface& A, const Surface& B, const std::vector<std::pair<int, int>>& landmarks,
    const std::vector<std::pair<std::vector<int>, std::vector<int>>>& curves, double sigmaA,
    double sigmaB);

struct GlWorkspace {
  Eigen::MatrixXcd t1, t2;
};

// Ginzburg-Landau energy E^D + (lambda/4) <U, M_A U M_B^T>, U = |Z|^2 - V,
// and its gradient with respect to the real inner product (the convention is
// pinned by the finite-difference tests: d/dt GL(Z+tW)|_0 = <grad, W>).
double glEnergyAndGradient(const OperatorSet& opsA, const OperatorSet& opsB, const Section& Z,
                           double lambda, const PinningPotential& V, Eigen::MatrixXcd& grad,
                           GlWorkspace& ws);

// Shared sparsity of all per-slice FEM Laplacians on one surface.
struct CsrPattern {
  std::vector<int> rowPtr;  // V+1
  std::vector<int> cols;    // nnz
  std::vector<std::array<int, 3>> cornerSlots;  // per corner: slots of (j,k), (k,j), (i,i)
  int rows() const { return static_cast<int>(rowPtr.size()) - 1; }
  int nnz() const { return static_cast<int>(cols.size()); }
};

CsrPattern buildCsrPattern(const TriangleMesh& mesh);

// Product-space connection concentrating curvature along the graphs of the
// input maps phi, psi; stored as the two product-edge matrices plus cached
// per-slice FEM Laplacian values on the shared pattern.
struct SliceConnection {
  Eigen::MatrixXcd rEV;  // E_A x V_B: column v_B is the retargeted connection on A
  Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      rVE;               // V_A x E_B: row v_A is the retargeted connection on B
  std::vector<int> phi;  // target face on B per v_A
  std::vector<int> psi;  // target face on A per v_B

  CsrPattern patternA, patternB;
  Eigen::MatrixXcd sliceValuesA;  // nnzA x V_B
  Eigen::MatrixXcd sliceValuesB;  // nnzB x V_A

  void releaseCaches() {
    sliceValuesA.resize(0, 0);
    sliceValuesB.resize(0, 0);
    rEV.resize(0, 0);
    rVE.resize(0, 0);
  }
};

SliceConnection buildSliceConnection(const Surface& A, const Surface& B, const Connection& connA,
                                     const Connection& connB, const InputMap& phi,
                                     const InputMap& psi);

// Distribution variant: per-slice curvature densities (each summing to 2*pi)
// instead of single-face deltas.
SliceConnection buildSliceConnectionFromDensities(const Surface& A, const Surface& B,
                                                  const Connection& connA, const Connection& connB,
                                                  const std::vector<Eigen::VectorXd>& densityOnB,
                                                  const std::vector<Eigen::VectorXd>& densityOnA);

// Z'_{v,w} = (M_A)_vv (L_B^{(v)} Z^T)_{w,v} + (M_B)_ww (L_A^{(w)} Z)_{v,w};
// Hermitian PSD against the lumped product mass.
void slicewiseLaplacianApply(const Surface& A, const Surface& B, const SliceConnection& sc,
                             const Section& Z, Section& out);

// out = M_A Z M_B^T with the lumped (diagonal) masses.
void massApply(const Surface& A, const Surface& B, const Section& Z, Section& out);

// Parallel sparse-dense kernels (deterministic: disjoint output columns).
void spmmLeft(const SpMatC& A, const Eigen::MatrixXcd& X, Eigen::MatrixXcd& Y);
// Y = X * B^T, with BT = B.transpose() passed explicitly.
void spmmRightT(const Eigen::MatrixXcd& X, const SpMatC& BT, Eigen::MatrixXcd& Y);

} // namespace ims
