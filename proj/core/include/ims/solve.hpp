#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ims/product.hpp"

namespace ims {

struct SolverConfig {
  std::vector<double> schedule{100.0};  // lambda = t * lambda0 per stage, nondecreasing
  int lbfgsMemory = 10;
  double gradTol = 1e-5;     // on the Frobenius norm of the gradient
  int maxIterations = 1000;  // per stage
  double eigTol = 1e-8;      // relative eigenresidual
  int eigMaxIterations = 2000;
  std::uint64_t seed = 0;
  bool fdSpotCheck = true;  // finite-difference gradient check at stage starts
};

void validateSchedule(const std::vector<double>& schedule);

// Smallest eigenvalue of the Hermitian pencil (L, M), both sparse, by inverse
// power iteration on a Cholesky factorization of L (shift-free; L is PD for
// matching bundles). Optionally returns the eigenvector.
double smallestPencilEigenvalue(const SpMatC& L, const SpMatC& M, double tol, int maxIterations,
                                Eigen::VectorXcd* eigenvector = nullptr);

// lambda0 = min-eig(L_A, M_A) + min-eig(L_B, M_B).
double baseEigenvalue(const OperatorSet& opsA, const OperatorSet& opsB, double tol = 1e-8,
                      int maxIterations = 2000);

struct EigenInitResult {
  Section Z;
  double eigenvalue = 0.0;
  std::vector<double> rayleighTrace;  // nonincreasing
  bool converged = false;
  int iterations = 0;
};

// Smallest eigenvector of (slicewise Laplacian, lumped product mass) by block
// LOBPCG (block 4, no preconditioner), matrix-free. Non-convergence returns
// the best iterate with converged = false.
EigenInitResult minEigenvectorInit(const Surface& A, const Surface& B, const SliceConnection& sc,
                                   const SolverConfig& cfg);

struct TraceRow {
  int stage = 0;
  int iter = 0;
  double energy = 0.0;
  double gradNorm = 0.0;
};

struct MinimizeResult {
  Section Z;
  std::vector<TraceRow> trace;
  bool converged = false;
  std::string message;
};

// Annealed L-BFGS on the real/imaginary decomposition with strong-Wolfe line
// search; each stage runs lambda = t * lambda0 warm-started from the last.
MinimizeResult minimize(const OperatorSet& opsA, const OperatorSet& opsB, const Section& Z0,
                        const SolverConfig& cfg, const PinningPotential& V, double lambda0);

// true iff max |Z| < 1e-2 (the all-zero critical point of the subcritical
// regime; the CLI aborts with a stability-threshold message).
bool collapseCheck(const Section& Z);

// Entries uniform over the complex unit disk, seeded.
Section randomSection(int rows, int cols, std::uint64_t seed);

} // namespace ims
