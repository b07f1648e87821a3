#include "ims/solve.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "ims/parallel.hpp"
#include "ims/rng.hpp"

namespace ims {

void validateSchedule(const std::vector<double>& schedule) {
  if (schedule.empty()) throw FormatError("annealing schedule must be nonempty");
  double prev = 0.0;
  for (double t : schedule) {
    if (!(t > 0)) throw FormatError("annealing multipliers must be positive");
    if (t < prev) throw FormatError("annealing multipliers must be nondecreasing");
    prev = t;
  }
}

double smallestPencilEigenvalue(const SpMatC& L, const SpMatC& M, double tol, int maxIterations,
                                Eigen::VectorXcd* eigenvector) {
  const int n = static_cast<int>(L.rows());
  Eigen::SimplicialLDLT<SpMatC> solver(L);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eigensolver: factorization of the connection Laplacian failed "
                         "(matching bundles have strictly positive spectrum)");

  // block subspace iteration: the ground level can be (near-)degenerate, e.g.
  // twofold on round spheres, where single-vector power iteration stalls
  const int block = std::min(3, n);
  Rng rng(0x5e11eull);
  Eigen::MatrixXcd X(n, block);
  for (int c = 0; c < block; ++c)
    for (int i = 0; i < n; ++i) X(i, c) = Complex(rng.gaussian(), rng.gaussian());

  double lambda = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < maxIterations; ++it) {
    Eigen::MatrixXcd Y(n, block);
    for (int c = 0; c < block; ++c) Y.col(c) = solver.solve(M * X.col(c));

    // M-orthonormalize, then Rayleigh-Ritz in the block
    Eigen::MatrixXcd MY = M * Y;
    Eigen::MatrixXcd G = Y.adjoint() * MY;
    G = 0.5 * (G + G.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> gEig(G);
    double gMax = gEig.eigenvalues().maxCoeff();
    if (!(gMax > 0)) throw NumericalError("eigensolver: iterate collapsed");
    Eigen::MatrixXcd T(block, block);
    int kept = 0;
    for (int c = 0; c < block; ++c) {
      if (gEig.eigenvalues()[c] > 1e-14 * gMax)
        T.col(kept++) = gEig.eigenvectors().col(c) / std::sqrt(gEig.eigenvalues()[c]);
    }
    Eigen::MatrixXcd Q = Y * T.leftCols(kept);
    Eigen::MatrixXcd H = Q.adjoint() * (L * Q);
    H = 0.5 * (H + H.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> hEig(H);
    X = Q * hEig.eigenvectors();

    lambda = hEig.eigenvalues()[0];
    Eigen::VectorXcd x = X.col(0);
    Eigen::VectorXcd r = L * x - lambda * (M * x);
    residual = r.norm() / std::max(lambda * (M * x).norm(), 1e-300);
    if (residual < tol) {
      if (eigenvector) *eigenvector = x;
      return lambda;
    }
  }
  throw NumericalError("eigensolver did not converge: relative residual " +
                       std::to_string(residual) + " after " + std::to_string(maxIterations) +
                       " iterations");
}

double baseEigenvalue(const OperatorSet& opsA, const OperatorSet& opsB, double tol,
                      int maxIterations) {
  double la = smallestPencilEigenvalue(opsA.laplacian, opsA.mass, tol, maxIterations);
  double lb = smallestPencilEigenvalue(opsB.laplacian, opsB.mass, tol, maxIterations);
  return la + lb;
}

// --- LOBPCG -----------------------------------------------------------------

namespace {

using Block = Eigen::MatrixXcd;  // n x k, columns are iterates

// Whitens S columns against round-off rank loss: S <- S T with T from the
// eigendecomposition of the Gram matrix; the same T is applied to AS.
bool whiten(Block& S, Block& AS) {
  Eigen::MatrixXcd G = S.adjoint() * S;
  G = 0.5 * (G + G.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(G);
  double maxEv = eig.eigenvalues().maxCoeff();
  if (!(maxEv > 0)) return false;
  std::vector<int> keep;
  for (int i = 0; i < G.rows(); ++i)
    if (eig.eigenvalues()[i] > 1e-12 * maxEv) keep.push_back(i);
  if (keep.empty()) return false;
  Eigen::MatrixXcd T(G.rows(), keep.size());
  for (size_t c = 0; c < keep.size(); ++c)
    T.col(c) = eig.eigenvectors().col(keep[c]) / std::sqrt(eig.eigenvalues()[keep[c]]);
  S = (S * T).eval();
  AS = (AS * T).eval();
  return true;
}

} // namespace

EigenInitResult minEigenvectorInit(const Surface& A, const Surface& B, const SliceConnection& sc,
                                   const SolverConfig& cfg) {
  const int nA = A.mesh.nVertices();
  const int nB = B.mesh.nVertices();
  const long n = static_cast<long>(nA) * nB;
  const int k = 4;  // block size

  // diagonal product mass; scale to a standard eigenproblem
  Eigen::MatrixXd dInvSqrt(nA, nB);
  for (int j = 0; j < nB; ++j)
    for (int i = 0; i < nA; ++i)
      dInvSqrt(i, j) = 1.0 / std::sqrt(A.geom.vertexDualAreas[i] * B.geom.vertexDualAreas[j]);

  Section scratchIn(nA, nB), scratchOut(nA, nB);
  auto applyA = [&](const Block& X, Block& AX) {
    AX.resize(n, X.cols());
    for (int c = 0; c < X.cols(); ++c) {
      scratchIn = Eigen::Map<const Section>(X.col(c).data(), nA, nB).cwiseProduct(dInvSqrt);
      slicewiseLaplacianApply(A, B, sc, scratchIn, scratchOut);
      scratchOut = scratchOut.cwiseProduct(dInvSqrt).eval();
      AX.col(c) = Eigen::Map<const Eigen::VectorXcd>(scratchOut.data(), n);
    }
  };

  Rng rng(cfg.seed);
  Block X(n, k);
  for (long i = 0; i < n; ++i)
    for (int c = 0; c < k; ++c) X(i, c) = Complex(rng.gaussian(), rng.gaussian());

  Block AX;
  applyA(X, AX);
  if (!whiten(X, AX)) throw NumericalError("eigensolver initialization degenerate");

  auto rayleighRitz = [&](Block& S, Block& AS, Eigen::VectorXd& thetas, int kWant) {
    Eigen::MatrixXcd H = S.adjoint() * AS;
    H = 0.5 * (H + H.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(H);
    int kOut = std::min<int>(kWant, static_cast<int>(S.cols()));
    Eigen::MatrixXcd Y = eig.eigenvectors().leftCols(kOut);
    thetas = eig.eigenvalues().head(kOut);
    Block Xn = S * Y, AXn = AS * Y;
    S = std::move(Xn);
    AS = std::move(AXn);
  };

  Eigen::VectorXd thetas;
  rayleighRitz(X, AX, thetas, k);

  EigenInitResult res;
  Block P, AP;
  int it = 0;
  double prevResidual = std::numeric_limits<double>::infinity();
  int stagnant = 0;
  for (; it < cfg.eigMaxIterations; ++it) {
    res.rayleighTrace.push_back(thetas[0]);
    Eigen::VectorXcd r0 = AX.col(0) - thetas[0] * X.col(0);
    double rel = r0.norm() / std::max(std::abs(thetas[0]), 1e-300);
    if (rel < cfg.eigTol) {
      res.converged = true;
      break;
    }
    // round-off floor: residuals that stop improving cannot be iterated away
    // without a preconditioner; return the best iterate
    stagnant = rel > 0.999 * prevResidual ? stagnant + 1 : 0;
    prevResidual = std::min(prevResidual, rel);
    if (stagnant > 40) break;

    Block R = AX - X * thetas.head(X.cols()).asDiagonal();
    // per-block orthonormalization keeps the Gram matrices well scaled even
    // when the residuals are tiny next to the unit Ritz columns
    R -= X * (X.adjoint() * R).eval();
    if (P.cols() > 0) R -= P * (P.adjoint() * R).eval();
    Block AR;
    {
      Eigen::MatrixXcd G = R.adjoint() * R;
      G = 0.5 * (G + G.adjoint()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> gEig(G);
      double gMax = gEig.eigenvalues().maxCoeff();
      if (!(gMax > 0)) break;
      Eigen::MatrixXcd T(G.rows(), G.rows());
      int kept = 0;
      for (int c = 0; c < G.rows(); ++c)
        if (gEig.eigenvalues()[c] > 1e-24 * gMax)
          T.col(kept++) = gEig.eigenvectors().col(c) / std::sqrt(gEig.eigenvalues()[c]);
      if (kept == 0) break;
      R = (R * T.leftCols(kept)).eval();
      applyA(R, AR);
    }

    Block S(n, X.cols() + R.cols() + P.cols());
    Block AS(n, S.cols());
    S.leftCols(X.cols()) = X;
    S.middleCols(X.cols(), R.cols()) = R;
    AS.leftCols(X.cols()) = AX;
    AS.middleCols(X.cols(), R.cols()) = AR;
    if (P.cols() > 0) {
      S.rightCols(P.cols()) = P;
      AS.rightCols(P.cols()) = AP;
    }

    // generalized Rayleigh-Ritz on the (well-conditioned) basis
    Eigen::MatrixXcd G = S.adjoint() * S;
    G = 0.5 * (G + G.adjoint()).eval();
    Eigen::MatrixXcd H = S.adjoint() * AS;
    H = 0.5 * (H + H.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> gCheck(G);
    if (gCheck.eigenvalues().minCoeff() < 1e-12 * gCheck.eigenvalues().maxCoeff()) {
      // drop the oldest block and retry next iteration
      if (P.cols() > 0) {
        P.resize(n, 0);
        AP.resize(n, 0);
        continue;
      }
      break;
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> eig(H, G);
    int kOut = std::min<int>(k, static_cast<int>(S.cols()));
    Eigen::MatrixXcd Y = eig.eigenvectors().leftCols(kOut);
    thetas = eig.eigenvalues().head(kOut);

    Block Xold = X, AXold = AX;
    X = S * Y;
    AX = AS * Y;

    // implicit P: the new iterates minus their projection on the old block
    Eigen::MatrixXcd C = Xold.adjoint() * X;
    P = X - Xold * C;
    AP = AX - AXold * C;
    if (!whiten(P, AP)) {
      P.resize(n, 0);
      AP.resize(n, 0);
    }
  }
  res.iterations = it;
  res.eigenvalue = thetas[0];

  // undo the diagonal scaling and normalize max |Z| = 1
  res.Z = Eigen::Map<const Section>(X.col(0).data(), nA, nB).cwiseProduct(dInvSqrt);
  double zmax = res.Z.cwiseAbs().maxCoeff();
  if (zmax > 0) {
    // also rotate the global phase so the largest entry is real positive;
    // keeps the initializer deterministic under scaling conventions
    Eigen::Index mi, mj;
    res.Z.cwiseAbs().maxCoeff(&mi, &mj);
    Complex phase = res.Z(mi, mj) / std::abs(res.Z(mi, mj));
    res.Z = (res.Z / (zmax * phase)).eval();
  }
  return res;
}

// --- L-BFGS with strong Wolfe line search ------------------------------------

namespace {

double dotReal(const Section& a, const Section& b) {
  return a.cwiseProduct(b.conjugate()).sum().real();
}

struct Objective {
  const OperatorSet& opsA;
  const OperatorSet& opsB;
  double lambda;
  const PinningPotential& V;
  GlWorkspace ws;

  double eval(const Section& Z, Eigen::MatrixXcd& grad) {
    return glEnergyAndGradient(opsA, opsB, Z, lambda, V, grad, ws);
  }
};

struct LineSearchResult {
  bool ok = false;
  double alpha = 0.0;
  double energy = 0.0;
  Section Z;
  Eigen::MatrixXcd grad;
};

// Nocedal-Wright strong Wolfe: bracket then zoom with bisection/interpolation.
LineSearchResult wolfeSearch(Objective& obj, const Section& Z0, double e0,
                             const Eigen::MatrixXcd& g0, const Section& dir, double alphaInit) {
  constexpr double c1 = 1e-4, c2 = 0.9;
  const double d0 = dotReal(g0, dir);
  LineSearchResult out;
  if (d0 >= 0) return out;

  auto phi = [&](double alpha, double& dphi, LineSearchResult& r) {
    r.Z = Z0 + alpha * dir;
    r.energy = obj.eval(r.Z, r.grad);
    r.alpha = alpha;
    dphi = dotReal(r.grad, dir);
    return r.energy;
  };

  double aPrev = 0.0, ePrev = e0, dPrev = d0;
  double a = alphaInit;
  LineSearchResult cur;
  const int maxEvals = 40;
  int evals = 0;

  auto zoom = [&](double lo, double eLo, double dLo, double hi, double eHi) -> bool {
    for (; evals < maxEvals; ++evals) {
      // cubic-ish: secant on the low side, fall back to bisection
      double mid = 0.5 * (lo + hi);
      double denom = eHi - eLo - dLo * (hi - lo);
      if (std::abs(denom) > 1e-300) {
        double quad = lo - 0.5 * dLo * (hi - lo) * (hi - lo) / denom;
        if (std::isfinite(quad) && quad > std::min(lo, hi) + 0.1 * std::abs(hi - lo) &&
            quad < std::max(lo, hi) - 0.1 * std::abs(hi - lo))
          mid = quad;
      }
      double dMid;
      double eMid = phi(mid, dMid, cur);
      if (eMid > e0 + c1 * mid * d0 || eMid >= eLo) {
        hi = mid;
        eHi = eMid;
      } else {
        if (std::abs(dMid) <= -c2 * d0) {
          out = cur;
          out.ok = true;
          return true;
        }
        if (dMid * (hi - lo) >= 0) {
          hi = lo;
          eHi = eLo;
        }
        lo = mid;
        eLo = eMid;
        dLo = dMid;
      }
      if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
    return false;
  };

  for (; evals < maxEvals; ++evals) {
    double dCur;
    double eCur = phi(a, dCur, cur);
    if (eCur > e0 + c1 * a * d0 || (evals > 0 && eCur >= ePrev))
      return zoom(aPrev, ePrev, dPrev, a, eCur) ? out : LineSearchResult{};
    if (std::abs(dCur) <= -c2 * d0) {
      out = cur;
      out.ok = true;
      return out;
    }
    if (dCur >= 0) return zoom(a, eCur, dCur, aPrev, ePrev) ? out : LineSearchResult{};
    aPrev = a;
    ePrev = eCur;
    dPrev = dCur;
    a = std::min(2.0 * a, 1e8);
  }
  return LineSearchResult{};
}

void fdGradientCheck(Objective& obj, const Section& Z, double e0, const Eigen::MatrixXcd& g0,
                     Rng& rng) {
  Eigen::MatrixXcd grad(Z.rows(), Z.cols());
  for (int trial = 0; trial < 3; ++trial) {
    Section W(Z.rows(), Z.cols());
    for (int j = 0; j < W.cols(); ++j)
      for (int i = 0; i < W.rows(); ++i) W(i, j) = rng.unitDisk();
    W /= W.norm();
    double h = 1e-5 * std::max(1.0, Z.norm());
    Section Zp = Z + h * W;
    Section Zm = Z - h * W;
    double ep = obj.eval(Zp, grad);
    double em = obj.eval(Zm, grad);
    double fd = (ep - em) / (2.0 * h);
    double an = dotReal(g0, W);
    double tol = 1e-4 * std::max(std::abs(fd), std::abs(an)) + 1e-8 * (1.0 + std::abs(e0));
    if (std::abs(fd - an) > tol)
      throw NumericalError("gradient spot check failed: fd " + std::to_string(fd) + " vs analytic " +
                           std::to_string(an));
  }
}

} // namespace

MinimizeResult minimize(const OperatorSet& opsA, const OperatorSet& opsB, const Section& Z0,
                        const SolverConfig& cfg, const PinningPotential& V, double lambda0) {
  validateSchedule(cfg.schedule);
  if (!Z0.allFinite()) throw NumericalError("initial section contains non-finite values");

  MinimizeResult res;
  res.Z = Z0;
  res.converged = true;
  Rng rng(cfg.seed ^ 0x5bf03635u);

  for (int stage = 0; stage < static_cast<int>(cfg.schedule.size()); ++stage) {
    Objective obj{opsA, opsB, cfg.schedule[stage] * lambda0, V, {}};
    Eigen::MatrixXcd grad;
    double energy = obj.eval(res.Z, grad);
    if (cfg.fdSpotCheck) fdGradientCheck(obj, res.Z, energy, grad, rng);

    std::deque<Section> sHist, yHist;
    std::deque<double> rhoHist;
    bool restarted = false;
    bool stageConverged = false;

    for (int iter = 0; iter < cfg.maxIterations; ++iter) {
      double gnorm = grad.norm();
      res.trace.push_back({stage, iter, energy, gnorm});
      if (gnorm < cfg.gradTol) {
        stageConverged = true;
        break;
      }

      // two-loop recursion
      Section q = grad;
      std::vector<double> a(sHist.size());
      for (int i = static_cast<int>(sHist.size()) - 1; i >= 0; --i) {
        a[i] = rhoHist[i] * dotReal(sHist[i], q);
        q -= a[i] * yHist[i];
      }
      if (!sHist.empty()) {
        double gamma = dotReal(sHist.back(), yHist.back()) / dotReal(yHist.back(), yHist.back());
        q *= gamma;
      }
      for (size_t i = 0; i < sHist.size(); ++i) {
        double b = rhoHist[i] * dotReal(yHist[i], q);
        q += (a[i] - b) * sHist[i];
      }
      Section dir = -q;
      if (dotReal(grad, dir) >= 0) {  // not a descent direction; reset
        dir = -grad;
        sHist.clear();
        yHist.clear();
        rhoHist.clear();
      }

      double alphaInit = sHist.empty() ? std::min(1.0, 1.0 / std::max(gnorm, 1e-12)) : 1.0;
      LineSearchResult ls = wolfeSearch(obj, res.Z, energy, grad, dir, alphaInit);
      if (!ls.ok && !restarted) {
        // restart once with steepest descent
        restarted = true;
        sHist.clear();
        yHist.clear();
        rhoHist.clear();
        dir = -grad;
        ls = wolfeSearch(obj, res.Z, energy, grad, dir, 1.0 / std::max(gnorm, 1e-12));
      }
      if (!ls.ok) {
        res.converged = false;
        res.message = "stage " + std::to_string(stage) + ": line search failed at iteration " +
                      std::to_string(iter) + " (energy " + std::to_string(energy) +
                      ", grad norm " + std::to_string(gnorm) + ")";
        break;
      }

      Section s = ls.Z - res.Z;
      Eigen::MatrixXcd y = ls.grad - grad;
      double sy = dotReal(s, y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        sHist.push_back(std::move(s));
        yHist.push_back(std::move(y));
        rhoHist.push_back(1.0 / sy);
        if (static_cast<int>(sHist.size()) > cfg.lbfgsMemory) {
          sHist.pop_front();
          yHist.pop_front();
          rhoHist.pop_front();
        }
      }
      res.Z = std::move(ls.Z);
      grad = std::move(ls.grad);
      energy = ls.energy;
      if (iter == cfg.maxIterations - 1)
        res.trace.push_back({stage, iter + 1, energy, grad.norm()});
    }
    res.converged = stageConverged;
    if (!res.message.empty()) break;
  }
  return res;
}

bool collapseCheck(const Section& Z) { return Z.cwiseAbs().maxCoeff() < 1e-2; }

Section randomSection(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Section Z(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) Z(i, j) = rng.unitDisk();
  return Z;
}

} // namespace ims
