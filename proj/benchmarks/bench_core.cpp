#include <benchmark/benchmark.h>

#include "ims/bundle.hpp"
#include "ims/extract.hpp"
#include "ims/product.hpp"
#include "ims/shapes.hpp"
#include "ims/solve.hpp"

namespace {

ims::Surface sphereSurface(int level) {
  ims::MeshData data = ims::icosphere(level);
  ims::TriangleMesh mesh = ims::buildMesh(data.positions, data.faces);
  ims::normalizeToUnitArea(mesh);
  return ims::makeSurface(std::move(mesh));
}

void BM_FemAssembly(benchmark::State& state) {
  ims::Surface s = sphereSurface(static_cast<int>(state.range(0)));
  ims::Connection conn = ims::surfaceConnection(s);
  for (auto _ : state) {
    ims::OperatorSet ops = ims::buildFemMatrices(s, conn);
    benchmark::DoNotOptimize(ops.laplacian);
  }
  state.SetItemsProcessed(state.iterations() * s.mesh.nFaces());
}
BENCHMARK(BM_FemAssembly)->Arg(2)->Arg(3)->Arg(4);

void BM_GlEnergyGradient(benchmark::State& state) {
  ims::Surface a = sphereSurface(static_cast<int>(state.range(0)));
  ims::Surface b = sphereSurface(static_cast<int>(state.range(0)));
  ims::OperatorSet opsA = ims::buildFemMatrices(a, ims::surfaceConnection(a));
  ims::OperatorSet opsB = ims::buildFemMatrices(b, ims::surfaceConnection(b));
  ims::Section Z = ims::randomSection(a.mesh.nVertices(), b.mesh.nVertices(), 7);
  ims::PinningPotential pot;
  ims::GlWorkspace ws;
  Eigen::MatrixXcd grad;
  for (auto _ : state) {
    double e = ims::glEnergyAndGradient(opsA, opsB, Z, 100.0, pot, grad, ws);
    benchmark::DoNotOptimize(e);
  }
  state.SetItemsProcessed(state.iterations() * Z.size());
}
BENCHMARK(BM_GlEnergyGradient)->Arg(2)->Arg(3);

void BM_SurfaceConnection(benchmark::State& state) {
  ims::Surface s = sphereSurface(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    ims::Connection conn = ims::surfaceConnection(s);
    benchmark::DoNotOptimize(conn.r);
  }
}
BENCHMARK(BM_SurfaceConnection)->Arg(3)->Arg(4);

void BM_FindTriangleZero(benchmark::State& state) {
  Eigen::Vector3d omega(2.0, 2.0, 2.0 * 3.14159265358979 - 4.0 - 0.3);
  double Omega = 0.3;
  Eigen::Vector3d absZ(1.0, 0.7, 1.3);
  for (auto _ : state) {
    Eigen::Vector3d b = ims::findTriangleZero(omega, Omega, absZ);
    benchmark::DoNotOptimize(b);
  }
}
BENCHMARK(BM_FindTriangleZero);

} // namespace

BENCHMARK_MAIN();
