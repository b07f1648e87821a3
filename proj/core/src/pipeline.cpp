#include "ims/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "ims/geodesics.hpp"
#include "ims/parallel.hpp"
#include "ims/rng.hpp"

namespace ims {

namespace {
constexpr double kPi = 3.14159265358979323846;

double now() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}
} // namespace

PreparedSurface prepareSurface(const std::string& path, bool useIdt) {
  PreparedSurface out;
  out.original = loadAndNormalize(path);
  out.inputVertices = out.original.mesh.nVertices();
  out.inputFaces = out.original.mesh.nFaces();

  FillResult filled = fillBoundaries(out.original);
  out.boundaryCurves = filled.boundaryCurves;
  if (useIdt) {
    DelaunayResult idt = intrinsicDelaunay(filled.surface);
    out.solve = std::move(idt.surface);
    out.flips = idt.flips;
  } else {
    out.solve = std::move(filled.surface);
  }
  return out;
}

MapRecord reportOnInput(const PreparedSurface& prepared, const FaceBvh& inputBvh, int solveFace,
                        const Eigen::Vector3d& bary) {
  MapRecord rec;
  if (!prepared.connectivityChanged() && solveFace < prepared.inputFaces) {
    rec.face = solveFace;
    rec.barycentric = bary;
    return rec;
  }
  Eigen::Vector3d p = prepared.solve.mesh.facePoint(solveFace, bary);
  ClosestPointResult cp = inputBvh.closestPoint(p);
  rec.face = cp.face;
  rec.barycentric = cp.barycentric;
  return rec;
}

Connection buildConnectionOfKind(const Surface& s, const std::string& kind, int anchorFace) {
  if (kind == "default") return surfaceConnection(s, anchorFace);
  if (kind == "vectorfield") return vectorFieldConnection(s, anchorFace);
  if (kind == "spin") return spinConnection(s);
  throw FormatError("unknown connection kind '" + kind + "' (default | vectorfield | spin)");
}

namespace {

struct PairContext {
  PreparedSurface A, B;
  Connection connA, connB;
  OperatorSet opsA, opsB;
};

// maps a face+barycentric given on input connectivity to a solve-mesh face
int inputFaceToSolveFace(const PreparedSurface& prepared, const FaceBvh& solveBvh, int face,
                         const Eigen::Vector3d& bary) {
  if (!prepared.connectivityChanged()) return face;
  Eigen::Vector3d p = prepared.original.mesh.facePoint(face, bary);
  return solveBvh.closestPoint(p).face;
}

InputMap convertInputMap(const PreparedSurface& source, const PreparedSurface& target,
                         const std::vector<MapRecord>& records) {
  InputMap map;
  int n = source.inputVertices;
  if (static_cast<int>(records.size()) != n)
    throw FormatError("initial map has " + std::to_string(records.size()) +
                      " records, expected " + std::to_string(n));
  map.targetFace.resize(source.solve.mesh.nVertices());
  map.barycentric.resize(source.solve.mesh.nVertices(), 3);
  FaceBvh solveBvh(target.solve.mesh);
  for (int v = 0; v < n; ++v) {
    if (records[v].face < 0 || records[v].face >= target.inputFaces)
      throw FormatError("initial map references nonexistent target face " +
                        std::to_string(records[v].face));
    map.targetFace[v] =
        inputFaceToSolveFace(target, solveBvh, records[v].face, records[v].barycentric);
    map.barycentric.row(v) = records[v].barycentric.transpose();
  }
  // boundary-cap vertices added by filling get nearest-neighbor targets
  for (int v = n; v < source.solve.mesh.nVertices(); ++v) {
    ClosestPointResult cp = solveBvh.closestPoint(source.solve.mesh.positions.row(v));
    map.targetFace[v] = cp.face;
    map.barycentric.row(v) = cp.barycentric.transpose();
  }
  return map;
}

std::vector<std::pair<int, int>> loadLandmarksChecked(const RunConfig& config,
                                                      const PairContext& ctx) {
  if (config.landmarksPath.empty()) return {};
  return loadLandmarks(config.landmarksPath, ctx.A.inputVertices, ctx.B.inputVertices);
}

std::vector<std::pair<std::vector<int>, std::vector<int>>> gatherCurves(const RunConfig& config,
                                                                        const PairContext& ctx) {
  std::vector<std::pair<std::vector<int>, std::vector<int>>> curves;
  if (!config.curvesPath.empty()) {
    for (const auto& cp : loadCurves(config.curvesPath, ctx.A.inputVertices, ctx.B.inputVertices))
      curves.emplace_back(cp.curveA, cp.curveB);
  }
  // boundaries are pinned pairwise in loop order
  size_t nA = ctx.A.boundaryCurves.size(), nB = ctx.B.boundaryCurves.size();
  if (nA != nB)
    throw TopologyError("meshes have different boundary loop counts (" + std::to_string(nA) +
                        " vs " + std::to_string(nB) + "); boundary pinning is ambiguous");
  for (size_t i = 0; i < nA; ++i) {
    auto loopA = ctx.A.boundaryCurves[i];
    auto loopB = ctx.B.boundaryCurves[i];
    loopA.push_back(loopA.front());  // closed chains
    loopB.push_back(loopB.front());
    curves.emplace_back(std::move(loopA), std::move(loopB));
  }
  return curves;
}

Section computeInitialSection(const RunConfig& config, const PairContext& ctx,
                              const SolverConfig& solverCfg) {
  if (config.randomInit)
    return randomSection(ctx.A.solve.mesh.nVertices(), ctx.B.solve.mesh.nVertices(), config.seed);

  InputMap phi, psi;
  if (!config.initMapAbPath.empty()) {
    int nSrc = 0, nTgt = 0;
    auto recs = loadMapFile(config.initMapAbPath, &nSrc, &nTgt);
    if (nSrc != ctx.A.inputVertices || nTgt != ctx.B.inputVertices)
      throw FormatError("initial map is " + std::to_string(nSrc) + "x" + std::to_string(nTgt) +
                        " but meshes have " + std::to_string(ctx.A.inputVertices) + " and " +
                        std::to_string(ctx.B.inputVertices) + " vertices");
    phi = convertInputMap(ctx.A, ctx.B, recs);
    if (!config.initMapBaPath.empty()) {
      auto recsBa = loadMapFile(config.initMapBaPath, &nSrc, &nTgt);
      if (nSrc != ctx.B.inputVertices || nTgt != ctx.A.inputVertices)
        throw FormatError("reverse initial map does not match the meshes");
      psi = convertInputMap(ctx.B, ctx.A, recsBa);
    } else {
      psi = nearestNeighborMaps(ctx.B.solve.mesh, ctx.A.solve.mesh).first;
    }
  } else {
    auto nn = nearestNeighborMaps(ctx.A.solve.mesh, ctx.B.solve.mesh);
    phi = std::move(nn.first);
    psi = std::move(nn.second);
  }

  SliceConnection sc =
      buildSliceConnection(ctx.A.solve, ctx.B.solve, ctx.connA, ctx.connB, phi, psi);
  EigenInitResult init = minEigenvectorInit(ctx.A.solve, ctx.B.solve, sc, solverCfg);
  if (!init.converged)
    std::cerr << "[ims] warning: initialization eigensolver stopped after " << init.iterations
              << " iterations (best iterate kept)\n";
  return std::move(init.Z);
}

PairContext prepareContext(const RunConfig& config, const std::string& pathA,
                           const std::string& pathB, int anchorA, int anchorB) {
  PairContext ctx;
  ctx.A = prepareSurface(pathA, config.useIdt);
  ctx.B = prepareSurface(pathB, config.useIdt);
  ctx.connA = buildConnectionOfKind(ctx.A.solve, config.connectionKind, anchorA);
  ctx.connB = buildConnectionOfKind(ctx.B.solve, config.connectionKind, anchorB);
  ctx.opsA = buildFemMatrices(ctx.A.solve, ctx.connA);
  ctx.opsB = buildFemMatrices(ctx.B.solve, ctx.connB);
  return ctx;
}

SolverConfig makeSolverConfig(const RunConfig& config) {
  SolverConfig cfg;
  cfg.schedule = config.schedule;
  cfg.gradTol = config.gradTol;
  cfg.maxIterations = config.maxIterations;
  cfg.eigTol = config.eigTol;
  cfg.eigMaxIterations = config.eigMaxIterations;
  cfg.seed = config.seed;
  validateSchedule(cfg.schedule);
  return cfg;
}

void writeTraceCsv(const std::string& path, const std::vector<TraceRow>& trace) {
  std::ofstream out(path);
  out.precision(17);
  out << "stage,iter,energy,grad_norm\n";
  for (const auto& row : trace)
    out << row.stage << ',' << row.iter << ',' << row.energy << ',' << row.gradNorm << '\n';
}

void writeDistortionCsv(const std::string& path, const DistortionReport& rep) {
  std::ofstream out(path);
  out.precision(17);
  out << "face,sigma1,sigma2,f_area,f_sym,flipped,excluded\n";
  for (int f = 0; f < rep.sigma1.size(); ++f) {
    double s1 = rep.sigma1[f], s2 = rep.sigma2[f];
    double fArea = rep.excluded[f] ? 0.0 : std::sqrt((1 + s1 * s1) * (1 + s2 * s2));
    double fSym = (rep.excluded[f] || s2 < 1e-12)
                      ? 0.0
                      : s1 * s1 + s2 * s2 + 1.0 / (s1 * s1) + 1.0 / (s2 * s2);
    out << f << ',' << s1 << ',' << s2 << ',' << fArea << ',' << fSym << ','
        << int(rep.flipped[f]) << ',' << int(rep.excluded[f]) << '\n';
  }
}

// lat-long coordinates of the normalized direction of p (the debug
// parameterization used for texture transfer; inputs are centered on load)
Eigen::Vector2d sphericalUv(const Eigen::Vector3d& p) {
  Eigen::Vector3d n = p.norm() > 1e-300 ? p.normalized() : Eigen::Vector3d(0, 0, 1);
  double u = std::atan2(n.y(), n.x()) / (2.0 * kPi) + 0.5;
  double v = std::acos(std::clamp(n.z(), -1.0, 1.0)) / kPi;
  return {u, v};
}

} // namespace

SolveStats runSolve(const RunConfig& config) {
  double tStart = now();
  setThreadCount(config.threads);
  std::filesystem::create_directories(config.outDir);
  auto outPath = [&](const std::string& name) {
    return (std::filesystem::path(config.outDir) / name).string();
  };

  SolveStats stats;

  // multiresolution: solve the coarse pair first, then transfer
  Section warmStart;
  bool haveWarmStart = false;
  InputMap fineInitPhi, fineInitPsi;
  bool haveGeometricInit = false;
  int anchorA = config.anchorFace, anchorB = config.anchorFace;

  PairContext coarse;
  bool staged = !config.coarseAPath.empty() && !config.coarseBPath.empty();

  PairContext ctx = prepareContext(config, config.meshAPath, config.meshBPath,
                                   config.anchorFace, config.anchorFace);
  stats.flipsA = ctx.A.flips;
  stats.flipsB = ctx.B.flips;

  if (staged) {
    RunConfig coarseConfig = config;
    coarseConfig.coarseAPath.clear();
    coarseConfig.coarseBPath.clear();
    coarse = prepareContext(config, config.coarseAPath, config.coarseBPath, config.anchorFace,
                            config.anchorFace);
    SolverConfig coarseSolver = makeSolverConfig(config);

    // landmarks/curves transfer to the coarse level by nearest vertices
    auto nearestVertex = [](const Surface& s, const Eigen::Vector3d& p) {
      int best = 0;
      double bestD = std::numeric_limits<double>::infinity();
      for (int v = 0; v < s.mesh.nVertices(); ++v) {
        double d = (s.mesh.positions.row(v).transpose() - p).squaredNorm();
        if (d < bestD) {
          bestD = d;
          best = v;
        }
      }
      return best;
    };
    std::vector<std::pair<int, int>> coarseLandmarks;
    for (auto& [la, lb] : loadLandmarksChecked(config, ctx)) {
      coarseLandmarks.emplace_back(
          nearestVertex(coarse.A.solve, ctx.A.original.mesh.positions.row(la)),
          nearestVertex(coarse.B.solve, ctx.B.original.mesh.positions.row(lb)));
    }
    PinningPotential coarsePot =
        buildPinningPotential(coarse.A.solve, coarse.B.solve, coarseLandmarks, {},
                              config.sigmaA, config.sigmaB);

    Section coarseZ0 = computeInitialSection(config, coarse, coarseSolver);
    double coarseLambda0 = baseEigenvalue(coarse.opsA, coarse.opsB, config.eigTol,
                                          config.eigMaxIterations);
    MinimizeResult coarseRes =
        minimize(coarse.opsA, coarse.opsB, coarseZ0, coarseSolver, coarsePot, coarseLambda0);

    if (config.connectionKind == "default") {
      // anchor containment, then rebuild the fine connections around it
      anchorA = fineAnchorForCoarse(coarse.A.solve, config.anchorFace, ctx.A.solve);
      anchorB = fineAnchorForCoarse(coarse.B.solve, config.anchorFace, ctx.B.solve);
      ctx.connA = buildConnectionOfKind(ctx.A.solve, config.connectionKind, anchorA);
      ctx.connB = buildConnectionOfKind(ctx.B.solve, config.connectionKind, anchorB);
      ctx.opsA = buildFemMatrices(ctx.A.solve, ctx.connA);
      ctx.opsB = buildFemMatrices(ctx.B.solve, ctx.connB);
      warmStart = upsampleSection(coarse.A.solve, coarse.B.solve, coarse.connA, coarse.connB,
                                  coarseRes.Z, ctx.A.solve, ctx.B.solve);
      haveWarmStart = true;
    } else {
      std::tie(fineInitPhi, fineInitPsi) =
          geometricInitialization(coarse.A.solve, coarse.B.solve, coarse.connA, coarse.connB,
                                  coarseRes.Z, ctx.A.solve, ctx.B.solve);
      haveGeometricInit = true;
    }
  }

  // pinning potential (landmarks, curves, pinned boundaries)
  auto landmarks = loadLandmarksChecked(config, ctx);
  auto curves = gatherCurves(config, ctx);
  PinningPotential pot = buildPinningPotential(ctx.A.solve, ctx.B.solve, landmarks, curves,
                                               config.sigmaA, config.sigmaB);
  if (config.writePotential && !pot.trivial())
    writePotentialFile(outPath("potential.bin"), pot.V);

  SolverConfig solverCfg = makeSolverConfig(config);

  Section Z0;
  if (haveWarmStart) {
    Z0 = std::move(warmStart);
  } else if (haveGeometricInit) {
    SliceConnection sc =
        buildSliceConnection(ctx.A.solve, ctx.B.solve, ctx.connA, ctx.connB, fineInitPhi,
                             fineInitPsi);
    EigenInitResult init = minEigenvectorInit(ctx.A.solve, ctx.B.solve, sc, solverCfg);
    Z0 = std::move(init.Z);
  } else {
    Z0 = computeInitialSection(config, ctx, solverCfg);
  }

  stats.lambda0 = baseEigenvalue(ctx.opsA, ctx.opsB, config.eigTol, config.eigMaxIterations);

  MinimizeResult res = minimize(ctx.opsA, ctx.opsB, Z0, solverCfg, pot, stats.lambda0);
  stats.minimizerConverged = res.converged;
  if (!res.trace.empty()) stats.finalEnergy = res.trace.back().energy;
  writeTraceCsv(outPath("trace.csv"), res.trace);
  writeSectionFile(outPath("section.bin"), res.Z);
  writeConnectionFile(outPath("connection_a.txt"), ctx.A.solve.mesh, ctx.connA);
  writeConnectionFile(outPath("connection_b.txt"), ctx.B.solve.mesh, ctx.connB);

  if (collapseCheck(res.Z))
    throw NumericalError(
        "section collapsed to zero: lambda below the stability threshold (increase the "
        "annealing multipliers)");

  // extraction on the solve meshes, reported on the input meshes
  CorrespondenceMap map = extractCorrespondence(ctx.A.solve, ctx.B.solve, ctx.connA, ctx.connB,
                                                res.Z, config.writeOverlay);

  FaceBvh inputBvhA(ctx.A.original.mesh), inputBvhB(ctx.B.original.mesh);
  std::vector<MapRecord> mapAB(ctx.A.inputVertices), mapBA(ctx.B.inputVertices);
  int multiAB = 0, multiBA = 0;
  for (int v = 0; v < ctx.A.inputVertices; ++v) {
    mapAB[v] = reportOnInput(ctx.B, inputBvhB, map.aToB[v].face, map.aToB[v].barycentric);
    mapAB[v].multiZero = map.aToB[v].multiZero;
    multiAB += mapAB[v].multiZero ? 1 : 0;
  }
  for (int v = 0; v < ctx.B.inputVertices; ++v) {
    mapBA[v] = reportOnInput(ctx.A, inputBvhA, map.bToA[v].face, map.bToA[v].barycentric);
    mapBA[v].multiZero = map.bToA[v].multiZero;
    multiBA += mapBA[v].multiZero ? 1 : 0;
  }
  stats.multiZeroPctAB = 100.0 * multiAB / ctx.A.inputVertices;
  stats.multiZeroPctBA = 100.0 * multiBA / ctx.B.inputVertices;

  writeMapFile(outPath("map_ab.txt"), mapAB, ctx.B.inputVertices);
  writeMapFile(outPath("map_ba.txt"), mapBA, ctx.A.inputVertices);
  if (config.writeOverlay) writeOverlayFile(outPath("overlay.txt"), map.crossings);

  // distortion of A -> B on the input connectivity
  Eigen::MatrixXd imagePoints(ctx.A.inputVertices, 3), imageNormals(ctx.A.inputVertices, 3);
  std::vector<char> excluded(ctx.A.inputVertices, 0);
  for (int v = 0; v < ctx.A.inputVertices; ++v) {
    imagePoints.row(v) =
        ctx.B.original.mesh.facePoint(mapAB[v].face, mapAB[v].barycentric).transpose();
    imageNormals.row(v) = ctx.B.original.mesh.faceNormal(mapAB[v].face).transpose();
    excluded[v] = mapAB[v].multiZero ? 1 : 0;
  }
  DistortionReport distortion =
      distortionReport(ctx.A.original, imagePoints, imageNormals, excluded);
  stats.graphArea = distortion.graphArea;
  stats.sandwichHolds = distortion.sandwichHolds();
  writeDistortionCsv(outPath("distortion_ab.csv"), distortion);

  // landmark error report (geodesic distance from image to the target vertex)
  if (!landmarks.empty()) {
    GeodesicSolver geoB(ctx.B.original);
    for (auto& [la, lb] : landmarks) {
      Eigen::VectorXd d = geoB.distance({lb});
      // distance field is per-vertex; interpolate at the image point
      const MapRecord& rec = mapAB[la];
      double di = 0.0;
      for (int c = 0; c < 3; ++c)
        di += rec.barycentric[c] * d[ctx.B.original.mesh.faces(rec.face, c)];
      stats.landmarkErrors.push_back(di);
    }
  }

  // texture + geometry transfer
  {
    Eigen::MatrixX2d uv(ctx.A.inputVertices, 2);
    for (int v = 0; v < ctx.A.inputVertices; ++v)
      uv.row(v) = sphericalUv(imagePoints.row(v)).transpose();
    writeObj(outPath("transfer_texture.obj"), ctx.A.original.mesh, &uv);

    TriangleMesh moved = ctx.A.original.mesh;
    moved.positions = imagePoints;
    writeObj(outPath("transfer_geometry.obj"), moved);
  }

  stats.wallSeconds = now() - tStart;

  // summary
  {
    nlohmann::json j;
    j["mesh_a"] = {{"path", config.meshAPath},
                   {"vertices", ctx.A.inputVertices},
                   {"faces", ctx.A.inputFaces},
                   {"flips", ctx.A.flips},
                   {"boundary_loops", ctx.A.boundaryCurves.size()}};
    j["mesh_b"] = {{"path", config.meshBPath},
                   {"vertices", ctx.B.inputVertices},
                   {"faces", ctx.B.inputFaces},
                   {"flips", ctx.B.flips},
                   {"boundary_loops", ctx.B.boundaryCurves.size()}};
    j["connection"] = config.connectionKind;
    j["anchor_face_a"] = anchorA;
    j["anchor_face_b"] = anchorB;
    j["schedule"] = config.schedule;
    j["seed"] = config.seed;
    j["idt"] = config.useIdt;
    j["lambda0"] = stats.lambda0;
    j["final_energy"] = stats.finalEnergy;
    j["minimizer_converged"] = stats.minimizerConverged;
    j["multi_zero_pct_ab"] = stats.multiZeroPctAB;
    j["multi_zero_pct_ba"] = stats.multiZeroPctBA;
    j["graph_area"] = distortion.graphArea;
    j["symmetric_dirichlet"] = distortion.symmetricDirichlet;
    j["det_integral"] = distortion.detIntegral;
    j["half_dirichlet"] = distortion.halfDirichlet;
    j["area_sandwich_holds"] = stats.sandwichHolds;
    j["excluded_faces"] = distortion.nExcluded;
    if (!stats.landmarkErrors.empty()) j["landmark_errors"] = stats.landmarkErrors;
    j["overlay_crossings"] = map.crossings.size();
    j["wall_seconds"] = stats.wallSeconds;
    std::ofstream out(outPath("summary.json"));
    out << j.dump(2) << '\n';
  }
  return stats;
}

void runExtract(const RunConfig& config, const std::string& sectionPath) {
  setThreadCount(config.threads);
  std::filesystem::create_directories(config.outDir);
  auto outPath = [&](const std::string& name) {
    return (std::filesystem::path(config.outDir) / name).string();
  };

  PairContext ctx = prepareContext(config, config.meshAPath, config.meshBPath, config.anchorFace,
                                   config.anchorFace);
  Section Z = loadSectionFile(sectionPath);
  if (Z.rows() != ctx.A.solve.mesh.nVertices() || Z.cols() != ctx.B.solve.mesh.nVertices())
    throw FormatError("section is " + std::to_string(Z.rows()) + "x" + std::to_string(Z.cols()) +
                      " but the prepared meshes have " +
                      std::to_string(ctx.A.solve.mesh.nVertices()) + " and " +
                      std::to_string(ctx.B.solve.mesh.nVertices()) + " vertices");

  CorrespondenceMap map =
      extractCorrespondence(ctx.A.solve, ctx.B.solve, ctx.connA, ctx.connB, Z, config.writeOverlay);

  FaceBvh inputBvhA(ctx.A.original.mesh), inputBvhB(ctx.B.original.mesh);
  std::vector<MapRecord> mapAB(ctx.A.inputVertices), mapBA(ctx.B.inputVertices);
  for (int v = 0; v < ctx.A.inputVertices; ++v) {
    mapAB[v] = reportOnInput(ctx.B, inputBvhB, map.aToB[v].face, map.aToB[v].barycentric);
    mapAB[v].multiZero = map.aToB[v].multiZero;
  }
  for (int v = 0; v < ctx.B.inputVertices; ++v) {
    mapBA[v] = reportOnInput(ctx.A, inputBvhA, map.bToA[v].face, map.bToA[v].barycentric);
    mapBA[v].multiZero = map.bToA[v].multiZero;
  }
  writeMapFile(outPath("map_ab.txt"), mapAB, ctx.B.inputVertices);
  writeMapFile(outPath("map_ba.txt"), mapBA, ctx.A.inputVertices);
  if (config.writeOverlay) writeOverlayFile(outPath("overlay.txt"), map.crossings);
}

namespace {

struct CheckReport {
  int failures = 0;
  void report(bool pass, const std::string& name, const std::string& detail = "") {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << name;
    if (!detail.empty()) std::cout << ": " << detail;
    std::cout << '\n';
    if (!pass) failures++;
  }
};

void checkMesh(CheckReport& rep, const std::string& label, const std::string& path, bool useIdt) {
  Surface s;
  try {
    s = loadAndNormalize(path);
    rep.report(true, label + " load+manifold+genus");
  } catch (const Error& e) {
    rep.report(false, label + " load+manifold+genus", e.what());
    return;
  }
  const TriangleMesh& mesh = s.mesh;

  {  // near-degenerate triangles
    int bad = -1;
    for (int f = 0; f < mesh.nFaces() && bad < 0; ++f) {
      double a = mesh.edgeLengths[mesh.halfedgeEdge[3 * f]];
      double b = mesh.edgeLengths[mesh.halfedgeEdge[3 * f + 1]];
      double c = mesh.edgeLengths[mesh.halfedgeEdge[3 * f + 2]];
      double longest = std::max({a, b, c});
      if (a + b + c - 2 * longest <= 1e-9 * longest) bad = f;
    }
    rep.report(bad < 0, label + " triangle inequality",
               bad < 0 ? "" : "face " + std::to_string(bad) + " is degenerate");
  }

  PreparedSurface prepared;
  try {
    prepared = prepareSurface(path, useIdt);
  } catch (const Error& e) {
    rep.report(false, label + " preprocessing", e.what());
    return;
  }
  const Surface& solve = prepared.solve;
  int chi = solve.mesh.eulerCharacteristic();

  {  // Gauss-Bonnet over rescaled angles
    double total = 0.0;
    for (int f = 0; f < solve.mesh.nFaces(); ++f)
      total += solve.geom.cornerScaledAngles[3 * f] + solve.geom.cornerScaledAngles[3 * f + 1] +
               solve.geom.cornerScaledAngles[3 * f + 2] - kPi;
    rep.report(std::abs(total - 2.0 * kPi * chi) < 1e-9, label + " Gauss-Bonnet",
               "sum " + std::to_string(total));
  }

  {  // d1 structure
    bool ok = true;
    for (int e = 0; e < solve.mesh.nEdges() && ok; ++e) {
      int nnz = 0;
      double sum = 0;
      for (SpMat::InnerIterator it(solve.geom.d1, e); it; ++it) {
        nnz++;
        sum += it.value();
      }
      if (nnz == 2 && std::abs(sum) > 1e-15) ok = false;
      if (nnz == 0 || nnz > 2) ok = false;
    }
    rep.report(ok, label + " d1 incidence structure");
  }

  {
    Connection lc = leviCivitaConnection(solve);
    double sum = lc.omega.sum();
    rep.report(std::abs(sum - 2.0 * kPi * chi) < 1e-9, label + " Levi-Civita curvature sum",
               std::to_string(sum / kPi) + " pi");
    rep.report(compatibilityResidual(solve, lc) < 1e-9, label + " Levi-Civita compatibility");
  }

  Connection conn;
  try {
    conn = surfaceConnection(solve, 0);
    double sum = conn.omega.sum();
    rep.report(std::abs(sum - 2.0 * kPi) < 1e-9, label + " matching-bundle curvature sum",
               std::to_string(sum / kPi) + " pi");
    rep.report(compatibilityResidual(solve, conn) < 1e-9, label + " matching-bundle compatibility");
  } catch (const Error& e) {
    rep.report(false, label + " surface connection", e.what());
    return;
  }

  {  // trivial-connection FEM reduction to cotan + Galerkin mass
    Connection trivial =
        connectionFromRho(Eigen::VectorXd::Zero(solve.mesh.nEdges()),
                          Eigen::VectorXd::Zero(solve.mesh.nFaces()));
    OperatorSet ops = buildFemMatrices(solve, trivial);
    double worstL = 0.0, worstM = 0.0;
    // independent assemblies
    std::vector<Eigen::Triplet<double>> lt, mt;
    for (int h = 0; h < solve.mesh.nHalfedges(); ++h) {
      double w = 0.5 / std::tan(solve.geom.cornerAngles[TriangleMesh::prev(h)]);
      int i = solve.mesh.tail(h), j = solve.mesh.head(h);
      lt.emplace_back(i, j, -w);
      lt.emplace_back(j, i, -w);
      lt.emplace_back(i, i, w);
      lt.emplace_back(j, j, w);
      double m = solve.geom.faceAreas[TriangleMesh::faceOf(h)] / 12.0;
      mt.emplace_back(i, j, m);
      mt.emplace_back(j, i, m);
      mt.emplace_back(i, i, m);
      mt.emplace_back(j, j, m);
    }
    SpMat L(solve.mesh.nVertices(), solve.mesh.nVertices()), M = L;
    L.setFromTriplets(lt.begin(), lt.end());
    M.setFromTriplets(mt.begin(), mt.end());
    for (int k = 0; k < ops.laplacian.outerSize(); ++k) {
      for (SpMatC::InnerIterator it(ops.laplacian, k); it; ++it) {
        double ref = L.coeff(it.row(), it.col());
        worstL = std::max(worstL, std::abs(it.value() - Complex(ref, 0)) /
                                      std::max(1e-30, std::abs(ref)));
      }
      for (SpMatC::InnerIterator it(ops.mass, k); it; ++it) {
        double ref = M.coeff(it.row(), it.col());
        worstM = std::max(worstM, std::abs(it.value() - Complex(ref, 0)) /
                                      std::max(1e-30, std::abs(ref)));
      }
    }
    rep.report(worstL < 1e-12 && worstM < 1e-12, label + " FEM trivial reduction",
               "laplacian " + std::to_string(worstL) + ", mass " + std::to_string(worstM));
  }
}

} // namespace

int runCheck(const RunConfig& config) {
  setThreadCount(config.threads);
  CheckReport rep;

  rep.report(std::abs(f0(0.0) - Complex(1.0 / 12.0, 0)) < 1e-15 &&
                 std::abs(f1(0.0)) < 1e-15 && std::abs(f2(0.0) - Complex(-0.25, 0)) < 1e-15,
             "interpolation helper values at 0");
  {
    double worst = 0.0;
    for (double sgn : {-1.0, 1.0}) {
      double at = sgn * 0.1;
      worst = std::max(worst, std::abs(f0(at * (1 - 1e-14)) - f0(at * (1 + 1e-14))));
      worst = std::max(worst, std::abs(f1(at * (1 - 1e-14)) - f1(at * (1 + 1e-14))));
      worst = std::max(worst, std::abs(f2(at * (1 - 1e-14)) - f2(at * (1 + 1e-14))));
    }
    rep.report(worst < 1e-10, "interpolation helper branch continuity",
               "max gap " + std::to_string(worst));
  }

  if (!config.meshAPath.empty()) checkMesh(rep, "mesh A", config.meshAPath, config.useIdt);
  if (!config.meshBPath.empty()) checkMesh(rep, "mesh B", config.meshBPath, config.useIdt);

  // gradient spot check on the pair
  if (!config.meshAPath.empty() && !config.meshBPath.empty()) {
    try {
      PairContext ctx = prepareContext(config, config.meshAPath, config.meshBPath,
                                       config.anchorFace, config.anchorFace);
      long product =
          static_cast<long>(ctx.A.solve.mesh.nVertices()) * ctx.B.solve.mesh.nVertices();
      if (product <= 4'000'000) {
        double lambda0 = baseEigenvalue(ctx.opsA, ctx.opsB, 1e-6, 2000);
        Section Z = randomSection(ctx.A.solve.mesh.nVertices(), ctx.B.solve.mesh.nVertices(),
                                  config.seed + 1);
        PinningPotential trivialPot;
        GlWorkspace ws;
        Eigen::MatrixXcd grad;
        double e0 = glEnergyAndGradient(ctx.opsA, ctx.opsB, Z, 100.0 * lambda0, trivialPot, grad,
                                        ws);
        Rng rng(config.seed + 2);
        double worst = 0.0;
        for (int trial = 0; trial < 3; ++trial) {
          Section W(Z.rows(), Z.cols());
          for (int j = 0; j < W.cols(); ++j)
            for (int i = 0; i < W.rows(); ++i) W(i, j) = rng.unitDisk();
          W /= W.norm();
          double h = 1e-5 * std::max(1.0, Z.norm());
          Eigen::MatrixXcd scratch;
          double ep = glEnergyAndGradient(ctx.opsA, ctx.opsB, Z + h * W, 100.0 * lambda0,
                                          trivialPot, scratch, ws);
          double em = glEnergyAndGradient(ctx.opsA, ctx.opsB, Z - h * W, 100.0 * lambda0,
                                          trivialPot, scratch, ws);
          double fd = (ep - em) / (2.0 * h);
          double an = grad.cwiseProduct(W.conjugate()).sum().real();
          worst = std::max(worst,
                           std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-12}));
        }
        rep.report(worst < 1e-4, "gradient finite-difference spot check",
                   "worst relative error " + std::to_string(worst) + " (e0 " +
                       std::to_string(e0) + ")");
      }
    } catch (const Error& e) {
      rep.report(false, "gradient finite-difference spot check", e.what());
    }
  }
  return rep.failures;
}

} // namespace ims
