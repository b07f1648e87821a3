// ims: implicit minimal-surface correspondences between genus-zero meshes.
//
//   ims solve   --mesh-a A.obj --mesh-b B.obj [options]   full pipeline
//   ims extract --mesh-a A.obj --mesh-b B.obj --section Z.bin [options]
//   ims check   [--mesh-a A.obj [--mesh-b B.obj]] [options] invariant suite

#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ims/pipeline.hpp"

namespace {

std::vector<double> parseSchedule(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw ims::FormatError("empty annealing schedule '" + text + "'");
  return out;
}

void addCommonOptions(CLI::App* cmd, ims::RunConfig& config, std::string& anneal) {
  cmd->add_option("--mesh-a", config.meshAPath, "source mesh (OBJ)");
  cmd->add_option("--mesh-b", config.meshBPath, "target mesh (OBJ)");
  cmd->add_option("--connection", config.connectionKind,
                  "bundle construction: default | vectorfield | spin");
  cmd->add_option("--anneal", anneal, "comma-separated lambda multipliers, e.g. 10,100");
  cmd->add_option("--anchor-face", config.anchorFace, "face receiving the curvature skyscraper");
  cmd->add_option("--seed", config.seed, "random seed");
  cmd->add_flag("--no-idt{false}", config.useIdt, "skip intrinsic Delaunay preprocessing");
  cmd->add_option("--threads", config.threads, "worker threads (0 = all cores)");
  cmd->add_option("--out", config.outDir, "output directory");
  cmd->add_option("--grad-tol", config.gradTol, "L-BFGS gradient norm tolerance");
  cmd->add_option("--max-iterations", config.maxIterations, "L-BFGS iteration cap per stage");
  cmd->add_option("--eig-tol", config.eigTol, "eigensolver relative residual tolerance");
  cmd->add_option("--eig-max-iterations", config.eigMaxIterations, "eigensolver iteration cap");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"implicit minimal-surface correspondences between genus-zero triangle meshes"};
  app.require_subcommand(1);

  ims::RunConfig config;
  std::string anneal, sectionPath;

  CLI::App* solve = app.add_subcommand("solve", "compute a correspondence end to end");
  addCommonOptions(solve, config, anneal);
  solve->add_option("--landmarks", config.landmarksPath, "landmark pairs file");
  solve->add_option("--curves", config.curvesPath, "curve pairs file");
  solve->add_option("--init-map", config.initMapAbPath, "initial A->B map (IMSMAP)");
  solve->add_option("--init-map-ba", config.initMapBaPath, "initial B->A map (IMSMAP)");
  solve->add_option("--sigma-a", config.sigmaA, "pinning kernel width on A");
  solve->add_option("--sigma-b", config.sigmaB, "pinning kernel width on B");
  solve->add_flag("--random-init", config.randomInit, "random initial section");
  solve->add_option("--coarse-a", config.coarseAPath, "coarse mesh for A (staged pipeline)");
  solve->add_option("--coarse-b", config.coarseBPath, "coarse mesh for B (staged pipeline)");
  solve->add_flag("--write-potential", config.writePotential, "dump the pinning potential");
  solve->add_flag("--no-overlay{false}", config.writeOverlay, "skip edge-edge intersections");

  CLI::App* extract = app.add_subcommand("extract", "re-extract maps from a saved section");
  addCommonOptions(extract, config, anneal);
  extract->add_option("--section", sectionPath, "section file (IMSZ1)")->required();

  CLI::App* check = app.add_subcommand("check", "run the invariant diagnostics");
  addCommonOptions(check, config, anneal);

  CLI11_PARSE(app, argc, argv);

  try {
    if (!anneal.empty()) config.schedule = parseSchedule(anneal);

    if (solve->parsed()) {
      if (config.meshAPath.empty() || config.meshBPath.empty())
        throw ims::FormatError("solve requires --mesh-a and --mesh-b");
      ims::SolveStats stats = ims::runSolve(config);
      std::cout << "lambda0 = " << stats.lambda0 << "\n"
                << "final energy = " << stats.finalEnergy << "\n"
                << "multi-zero: A->B " << stats.multiZeroPctAB << "%, B->A "
                << stats.multiZeroPctBA << "%\n"
                << "graph area = " << stats.graphArea << "\n"
                << "wall time = " << stats.wallSeconds << " s\n"
                << "artifacts in " << config.outDir << "\n";
    } else if (extract->parsed()) {
      if (config.meshAPath.empty() || config.meshBPath.empty())
        throw ims::FormatError("extract requires --mesh-a and --mesh-b");
      ims::runExtract(config, sectionPath);
      std::cout << "maps written to " << config.outDir << "\n";
    } else if (check->parsed()) {
      int failures = ims::runCheck(config);
      if (failures > 0) {
        std::cout << failures << " check(s) failed\n";
        return 1;
      }
      std::cout << "all checks passed\n";
    }
  } catch (const ims::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ims::ErrorCode::Numerical);
  }
  return 0;
}
