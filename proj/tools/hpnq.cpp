// hpnq: forward kinematics queries, simulation pre-training, Q-table
// augmentation, point-to-point evaluation and table inspection.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hpnq/commands.hpp"

int main(int argc, char** argv) {
  using namespace hpnq;

  CLI::App app{"Q-learning control stack for a four-segment pneumatic continuum arm"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  auto* fk = app.add_subcommand("fk", "Tip pose for 16 chamber pressures (kPa, segment-major)");
  std::vector<double> pressures;
  fk->add_option("pressures", pressures, "P1..P4 of segment 1, then segment 2, ...")->required()->expected(-1);
  fk->add_option("--config", config, "Run config (arm parameters)");

  auto* pre = app.add_subcommand("pretrain", "Pre-train a Q-table in simulation");
  bool paper_scale = false;
  pre->add_option("--config", config, "Run config")->required();
  pre->add_option("--seed", seed, "Master seed");
  pre->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  pre->add_option("--out", out, "Q-table output path");
  pre->add_flag("--paper-scale", paper_scale, "Allow quotas above the desk-scale limit");

  auto* aug = app.add_subcommand("augment", "Fill untrained entries from trained neighbors");
  std::string table_in;
  int radius = 1;
  aug->add_option("qtable", table_in, "Input Q-table")->required();
  aug->add_option("--out", out, "Output Q-table")->required();
  aug->add_option("--radius", radius, "Neighbor radius in bins");

  auto* ev = app.add_subcommand("eval", "Point-to-point evaluation, pre-trained vs zero-initialized");
  std::string table_path;
  bool zero_init = false;
  std::string plant = "nominal";
  ev->add_option("--config", config, "Run config")->required();
  ev->add_option("qtable", table_path, "Pre-trained Q-table");
  ev->add_flag("--zero-init", zero_init, "Evaluate only the all-zero table");
  ev->add_option("--plant", plant, "nominal or perturbed")->check(CLI::IsMember({"nominal", "perturbed"}));
  ev->add_option("--seed", seed, "Perturbed-plant seed");
  ev->add_option("--out", out, "Output directory");

  auto* inspect = app.add_subcommand("inspect", "Print Q-table statistics");
  inspect->add_option("qtable", table_path, "Q-table")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitUsage;
  }

  cli::Overrides ov;
  if (pre->count("--seed") || ev->count("--seed")) ov.seed = seed;
  if (pre->count("--workers")) ov.workers = workers;
  if (!out.empty()) ov.out = out;
  ov.paper_scale = paper_scale;

  if (*fk) {
    return cli::cmd_fk(pressures, config.empty() ? std::nullopt : std::optional<std::filesystem::path>(config),
                       std::cout, std::cerr);
  }
  if (*pre) return cli::cmd_pretrain(config, ov, std::cout, std::cerr);
  if (*aug) return cli::cmd_augment(table_in, out, radius, std::cout, std::cerr);
  if (*ev) {
    return cli::cmd_eval(config, table_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(table_path),
                         zero_init, plant == "perturbed" ? PlantKind::kPerturbed : PlantKind::kNominal, ov, std::cout,
                         std::cerr);
  }
  return cli::cmd_inspect(table_path, std::cout, std::cerr);
}
