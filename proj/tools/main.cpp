#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lds/commands.hpp"

namespace {

// 0 success, 2 config error, 3 data error, 4 numerical failure.
int dispatch(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const lds::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const lds::ContractError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const lds::DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const lds::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const lds::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ldsid: learning linear dynamical systems from sampled output "
               "trajectories"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::int64_t seed_override = -1;
  bool no_plots = false;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", config_path,
                                "run configuration (JSON)");
    if (needs_config) opt->required();
    cmd->add_option("--out", out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", seed_override,
                    "override the system/dataset seeds");
    cmd->add_flag("--no-plots", no_plots, "skip SVG plot generation");
  };

  auto* generate = app.add_subcommand("generate",
                                      "sample a system and write a dataset");
  add_common(generate, true);
  auto* train_cmd = app.add_subcommand("train", "run a training job");
  add_common(train_cmd, true);
  auto* bounds = app.add_subcommand(
      "bounds", "evaluate the learning-rate and spectrum bounds");
  add_common(bounds, true);

  auto* reproduce = app.add_subcommand(
      "reproduce", "paired squared-error vs log-loss experiment sweep");
  std::string figure = "fig2";
  std::vector<std::uint64_t> seeds;
  int iters = 20000;
  double momentum = 0.9;
  std::vector<double> deltas = {1e-2, 1e-3, 1e-4};
  bool fixed_states = false;
  std::vector<std::string> init_families = {"identity_plus_uniform",
                                            "uniform"};
  reproduce->add_option("--figure", figure, "fig1, fig2 or appendixF");
  reproduce->add_option("--init-families", init_families,
                        "parameter init families to sweep (uniform, "
                        "identity_plus_uniform)")
      ->delimiter(',');
  reproduce->add_option("--seeds", seeds, "generator seeds to sweep")
      ->delimiter(',');
  reproduce->add_option("--iters", iters, "training iterations per run");
  reproduce->add_option("--momentum", momentum, "heavy-ball coefficient");
  reproduce->add_option("--deltas", deltas, "step-size grid")->delimiter(',');
  reproduce->add_flag("--fixed-states", fixed_states,
                      "hold the true initial states fixed instead of "
                      "learning them");
  reproduce->add_option("--out", out_dir, "output directory");
  reproduce->add_flag("--no-plots", no_plots, "skip SVG plot generation");

  CLI11_PARSE(app, argc, argv);

  lds::CommandOptions options;
  options.output_dir = out_dir;
  options.plots = !no_plots;

  auto load = [&]() {
    lds::RunConfig config = lds::load_run_config(config_path);
    if (seed_override >= 0) {
      config.system.seed = static_cast<std::uint64_t>(seed_override);
      config.dataset.seed = static_cast<std::uint64_t>(seed_override);
    }
    return config;
  };

  if (generate->parsed()) {
    return dispatch([&] { lds::cmd_generate(load(), options); });
  }
  if (train_cmd->parsed()) {
    return dispatch([&] { lds::cmd_train(load(), options); });
  }
  if (bounds->parsed()) {
    return dispatch([&] { lds::cmd_bounds(load(), options); });
  }
  if (reproduce->parsed()) {
    return dispatch([&] {
      lds::cmd_reproduce(figure, seeds, options, iters, momentum, deltas,
                         !fixed_states, init_families);
    });
  }
  return 0;
}
