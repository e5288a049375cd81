// meswarm: run the collaborative minimum-energy filter on a configured scene.
//
//   meswarm run --config scene.json --mode distributed --out out/
//   meswarm compare --config scene.json --out out/
//   meswarm example-config [--replica] > scene.json

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "meswarm/error.hpp"
#include "meswarm/experiment.hpp"
#include "meswarm/logging.hpp"

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kConfig = 2, kData = 3, kNumerical = 4 };

struct RunArgs {
  std::string config;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::optional<std::string> out;
  std::optional<std::string> curvature;
};

meswarm::ExperimentConfig resolve(const RunArgs& args, bool single_mode = true) {
  meswarm::ExperimentConfig c = meswarm::load_config(args.config);
  if (args.mode) c.mode = meswarm::parse_mode(*args.mode);
  if (args.seed) {
    c.seed = *args.seed;
    c.schedule.seed = *args.seed;
  }
  if (args.duration) c.schedule.duration_s = *args.duration;
  if (args.out) c.output_dir = *args.out;
  if (args.curvature) {
    if (single_mode && *args.curvature == "on" && c.mode != meswarm::Mode::kCentral) {
      throw meswarm::ConfigError("--with-curvature on only applies to --mode central");
    }
    c.with_curvature = *args.curvature == "on";
  }
  c.validate();
  return c;
}

void print_summary(const meswarm::ExperimentConfig& config, const meswarm::RunResult& result) {
  meswarm::write_summary_text(std::cout, result.summary, meswarm::run_title(config));
  std::cout << "ticks: " << result.ticks << ", observations: " << result.observations
            << ", skipped updates: " << result.skipped_updates;
  if (config.mode == meswarm::Mode::kDistributed) std::cout << ", messages: " << result.bus.size();
  std::cout << "\n";
}

int cmd_run(const RunArgs& args) {
  const meswarm::ExperimentConfig config = resolve(args);
  const meswarm::RunResult result = meswarm::run_experiment(config, config.output_dir);
  print_summary(config, result);
  return kOk;
}

int cmd_compare(const RunArgs& args) {
  meswarm::ExperimentConfig config = resolve(args, false);
  const bool curvature = !args.curvature || *args.curvature == "on";
  const meswarm::Scenario scenario = meswarm::build_scenario(config);
  const std::filesystem::path root = config.output_dir;
  for (meswarm::Mode mode : {meswarm::Mode::kNone, meswarm::Mode::kCentral, meswarm::Mode::kDistributed}) {
    config.mode = mode;
    config.with_curvature = curvature;
    const std::filesystem::path dir = root / std::string(meswarm::mode_name(mode));
    config.output_dir = dir;
    const meswarm::RunResult result = meswarm::run_experiment(config, scenario, dir);
    print_summary(config, result);
    std::cout << "\n";
  }
  return kOk;
}

int cmd_example(bool replica, int vehicles, double duration, const std::string& out) {
  const meswarm::ExperimentConfig c =
      replica ? meswarm::replica_config(vehicles, duration) : meswarm::example_config();
  const std::string text = meswarm::dump_config(c);
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    std::ofstream f(out);
    if (!f) throw meswarm::ConfigError("cannot write " + out);
    f << text;
  }
  return kOk;
}

void add_run_options(CLI::App* cmd, RunArgs& args, bool with_mode) {
  cmd->add_option("--config", args.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  if (with_mode) {
    cmd->add_option("--mode", args.mode, "Filter variant")
        ->check(CLI::IsMember({"none", "central", "distributed"}));
  }
  cmd->add_option("--seed", args.seed, "Noise seed (overrides the config)");
  cmd->add_option("--duration", args.duration, "Run length in seconds (overrides the config)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", args.out, "Output directory (overrides the config)");
  cmd->add_option("--with-curvature", args.curvature, "Keep the curvature term in the central gain update")
      ->check(CLI::IsMember({"on", "off"}));
}

}  // namespace

int main(int argc, char** argv) {
  meswarm::configure_logging();

  CLI::App app{"Collaborative minimum-energy filtering for vehicle swarms"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "Run one filter mode and write metrics");
  add_run_options(run, run_args, true);

  RunArgs compare_args;
  CLI::App* compare = app.add_subcommand("compare", "Run none, central and distributed on one synthesis");
  add_run_options(compare, compare_args, false);

  bool replica = false;
  int vehicles = 6;
  double duration = 90.0;
  std::string example_out;
  CLI::App* example = app.add_subcommand("example-config", "Print a ready-to-run config");
  example->add_flag("--replica", replica, "Six-vehicle indoor-room replica instead of the small scene");
  example->add_option("--vehicles", vehicles, "Vehicles in the replica")->check(CLI::PositiveNumber);
  example->add_option("--duration", duration, "Replica duration in seconds")->check(CLI::PositiveNumber);
  example->add_option("--out", example_out, "Write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*compare) return cmd_compare(compare_args);
    if (*example) return cmd_example(replica, vehicles, duration, example_out);
  } catch (const meswarm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const meswarm::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const meswarm::ObservationError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const meswarm::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
