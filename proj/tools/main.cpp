#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "cbranch/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Colored branching experiment runner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cbranch::kArtifactVersion);

  std::string config_path, out_dir, report_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::size_t threads = 1;

  auto* run = app.add_subcommand("run", "Run an experiment and write CSV/JSON outputs");
  run->add_option("config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Master seed (overrides the config)");
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--trials", trials, "Number of trials (overrides the config)");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Check a config and list violations");
  validate->add_option("config", config_path, "JSON config file")->required();

  auto* report = app.add_subcommand("report", "Print the summary of a finished run");
  report->add_option("dir", report_dir, "Output directory of a run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (run->parsed()) return cbranch::command_run(config_path, seed, out_dir, trials, threads, std::cout, std::cerr);
  if (validate->parsed()) return cbranch::command_validate(config_path, std::cout, std::cerr);
  return cbranch::command_report(report_dir, std::cout, std::cerr);
}
