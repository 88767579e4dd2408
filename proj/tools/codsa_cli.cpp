#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "codsa/experiment.hpp"

namespace {

struct SubArgs {
  std::string config_path;
  codsa::CliOptions options;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common_flags(CLI::App* sub, SubArgs& args) {
  sub->add_option("--config", args.config_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--out", args.options.out, "output directory");
  sub->add_option("--workers", args.options.workers, "worker threads")
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", args.seed, "override the config root seed")
      ->each([&args](const std::string&) { args.seed_given = true; });
  sub->add_flag("--dry-run", args.options.dry_run,
                "validate the config without training");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CoDSA: conditional data synthesis augmentation experiments"};
  app.require_subcommand(1);

  SubArgs simulate_args, pretrain_args, run_args, sweep_args, diagnose_args;
  auto* simulate = app.add_subcommand("simulate", "write train/validation/test CSVs");
  add_common_flags(simulate, simulate_args);
  auto* pretrain = app.add_subcommand("pretrain", "pretrain source autoencoders");
  add_common_flags(pretrain, pretrain_args);
  auto* run = app.add_subcommand("run", "run a method over its lambda grid");
  add_common_flags(run, run_args);
  auto* sweep = app.add_subcommand("sweep", "marginal hyperparameter sweep");
  add_common_flags(sweep, sweep_args);
  auto* diagnose = app.add_subcommand("diagnose", "indices for a checkpoint and lambda");
  add_common_flags(diagnose, diagnose_args);

  CLI11_PARSE(app, argc, argv);

  auto dispatch = [&](SubArgs& args,
                      void (*command)(const codsa::json&, const codsa::CliOptions&)) {
    if (args.seed_given) args.options.seed = args.seed;
    const auto config = codsa::read_json_file(args.config_path);
    command(config, args.options);
  };

  try {
    if (simulate->parsed()) dispatch(simulate_args, codsa::cmd_simulate);
    else if (pretrain->parsed()) dispatch(pretrain_args, codsa::cmd_pretrain);
    else if (run->parsed()) dispatch(run_args, codsa::cmd_run);
    else if (sweep->parsed()) dispatch(sweep_args, codsa::cmd_sweep);
    else if (diagnose->parsed()) dispatch(diagnose_args, codsa::cmd_diagnose);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
