#include <iostream>

#include <CLI11.hpp>

#include "fosls/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Least-squares neural solver for obstacle problems"};
  app.require_subcommand(1);

  fosls::CommandOptions opts;
  std::string out_dir;
  std::uint64_t seed_override = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "training config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory, overrides output_dir");
    sub->add_option("--seed-override", seed_override, "init seed; sampling seed becomes seed + 1");
  };

  CLI::App* train = app.add_subcommand("train", "train the three networks and write logs, checkpoints and a slice");
  CLI::App* eval = app.add_subcommand("eval", "evaluate saved checkpoints on a fresh sample");
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "compare the loss gradient with central differences");
  CLI::App* mccheck = app.add_subcommand("mccheck", "Monte-Carlo convergence rate of the batch loss");
  for (CLI::App* sub : {train, eval, gradcheck, mccheck}) add_common(sub);
  // self-test hook, deliberately undocumented
  gradcheck->add_flag("--corrupt-gradient", opts.corrupt_gradient)->group("");

  CLI::App* chidemo = app.add_subcommand("chidemo", "exact simplex characteristic function by a step network");
  int d = 2;
  std::uint64_t seed = 1;
  chidemo->add_option("--dim,-d", d, "space dimension")->required();
  chidemo->add_option("--seed", seed, "random simplex seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : fosls::exit_code::config;
  }

  for (CLI::App* sub : {train, eval, gradcheck, mccheck}) {
    if (!sub->parsed()) continue;
    if (sub->count("--out")) opts.out = out_dir;
    if (sub->count("--seed-override")) opts.seed_override = seed_override;
  }

  if (train->parsed()) return fosls::cmd_train(opts, std::cout, std::cerr);
  if (eval->parsed()) return fosls::cmd_eval(opts, std::cout, std::cerr);
  if (gradcheck->parsed()) return fosls::cmd_gradcheck(opts, std::cout, std::cerr);
  if (mccheck->parsed()) return fosls::cmd_mccheck(opts, std::cout, std::cerr);
  return fosls::cmd_chidemo(d, seed, std::cout, std::cerr);
}
