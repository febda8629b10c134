#include <iostream>

#include "CLI11.hpp"
#include "fms/cli.hpp"

int main(int argc, char** argv) {
  fms::RunConfig cfg;
  CLI::App app{"fms: random dynamical systems with place-dependent probabilities"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto common = [&](CLI::App* sub) {
    sub->add_option("system", cfg.system_path, "system file")->required();
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_flag("--json", cfg.json, "print the machine-readable report");
    sub->add_option("--budget", cfg.word_budget, "max |E|^n words")->check(CLI::PositiveNumber);
    sub->add_option("--max-breakpoints", cfg.max_breakpoints, "refinement cap")
        ->check(CLI::PositiveNumber);
    sub->add_option("--max-samples", cfg.max_samples, "sample cap")->check(CLI::PositiveNumber);
  };
  auto xi_opts = [&](CLI::App* sub) {
    sub->add_option("--n-exact", cfg.n_exact, "exact tail depth")->check(CLI::PositiveNumber);
    sub->add_option("--n-mc", cfg.n_mc, "Monte Carlo path length")->check(CLI::PositiveNumber);
    sub->add_option("--samples", cfg.num_samples, "Monte Carlo paths")
        ->check(CLI::PositiveNumber);
    sub->add_option("--drift-z", cfg.drift_z, "z threshold for drift")
        ->check(CLI::PositiveNumber);
    sub->add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* validate = app.add_subcommand("validate", "check probability sums and map images");
  common(validate);

  auto* cylinders = app.add_subcommand("cylinders", "depth-n cylinder masses at x");
  common(cylinders);
  cylinders->add_option("--x", cfg.x, "start point (p/q or irr:<decimal>)");
  cylinders->add_option("--depth", cfg.depth, "word length");
  cylinders->add_flag("--include-zero", cfg.include_zero, "list zero-mass words");

  auto* xi = app.add_subcommand("xi", "tail and drift evidence for P_x vs P_y");
  common(xi);
  xi_opts(xi);
  xi->add_option("--x", cfg.x, "first point")->required();
  xi->add_option("--y", cfg.y, "second point")->required();

  auto* partition = app.add_subcommand("partition", "fundamental partition report");
  common(partition);
  xi_opts(partition);
  partition->add_option("--lift-depth", cfg.lift_depth, "depth of the lift check");

  auto* graph = app.add_subcommand("graph", "digraph flags, stationary weights, moments");
  common(graph);
  xi_opts(graph);

  auto* simulate = app.add_subcommand("simulate", "sample a trace");
  common(simulate);
  xi_opts(simulate);
  simulate->add_option("--x0", cfg.x0, "start point");
  simulate->add_option("--steps", cfg.steps, "number of steps");
  simulate->add_option("--f", cfg.functions, "test function, e.g. x^2 or ind(1/3,1]");
  simulate->add_option("--max-steps", cfg.max_steps, "step cap")->check(CLI::PositiveNumber);

  auto* rate = app.add_subcommand("rate", "empirical W1 convergence rate");
  common(rate);
  rate->add_option("--b", cfg.b, "probability level b in the bound");
  rate->add_option("--bound", cfg.bound, "explicit comparison bound");
  rate->add_option("--x0", cfg.x0, "start atom");
  rate->add_option("--cloud", cfg.cloud, "atoms per cloud")->check(CLI::PositiveNumber);
  rate->add_option("--n-max", cfg.n_max, "push-forward steps")->check(CLI::PositiveNumber);
  rate->add_option("--burn-in", cfg.burn_in, "reference burn-in steps");
  rate->add_option("--slack", cfg.slack, "tolerance above the bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fms::kExitValidation;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();
  return fms::run(cfg, std::cout, std::cerr);
}
