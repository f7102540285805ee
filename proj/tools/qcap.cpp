#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qcap/cli.hpp"

int main(int argc, char** argv) {
  qcap::cli::CliOptions o;
  CLI::App app{"qcap: numerical search for the one-shot classical capacity of a quantum channel"};

  std::string input, fixed_ensemble, output = o.output_path.string();
  std::size_t dim = 0;
  app.add_option("--input", input, "Import file with the Kraus operators");
  app.add_option("--output", output, "Output file (suffix _c<i> added when C > 1)");
  app.add_option("--states", o.num_states, "Number J of statistical operators");
  app.add_option("--outcomes", o.num_outcomes, "Initial number K of POVM outcomes");
  app.add_option("--channels", o.num_channels, "Number C of channels");
  app.add_option("--kraus", o.num_kraus, "Number M of Kraus operators per channel");
  app.add_option("--dim-in", o.input_dim, "Dimension N of the statistical operators");
  app.add_option("--dim-out", o.output_dim, "Dimension D of the Kraus operators' range");
  app.add_option("--dim", dim, "Shorthand for --dim-in and --dim-out");
  app.add_option("--channel", o.channel,
                 "Built-in channel: identity, depolarizing(p), phase-damping(lambda), "
                 "amplitude-damping(gamma), random(seed)");
  app.add_option("--sa-percent", o.sa_percent, "Chance in percent of a steepest-ascent iteration")
      ->check(CLI::Range(0.0, 100.0));
  app.add_option("--tolerance", o.tolerance, "Relative tolerance of the stopping rule");
  app.add_option("--machine-epsilon", o.machine_epsilon, "Absolute term of the stopping rule");
  app.add_option("--max-iterations", o.max_iterations, "Iteration cap per run");
  app.add_option("--seed", o.seed, "Random seed (default: drawn from entropy, always echoed)");
  app.add_option("--restarts", o.restarts, "Independent runs with seeds seed, seed+1, ...");
  app.add_option("--fixed-ensemble", fixed_ensemble,
                 "File of J matrix literals; the ensemble is held fixed");
  app.add_flag("--quiet", o.quiet, "Print only the seed and the AI per channel");
  app.add_flag("--no-limits", o.no_limits, "Lift the 30-element ceilings on J, K, D, N");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qcap::cli::kInputError;
  }

  if (!input.empty()) o.input_path = input;
  if (!fixed_ensemble.empty()) o.fixed_ensemble_path = fixed_ensemble;
  o.output_path = output;
  if (dim > 0) {
    if ((o.input_dim && *o.input_dim != dim) || (o.output_dim && *o.output_dim != dim)) {
      std::cerr << "qcap: --dim conflicts with --dim-in/--dim-out\n";
      return qcap::cli::kInputError;
    }
    o.input_dim = dim;
    o.output_dim = dim;
  }
  return qcap::cli::run(o, std::cout, std::cerr);
}
