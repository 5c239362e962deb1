#include <iostream>

#include <CLI11.hpp>

#include "nonacc/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical certification for non-accretive electromagnetic Schroedinger operators"};
  app.require_subcommand(1);
  nonacc::cli::RunOptions opts;
  std::uint64_t seed = 0;
  const char* help[] = {"Assumption certificate and asymptotic diagnostics",
                        "Eigenvalues, multiplicities and enclosure placement",
                        "Agmon distances and eigenfunction decay verdicts",
                        "Domain truncation convergence study",
                        "Inequality suite over seeded random vectors",
                        "Resolvent norm probes inside the enclosure region"};
  for (std::size_t i = 0; i < nonacc::cli::subcommands().size(); ++i) {
    CLI::App* sub = app.add_subcommand(nonacc::cli::subcommands()[i], help[i]);
    sub->add_option("--config", opts.config_path, "Problem configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out_dir, "Output directory for report.json and bulk files")->required();
    sub->add_option("--seed", seed, "Override the [run] seed");
    sub->add_option("--jobs", opts.jobs, "Worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    sub->callback([&, sub] {
      opts.subcommand = sub->get_name();
      if (sub->count("--seed") > 0) opts.seed = seed;
    });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nonacc::cli::operational_error;
  }
  return nonacc::cli::run(opts, std::cerr);
}
