#include <iostream>

#include <CLI11.hpp>

#include <cmhd/cli.hpp>

int main(int argc, char** argv) {
  using namespace cmhd::cli;
  CLI::App app{"Structured-grid experiments for compressible MHD in corner domains"};
  app.require_subcommand(1);
  std::string config;
  Overrides ov;
  std::string out;
  std::uint64_t seed = 0;
  int jobs = 1;
  for (const auto& name : commands()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config, "configuration file")->required();
    sub->add_option("--out", out, "output directory (overrides run.out)");
    sub->add_option("--seed", seed, "random seed (overrides run.seed)");
    sub->add_option("--jobs", jobs, "worker threads (overrides run.jobs)")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }
  const CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--out")) ov.out = out;
  if (sub->count("--seed")) ov.seed = seed;
  if (sub->count("--jobs")) ov.jobs = jobs;
  return run(sub->get_name(), config, ov, std::cout, std::cerr);
}
