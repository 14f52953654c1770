// hmimo: config-driven gain and capacity experiments.
//
// Exit status: 0 success, 1 runtime failure, 2 parse error (command line, unreadable file or
// malformed YAML), 3 semantic error in the config.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hmimo_cli/config.hpp"
#include "hmimo_cli/runner.hpp"

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool dump_geometry = false;
  bool validate_only = false;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "Experiment config (YAML)")->required();
  sub->add_option("--out", o.out, "Output directory")->capture_default_str();
  sub->add_option("--seed", o.seed, "Root seed (overrides the config)");
  sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_flag("--dump-geometry", o.dump_geometry, "Print the element tables and exit");
  sub->add_flag("--validate", o.validate_only, "Check the config and exit");
}

int execute(const std::string& command, const Options& o) {
  using namespace hmimo::cli;
  std::string text;
  ParseResult pr = parse_config_file(o.config, &text);
  if (!pr.config) {
    for (const auto& d : pr.diagnostics) std::cerr << o.config << ": " << d.str() << "\n";
    return pr.has_parse_error() ? 2 : 3;
  }
  ExperimentConfig c = *pr.config;
  if (command_of(c.scenario) != command) {
    std::cerr << o.config << ": error at 'scenario': '" << to_string(c.scenario)
              << "' belongs to the '" << command_of(c.scenario) << "' subcommand\n";
    return 3;
  }
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.validate_only) {
    std::cout << o.config << ": ok\n";
    return 0;
  }
  if (o.dump_geometry) {
    dump_geometry(std::cout, c);
    return 0;
  }
  try {
    const auto files = run(c, text, o.config, o.out);
    for (const auto& f : files) std::cout << (fs::path(o.out) / f).string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "hmimo: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Electromagnetically consistent array gain and holographic MIMO capacity experiments"};
  app.require_subcommand(1);
  Options o;
  CLI::App* gain = app.add_subcommand("gain", "Far-field gain sweeps");
  CLI::App* nearfield = app.add_subcommand("nearfield", "Near-field gain and loss decomposition");
  CLI::App* capacity = app.add_subcommand("capacity", "Capacity sweeps under gain normalizations");
  for (auto* s : {gain, nearfield, capacity}) add_common(s, o);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  for (auto* s : {gain, nearfield, capacity})
    if (s->parsed()) return execute(s->get_name(), o);
  return 2;
}
