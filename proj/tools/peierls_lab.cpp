// peierls-lab <command> --config <path> [--out <dir>] [--seed <u64>]
// Exit status: 0 all declared tolerances met, 1 violation or module failure, 2 configuration error.

#include "peierls/cli_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

int execute(const std::string& command, const std::string& config_path, const std::string& out, std::uint64_t seed,
            bool seed_given) {
  using namespace peierls;
  std::ifstream is(config_path);
  if (!is) {
    std::cerr << "error: cannot read " << config_path << "\n";
    return 2;
  }
  std::stringstream buf;
  buf << is.rdbuf();
  io::ParseResult parsed = io::parse_config(buf.str());
  if (!parsed.config) {
    for (const auto& e : parsed.errors) std::cerr << "config error: " << e << "\n";
    return 2;
  }
  io::RunConfig cfg = *parsed.config;
  if (io::to_string(cfg.experiment) != command) {
    std::cerr << "config error: experiment: file describes '" << io::to_string(cfg.experiment) << "', command is '"
              << command << "'\n";
    return 2;
  }
  if (!out.empty()) cfg.out_dir = out;
  if (seed_given) cfg.seed = seed;

  io::RunReport report;
  try {
    report = io::run(cfg);
  } catch (const Error& e) {
    std::cerr << "error [" << command << "]: " << e.what() << "\n";
    if (e.kind() == ErrorKind::Config) return 2;
    report.config = io::serialize_config(cfg);
    report.results = {{"error", e.what()}, {"partial", true}};
    report.checks.push_back({"completed", 1, 0, "<=", false});
    io::write_outputs(report, cfg.out_dir);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error [" << command << "]: " << e.what() << "\n";
    return 1;
  }
  for (const auto& p : io::write_outputs(report, cfg.out_dir)) std::cout << p.string() << "\n";
  for (const auto& c : report.checks)
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " = " << c.value << " (" << c.relation << " "
              << c.tolerance << ")\n";
  return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bloch electron effective dynamics experiments"};
  app.require_subcommand(1);
  std::string config, out;
  std::uint64_t seed = 0;
  for (const char* name : {"bands", "geometry", "butterfly", "egorov", "flow", "propagate"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "random seed (overrides seed)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  CLI::App* sub = app.get_subcommands().front();
  return execute(sub->get_name(), config, out, seed, sub->count("--seed") > 0);
}
