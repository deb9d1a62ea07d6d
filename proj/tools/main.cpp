#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

using namespace routhkit::cli;

struct Flags
{
  std::optional<std::string> system, config, connection, out, group_out, reduced, format;
  std::optional<double> t0, tf, dt, tol_disc, tol_mom, tol_res;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> params;
};

void add_common(CLI::App * sub, Flags & f)
{
  sub->add_option("-s,--system", f.system, "se2 | classical-demo | wong-demo, or a config file");
  sub->add_option("-c,--config", f.config, "INI config file");
  sub->add_option("-p,--param", f.params, "system parameter, key=value (repeatable)");
  sub->add_option("--t0", f.t0, "start time");
  sub->add_option("--tf", f.tf, "final time");
  sub->add_option("--dt", f.dt, "RK4 step");
  sub->add_option("--connection", f.connection, "mechanical | vertical-lift");
  sub->add_option("-o,--out", f.out, "trajectory output (default stdout)");
  sub->add_option("--format", f.format, "csv | json");
  sub->add_option("--seed", f.seed, "RNG seed for random_ic");
  sub->add_option("--tol-discrepancy", f.tol_disc);
  sub->add_option("--tol-momentum", f.tol_mom);
  sub->add_option("--tol-residual", f.tol_res);
}

RunConfig resolve(const std::string & command, const Flags & f)
{
  RunConfig cfg;
  cfg.command = command;
  if (f.config) { load_config_file(*f.config, cfg); }
  if (f.system) {
    if (std::filesystem::is_regular_file(*f.system)) {
      load_config_file(*f.system, cfg);
    } else {
      cfg.system = *f.system;
    }
  }
  for (const auto & kv : f.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw routhkit::Error(routhkit::ErrorKind::Argument, "--param expects key=value, got '" + kv + "'");
    }
    cfg.params[kv.substr(0, eq)] = parse_number(kv.substr(eq + 1), kv.substr(0, eq));
  }
  if (f.t0) { cfg.t0 = *f.t0; }
  if (f.tf) { cfg.tf = *f.tf; }
  if (f.dt) { cfg.dt = *f.dt; }
  if (f.connection) { cfg.connection = parse_connection(*f.connection); }
  if (f.out) { cfg.out = *f.out; }
  if (f.group_out) { cfg.group_out = *f.group_out; }
  if (f.reduced) { cfg.reduced_in = *f.reduced; }
  if (f.format) { cfg.format = *f.format; }
  if (f.seed) { cfg.seed = *f.seed; }
  if (f.tol_disc) { cfg.tol.discrepancy = *f.tol_disc; }
  if (f.tol_mom) { cfg.tol.momentum = *f.tol_mom; }
  if (f.tol_res) { cfg.tol.residual = *f.tol_res; }
  return cfg;
}

}  // namespace

int main(int argc, char ** argv)
{
  configure_logging();
  CLI::App app{"Routh reduction and reconstruction for Lagrangian systems on S x G"};
  app.require_subcommand(1);
  Flags flags;
  auto * simulate    = app.add_subcommand("simulate", "integrate the full Euler-Lagrange equations");
  auto * reduce      = app.add_subcommand("reduce", "integrate the reduced equations on a momentum level");
  auto * reconstruct = app.add_subcommand("reconstruct", "lift a reduced trajectory back to the full space");
  auto * compare     = app.add_subcommand("compare", "full integration against reduce + reconstruct");
  for (auto * sub : {simulate, reduce, reconstruct, compare}) { add_common(sub, flags); }
  reconstruct->add_option("--reduced", flags.reduced, "reduced trajectory CSV (computed if absent)");
  reconstruct->add_option("--group-out", flags.group_out, "group curve output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    std::cerr << json{{"error", "usage"}, {"message", e.what()}, {"exit_code", kUsage}}.dump() << '\n';
    return kUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const RunConfig cfg = resolve(command, flags);
    spdlog::info("{} on {} over [{}, {}] with dt {}", command, cfg.system, cfg.t0, cfg.tf, cfg.dt);
    const Outcome res = run_command(cfg);
    // the summary shares stdout only when the trajectory went to a file
    const bool table_on_stdout = command != "compare" && (cfg.out.empty() || cfg.out == "-");
    (table_on_stdout ? std::cerr : std::cout) << res.summary.dump() << '\n';
    if (res.code == kTolerance) {
      std::cerr << json{{"error", "tolerance"}, {"message", "tolerance exceeded"}, {"exit_code", kTolerance}}.dump()
                << '\n';
    }
    return res.code;
  } catch (const std::exception & e) {
    int code = kNumerical;
    std::cerr << error_json(e, code).dump() << '\n';
    return code;
  }
}
