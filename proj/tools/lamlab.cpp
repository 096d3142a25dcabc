// lamlab: run or verify a scenario file.
//   lamlab run <scenario.toml> [--out DIR] [--seed N]
//   lamlab verify <scenario.toml> [--out DIR] [--seed N]
// Exit codes: 0 success, 2 invalid input, 3 solver or property failure.

#include "lamlab/scenario.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

int execute(const std::string& path, const std::optional<std::string>& out,
            const std::optional<std::uint64_t>& seed, bool verify) {
  namespace sc = lamlab::scenario;
  try {
    const sc::Scenario s =
        sc::load_scenario(path, seed, verify ? std::optional<std::string>("verify") : std::nullopt);
    const sc::RunOutcome r = sc::run_scenario(s, out ? *out : s.out_dir);
    if (sc::log_level() != sc::LogLevel::Quiet) {
      std::cout << "status: " << r.report.at("status").get<std::string>() << '\n';
      if (r.report.contains("error")) std::cout << "error: " << r.report.at("error").get<std::string>() << '\n';
      std::cout << "report: " << (std::filesystem::path(out ? *out : s.out_dir) / "report.json").string() << '\n';
    }
    return r.exit_code;
  } catch (const lamlab::InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const lamlab::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lamlab: spectral and entropy constants on discrete manifolds"};
  app.require_subcommand(1);

  std::string run_path, verify_path;
  std::optional<std::string> run_out, verify_out;
  std::optional<std::uint64_t> run_seed, verify_seed;

  auto* run = app.add_subcommand("run", "execute the scenario's task");
  run->add_option("scenario", run_path, "scenario file")->required();
  run->add_option("--out", run_out, "output directory (overrides output.dir)");
  run->add_option("--seed", run_seed, "seed (overrides the scenario seed)");

  auto* verify = app.add_subcommand("verify", "run the invariant suite on the scenario's instance");
  verify->add_option("scenario", verify_path, "scenario file")->required();
  verify->add_option("--out", verify_out, "output directory (overrides output.dir)");
  verify->add_option("--seed", verify_seed, "seed (overrides the scenario seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (run->parsed()) return execute(run_path, run_out, run_seed, false);
  return execute(verify_path, verify_out, verify_seed, true);
}
