// nonmarkov: divisibility and information-backflow diagnostics for open
// system dynamics.
//
//   nonmarkov run --config <path> [--out <dir>] [--parallel]
//   nonmarkov list-models
//   nonmarkov discriminate --p <real> --rho1 <path> --rho2 <path>
//
// Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "app/config.hpp"
#include "app/io.hpp"
#include "app/run.hpp"
#include "nonmarkov/nonmarkov.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kNumerical = 3;

using nonmarkov::app::json;

int list_models() {
  for (const auto& spec : nonmarkov::app::model_specs()) {
    std::cout << spec.kind << "\n  " << spec.summary << "\n  parameters:\n";
    for (const auto& p : spec.params) {
      std::cout << "    " << p.name << " (" << p.type << "): " << p.description << "\n";
    }
    std::cout << "\n";
  }
  std::cout << "analyses:";
  for (const auto& a : nonmarkov::app::known_analyses()) std::cout << " " << a;
  std::cout << "\n";
  return kOk;
}

int run(const std::string& config_path, const std::optional<std::string>& out, bool parallel) {
  const json raw = nonmarkov::app::read_json_file(config_path);
  const auto config = nonmarkov::app::parse_config(raw);
  const std::string dir = out ? *out : config.output_dir;
  const auto outcome = nonmarkov::app::execute(config, dir, parallel);
  std::cout << "wrote " << dir << "/report.json";
  if (outcome.report.contains("classification")) {
    std::cout << " (" << outcome.report["classification"].get<std::string>() << ")";
  }
  std::cout << "\n";
  return kOk;
}

int discriminate(double p, const std::string& rho1_path, const std::string& rho2_path) {
  using namespace nonmarkov;
  auto load = [](const std::string& path) {
    const json j = app::read_json_file(path);
    const ComplexMatrix m = app::matrix_from_json(j.is_object() && j.contains("rho") ? j["rho"] : j, path);
    try {
      return DensityMatrix(m);
    } catch (const std::invalid_argument& e) {
      throw app::ValidationError(path + ": " + e.what());
    }
  };
  if (!(p >= 0.0 && p <= 1.0)) throw app::ValidationError("--p must lie in [0, 1]");
  const DensityMatrix r1 = load(rho1_path), r2 = load(rho2_path);
  if (r1.dim() != r2.dim()) throw app::ValidationError("states have different dimensions");
  const HelstromMatrix h(p, r1, r2);
  std::printf("p                  %.17g\n", p);
  std::printf("trace_norm         %.17g\n", h.trace_norm());
  std::printf("min_error          %.17g\n", min_error_probability(p, r1, r2));
  std::printf("brute_force_error  %.17g\n", min_error_brute_force(p, r1, r2, 2000, 0));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Divisibility and information-backflow diagnostics for dynamical maps"};
  cli.require_subcommand(1);

  auto* run_cmd = cli.add_subcommand("run", "Run the analyses listed in a JSON config");
  std::string config_path;
  std::optional<std::string> out_dir;
  bool parallel = false;
  run_cmd->add_option("--config", config_path, "Path to the JSON run configuration")->required();
  run_cmd->add_option("--out", out_dir, "Output directory (overrides output_dir in the config)");
  run_cmd->add_flag("--parallel", parallel, "Run independent analyses concurrently");

  auto* list_cmd = cli.add_subcommand("list-models", "List model kinds and their parameters");

  auto* disc_cmd = cli.add_subcommand("discriminate", "One-shot discrimination of two states");
  double p = 0.5;
  std::string rho1_path, rho2_path;
  disc_cmd->add_option("--p", p, "Prior probability of rho2")->required();
  disc_cmd->add_option("--rho1", rho1_path, "JSON file holding rho1")->required();
  disc_cmd->add_option("--rho2", rho2_path, "JSON file holding rho2")->required();

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*run_cmd) return run(config_path, out_dir, parallel);
    if (*list_cmd) return list_models();
    if (*disc_cmd) return discriminate(p, rho1_path, rho2_path);
  } catch (const nonmarkov::app::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const nonmarkov::InvalidModel& e) {
    std::cerr << "invalid model: " << e.what() << "\n";
    return kValidation;
  } catch (const nonmarkov::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kOk;
}
