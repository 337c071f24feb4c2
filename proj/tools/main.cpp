// vkdual: minimize the plate / 3D elasticity energies, certify coercivity,
// and verify the dual-side identities, driven by one scenario JSON document.
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
// 3 the line search stalled.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "vk/scenario.hpp"

namespace {

vk::njson read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in)
    throw vk::ConfigError(std::string("cannot open ") + what + " file '" +
                          path + "'");
  try {
    return vk::njson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw vk::ConfigError(std::string("cannot parse ") + what + " file '" +
                          path + "': " + e.what());
  }
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw vk::ConfigError("cannot write output file '" + path.string() + "'");
  out << body;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonlinear plate / 3D elasticity minimization with "
               "coercivity certificates and dual verification"};
  app.require_subcommand(1);

  std::string config_path, from_path, out_dir;
  std::string format = "json";
  bool normalize = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "scenario config JSON file")
        ->required();
    sub->add_option("--out", out_dir,
                    "directory for report, solution, and iteration files");
    sub->add_option("--format", format, "stdout rendering of the report")
        ->check(CLI::IsMember({"json", "csv", "text"}));
    sub->add_flag("--normalize-timings", normalize,
                  "zero all timings so reports are byte-reproducible");
  };

  CLI::App* solve =
      app.add_subcommand("solve", "minimize and run the verification battery");
  add_common(solve);
  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "validate the analytic gradient only");
  add_common(gradcheck_cmd);
  CLI::App* verify = app.add_subcommand(
      "verify-duality", "re-run the checks on a stored solution");
  add_common(verify);
  verify->add_option("--from", from_path, "solution snapshot JSON file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const vk::njson doc = read_json_file(config_path, "config");
    vk::ScenarioOutcome outcome;
    if (solve->parsed()) {
      outcome = vk::run_scenario(doc, normalize);
    } else if (gradcheck_cmd->parsed()) {
      outcome = vk::run_gradcheck_only(doc, normalize);
    } else {
      const vk::njson snap = read_json_file(from_path, "solution");
      outcome = vk::run_scenario(doc, normalize, &snap);
    }

    if (format == "json")
      std::cout << vk::report_to_json(outcome.report);
    else if (format == "csv")
      std::cout << vk::report_to_csv(outcome.report);
    else
      std::cout << vk::report_to_text(outcome.report);

    if (!out_dir.empty()) {
      const std::filesystem::path dir(out_dir);
      std::filesystem::create_directories(dir);
      write_file(dir / "report.json", vk::report_to_json(outcome.report));
      write_file(dir / "report.csv", vk::report_to_csv(outcome.report));
      write_file(dir / "report.txt", vk::report_to_text(outcome.report));
      if (!outcome.solution.is_null())
        write_file(dir / "solution.json", outcome.solution.dump(2) + "\n");
      if (!outcome.iteration_log.empty())
        write_file(dir / "iterations.csv", outcome.iteration_log);
    }
    return outcome.exit_code;
  } catch (const vk::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const vk::ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const vk::StencilError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const vk::SolverStallError& e) {
    std::cerr << "solver stall: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
