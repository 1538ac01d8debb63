// hcng: bargaining and robust scheduling of a gas network and a power
// distribution network coupled through power-to-gas and fuel cells.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hcng/error.hpp"
#include "hcng/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Nash bargaining and robust scheduling for coupled gas/power networks"};
  app.set_version_flag("--version", "hcng 1.0");

  std::string mode = "cooperative";
  std::string variant;
  std::string uncertainty;
  hcng::RunConfig cfg;
  app.add_option("--scenario", cfg.scenario, "scenario JSON file or bundled name (tiny4x3, ieee33_belgian20)");
  app.add_option("--mode", mode, "independent | cooperative | robust | oracle-suite")->capture_default_str();
  app.add_option("--variant", variant, "model1 (cooperative) | model2 (self-conversion) | model3 (battery only)");
  app.add_option("--case", uncertainty, "uncertainty case for robust runs: case1..case4 (default case4)");
  app.add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
  app.add_option("--set", cfg.overrides, "override a scenario setting, e.g. algorithm.admm_tol=1e-4")
      ->take_all();
  app.add_option("--seed", cfg.seed, "recorded in the summary; all tie-breaks are deterministic");
  app.add_flag("--emit-trace", cfg.emit_trace, "write the ADMM iteration trace");

  auto* cmp = app.add_subcommand("compare", "side-by-side table of finished runs");
  std::vector<std::string> run_dirs;
  std::string cmp_out = "comparison";
  cmp->add_option("runs", run_dirs, "run directories")->required()->expected(2, -1);
  cmp->add_option("--out", cmp_out, "output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (cmp->parsed()) {
    try {
      for (const auto& f : hcng::compare_runs(run_dirs, cmp_out)) std::cout << f << '\n';
      return hcng::kExitOk;
    } catch (const hcng::ValidationError& e) {
      for (const auto& p : e.problems()) std::cerr << "error: " << p << '\n';
      return hcng::kExitValidation;
    } catch (const hcng::ParseError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return hcng::kExitValidation;
    }
  }

  try {
    cfg.mode = hcng::parse_mode(mode);
    if (!variant.empty()) cfg.variant = hcng::parse_variant(variant);
    if (!uncertainty.empty()) cfg.uncertainty = hcng::parse_case(uncertainty);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return hcng::kExitValidation;
  }
  if (cfg.scenario.empty()) {
    std::cerr << "error: --scenario is required\n" << app.help();
    return hcng::kExitValidation;
  }

  const hcng::RunResult res = hcng::run(cfg);
  for (const auto& f : res.files) std::cout << f << '\n';
  if (res.exit_code != hcng::kExitOk) std::cerr << res.message << '\n';
  return res.exit_code;
}
