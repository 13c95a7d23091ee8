// qdisp: closed-form entanglement dynamics of two atoms in dispersive lossy
// cavities, with figure presets and a brute-force oracle check.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "qdisp/config.hpp"
#include "qdisp/lindblad.hpp"
#include "qdisp/sweep.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericalFailure = 3, kIoError = 4 };

int write_result(const qdisp::SweepResult& result, const std::string& csv, bool plots,
                 bool deterministic) {
  if (csv.empty()) {
    std::cout << qdisp::to_csv(result, deterministic);
    return kOk;
  }
  qdisp::emit_csv(result, csv, deterministic);
  if (plots) {
    const std::filesystem::path p(csv);
    std::filesystem::path script = p;
    script.replace_extension(".gp");
    std::ofstream(script) << qdisp::plot_script(result, p.filename().string());
  }
  return kOk;
}

int run_oracle(const qdisp::RunConfig& cfg) {
  const auto cmp = qdisp::compare_with_oracle(cfg);
  fmt::print("oracle: N = {}, dt = {:g}, samples = {}\n", cmp.truncation, cmp.dt, cmp.samples);
  fmt::print("max |rho_analytic - rho_oracle| = {:.3e}\n", cmp.max_density_deviation);
  fmt::print("max |C_analytic - C_oracle|     = {:.3e}\n", cmp.max_concurrence_deviation);
  const bool ok = cmp.max_density_deviation < qdisp::kOracleTolerance;
  fmt::print("{} (tolerance {:g})\n", ok ? "PASS" : "FAIL", qdisp::kOracleTolerance);
  return ok ? kOk : kNumericalFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entanglement and coherence of two atoms in dispersive dissipative cavities"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads for grid sweeps (0 = all cores)");

  std::string config_path;
  bool deterministic = false;
  bool with_oracle = false;
  auto* run = app.add_subcommand("run", "evaluate the grid of a config file and write CSV");
  run->add_option("config", config_path, "YAML run configuration")->required();
  run->add_flag("--deterministic", deterministic, "omit the timestamp line from the CSV");
  run->add_flag("--with-oracle", with_oracle, "also cross-check against the Lindblad oracle");

  std::string figure_name;
  std::string out_dir = ".";
  bool figure_plots = false;
  auto* figure = app.add_subcommand("figure", "reproduce a figure grid as CSV");
  figure->add_option("name", figure_name, "fig2 .. fig7")
      ->required()
      ->check(CLI::IsMember({"fig2", "fig3", "fig4", "fig5", "fig6", "fig7"}));
  figure->add_option("--out", out_dir, "output directory");
  figure->add_flag("--deterministic", deterministic, "omit the timestamp line from the CSV");
  figure->add_flag("--plots", figure_plots, "also write a gnuplot script per CSV");

  auto* check = app.add_subcommand("check-oracle", "compare the closed form with the two-copy oracle");
  check->add_option("config", config_path, "YAML run configuration")->required();

  auto* rep = app.add_subcommand("report", "summarize ESD, asymptote and threshold time");
  rep->add_option("config", config_path, "YAML run configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*figure) {
      std::filesystem::create_directories(out_dir);
      for (const auto& panel : qdisp::run_figure(*qdisp::parse_figure(figure_name), threads)) {
        const auto path = std::filesystem::path(out_dir) / (panel.name + ".csv");
        write_result(panel.result, path.string(), figure_plots, deterministic);
        fmt::print("wrote {}\n", path.string());
      }
      return kOk;
    }

    const qdisp::RunConfig cfg = qdisp::load_config(config_path);
    if (*run) {
      const auto result = qdisp::run_sweep(cfg, threads);
      const int rc = write_result(result, cfg.output.csv, cfg.output.plots,
                                  deterministic || cfg.output.deterministic);
      if (rc != kOk) return rc;
      if (with_oracle || cfg.oracle.enabled) return run_oracle(cfg);
      return kOk;
    }
    if (*check) return run_oracle(cfg);
    if (*rep) {
      std::cout << qdisp::report(cfg, qdisp::run_sweep(cfg, threads));
      return kOk;
    }
  } catch (const qdisp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const qdisp::CsvError& e) {
    std::cerr << "numerical check failed: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const qdisp::Error& e) {
    std::cerr << "numerical check failed: " << e.what() << "\n";
    return kNumericalFailure;
  }
  return kOk;
}
