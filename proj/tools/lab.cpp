// lab run --config c.json [--seed S] [--out dir]
// lab plot --report r.json --metric m [--out f.csv]
// lab flatten --spectrum 0.5,0.25,0.25 [--bins N_J] [--brothers N_B]
#include "qlab/flattening.hpp"
#include "qlab/lab.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace qlab;

int main(int argc, char** argv) {
  CLI::App app{"experiment runner"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a suite and write report.json, report.csv and report.meta.json");
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  run->add_option("--config", config_path, "experiment config")->required();
  auto* seed_opt = run->add_option("--seed", seed, "override the config seed");
  run->add_option("--out", out_dir, "output directory (default: config output, else lab_out)");

  auto* plot = app.add_subcommand("plot", "emit tidy x,y,series CSV for one metric");
  std::string report_path, metric, plot_out;
  plot->add_option("--report", report_path, "report.json")->required();
  plot->add_option("--metric", metric, "metric name")->required();
  plot->add_option("--out", plot_out, "CSV file (default: stdout)");

  auto* flat = app.add_subcommand("flatten", "flatten a diagonal spectrum and print the report");
  std::vector<double> spectrum;
  int bins = 16, brothers = 16;
  flat->add_option("--spectrum", spectrum, "eigenvalues")->required()->delimiter(',');
  flat->add_option("--bins", bins, "N_J");
  flat->add_option("--brothers", brothers, "N_B");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitSchema;
  }

  return guarded_main([&] {
    if (*run) {
      const std::string started = utc_timestamp();
      const std::string base = std::filesystem::path(config_path).parent_path().string();
      auto cfg = ExperimentConfig::from_json(load_json_file(config_path), base.empty() ? "." : base);
      if (*seed_opt) cfg.seed = seed;
      const std::string dir = !out_dir.empty() ? out_dir : !cfg.output.empty() ? cfg.output : "lab_out";
      auto rep = run_suite(cfg);
      write_report(rep, dir, started, utc_timestamp());
      int failing = 0;
      for (const auto& r : rep.records) failing += !r.pass;
      std::cout << cfg.suite << ": " << rep.records.size() << " records, " << failing << " failing, report in " << dir
                << "\n";
      return rep.pass() ? kExitOk : kExitFail;
    }
    if (*plot) {
      auto rep = ExperimentReport::from_json(load_json_file(report_path));
      const std::string csv = emit_plot_data(rep, metric);
      if (plot_out.empty())
        std::cout << csv;
      else
        std::ofstream(plot_out) << csv;
      return kExitOk;
    }
    auto f = flatten(diagonal_state(spectrum, reg("X", spectrum.size())), {bins, brothers});
    auto rep = verify_flatness_claim(f);
    std::cout << flattening_to_json(f, rep).dump(2) << "\n";
    return rep.pass ? kExitOk : kExitFail;
  });
}
