// efi2owsg --pair pair.json --n N --report out.json [--t T] [--trials T] [--q Q] [--seed S]
// Builds the product OWSG from an EFI pair and runs the inverter-to-distinguisher harness
// with an inverter that succeeds with probability q and guesses otherwise.
#include "qlab/efi2owsg.hpp"
#include "qlab/lab.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace qlab;

int main(int argc, char** argv) {
  CLI::App app{"OWSG from an EFI pair"};
  std::string pair_path, report_path;
  std::size_t n = 4, t = 1;
  int trials = 10000;
  double q = 0.2;
  std::uint64_t seed = 1;
  app.add_option("--pair", pair_path, "pair JSON with rho0 and rho1")->required();
  app.add_option("--n", n, "key length")->required()->check(CLI::Range(1, 20));
  app.add_option("--report", report_path, "report path")->required();
  app.add_option("--t", t, "copies per position");
  app.add_option("--trials", trials, "reduction trials")->check(CLI::PositiveNumber);
  app.add_option("--q", q, "success probability of the engineered inverter")->check(CLI::Range(0.0, 1.0));
  app.add_option("--seed", seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitSchema;
  }

  return guarded_main([&] {
    const std::string started = utc_timestamp();
    auto pair = pair_from_json(load_json_file(pair_path));
    auto ow = build_owsg_from_efi(pair, n);
    auto inv = mixed_inverter(helstrom_majority_inverter(ow.h), q, n);
    const std::size_t advice = find_advice(inv, pair, n, t, std::max(1, trials / 2), seed);
    auto red = inverter_to_distinguisher(inv, pair, n, t, advice, trials, derive_seed(seed, 1));
    json report = {{"schema_version", kSchemaVersion},
                   {"n", n},
                   {"t", t},
                   {"q", q},
                   {"seed", seed},
                   {"half_l1", pair.half_l1()},
                   {"helstrom",
                    {{"p00", ow.h.p00}, {"p01", ow.h.p01}, {"p10", ow.h.p10}, {"p11", ow.h.p11},
                     {"advantage", ow.h.advantage()}, {"error", ow.h.error()}}},
                   {"correctness", ow.correctness()},
                   {"union_bound", ow.union_bound()},
                   {"reduction", red.to_json()}};
    const bool ok = std::abs(ow.h.advantage() - pair.half_l1()) <= 1e-9 &&
                    ow.correctness() >= ow.union_bound() - tol().num &&
                    std::abs(red.success - red.composed) <= 3.0 * red.std_error;
    report["pass"] = ok;
    write_json_with_sidecar(report, report_path, started);
    std::cout << "half l1 " << pair.half_l1() << ", correctness " << ow.correctness() << ", reduction success "
              << red.success << " (advice " << advice << "), report in " << report_path << "\n";
    return ok ? kExitOk : kExitFail;
  });
}
