// EFI pairs, Helstrom measurements, the product OWSG built from a pair and the
// inverter-to-distinguisher reduction.
#pragma once

#include "qlab/core.hpp"
#include "qlab/owsg.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace qlab {

struct EfiPair {
  DensityState rho0, rho1;
  double l1() const;       // ||rho0 - rho1||_1
  double half_l1() const;  // 1/2 ||rho0 - rho1||_1
};
EfiPair make_pair(DensityState rho0, DensityState rho1);
// {"rho0": state json, "rho1": state json}
EfiPair pair_from_json(const json& j);
json pair_to_json(const EfiPair& p);

// pi0 projects onto the nonnegative eigenspace of rho0 - rho1 (zero eigenvalues included).
struct Helstrom {
  Mat pi0, pi1;
  double p00 = 0.0, p01 = 0.0, p10 = 0.0, p11 = 0.0;  // p_ab = Tr(pi_a rho_b)
  double advantage() const { return p00 - p01; }
  // Largest per-position error max(1 - p00, 1 - p11).
  double error() const { return std::max(1.0 - p00, 1.0 - p11); }
};
Helstrom helstrom(const Mat& rho0, const Mat& rho1);
Helstrom helstrom(const EfiPair& p);

// pair^{(x) r}.
EfiPair amplify(const EfiPair& p, int r);
// Smallest r <= r_max with 1/2 ||.||_1 >= target; throws if none fits the cap.
EfiPair amplify_to(const EfiPair& p, double target, int r_max, int* r_used = nullptr);

// phi_x = rho_{x_1} (x) ... (x) rho_{x_n}, Ver projects onto pi_{x'_1} (x) ... (x) pi_{x'_n}.
// Acceptance probabilities factor over positions, so nothing is materialized.
struct EfiOwsg {
  EfiPair pair;
  Helstrom h;
  std::size_t n = 1;
  double accept_probability(std::uint64_t guess, std::uint64_t key) const;
  double correctness() const;
  double union_bound() const;  // 1 - n * error
  // Dense instance for cross-checks; subject to the dimension cap.
  OwsgInstance to_instance(std::size_t m = 1) const;
};
EfiOwsg build_owsg_from_efi(const EfiPair& p, std::size_t n);

// Sees the single-copy state of every position and t; it may only use them through
// t-copy measurements (the builtin inverters sample measurement outcomes).
using ProductInverter =
    std::function<std::uint64_t(const std::vector<const Mat*>& positions, std::size_t t, Rng& rng)>;

// Helstrom on each copy, majority per position (ties give 0).
ProductInverter helstrom_majority_inverter(const Helstrom& h);
ProductInverter random_inverter(std::size_t n);
// With probability q runs base, else guesses uniformly.
ProductInverter mixed_inverter(ProductInverter base, double q, std::size_t n);

struct ReductionReport {
  std::size_t n = 0, t = 0, advice = 0;  // advice i, 0-based position of the challenge
  int trials = 0;
  double inverter_success = 0.0;   // delta = Pr[X' = X]
  double prefix_match = 0.0;       // Pr[X'_{<i} = X_{<i}]
  double conditional = 0.0;        // Pr[X'_i = B | prefix match]
  bool three_quarters = false;     // conditional >= 3/4 at the advice
  double success = 0.0;            // Pr[A' = B]
  double composed = 0.0;           // prefix * conditional + (1 - prefix) / 2
  double std_error = 0.0;          // of success
  double bound = 0.0;              // 1/2 + delta / 4, i.e. 1/2 + 1/(8q) with delta = 1/(2q)
  double advantage = 0.0;          // Pr[A'(rho0) = 0] - Pr[A'(rho1) = 0] = 2 success - 1
  json to_json() const;
};
// Plants t copies of rho_B at the advice position, fills the others with fresh key bits,
// outputs X'_i on a prefix match and a coin otherwise.
ReductionReport inverter_to_distinguisher(const ProductInverter& inv, const EfiPair& p, std::size_t n, std::size_t t,
                                          std::size_t advice, int trials, std::uint64_t seed);
// Advice search: estimates the conditional rate at every position and returns the best.
std::size_t find_advice(const ProductInverter& inv, const EfiPair& p, std::size_t n, std::size_t t, int trials,
                        std::uint64_t seed);

}  // namespace qlab
