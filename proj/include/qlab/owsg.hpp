// One-way state generator instances, the copy-cut states tau^{X Q^i}, the i* search and
// Monte Carlo one-wayness measurement.
#pragma once

#include "qlab/core.hpp"
#include "qlab/flattening.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace qlab {

// Keys are register indices of n bits. Ver(x', phi) accepts with probability
// Tr(P_{x'} phi), P_{x'} the support projector of phi_{x'}.
struct OwsgInstance {
  std::string type;
  std::size_t n = 1;
  std::size_t m = 1;
  std::vector<double> key_dist;  // 2^n entries
  std::vector<Mat> phi;          // 2^n states on a common dimension
  std::vector<Mat> ver;          // acceptance projectors per key

  std::size_t keys() const { return key_dist.size(); }
  std::size_t q_dim() const { return static_cast<std::size_t>(phi.front().rows()); }
  double accept_probability(std::uint64_t guess, std::uint64_t key) const;
  // Pr[Ver(x, phi_x)] averaged over key_dist.
  double correctness() const;
  void check() const;
};

// Fills ver with support projectors and validates.
OwsgInstance make_instance(std::string type, std::size_t n, std::size_t m, std::vector<double> key_dist,
                           std::vector<Mat> phi);

// phi_x = |x><x|, not one-way.
OwsgInstance orthogonal_pure_instance(std::size_t n, std::size_t m);
// phi_x random of the given rank on q_dim dimensions; rank sets the output entropy.
OwsgInstance random_mixed_instance(std::size_t n, std::size_t m, std::size_t q_dim, std::size_t rank,
                                   std::uint64_t seed);
// phi_x = |f(x)><f(x)| for a random f onto out_bits bits.
OwsgInstance classical_function_instance(std::size_t n, std::size_t m, std::size_t out_bits, std::uint64_t seed);
// phi_x = phi for every x.
OwsgInstance constant_instance(std::size_t n, std::size_t m, const Mat& phi);

// {type, n, m, seed, params}; params: q_dim, rank (random_mixed), out_bits (classical_function),
// key_dist (optional).
OwsgInstance instance_from_json(const json& j);

// tau^{X Q1..Qi}: X classical on 2^n, copies named Q1, Q2, ...
DensityState build_tau(const OwsgInstance& inst, std::size_t i);

struct IStarReport {
  std::vector<double> s2;    // S2(X | Q^i), i = 0..m
  std::vector<double> gaps;  // s2[i] - s2[i+1], i = 0..m-1
  double threshold = 0.0;
  std::size_t i_star = 0;    // smallest i with gap <= threshold, else the argmin
  double gap = 0.0;
  bool found = false;
  double telescoping_residual = 0.0;  // |sum gaps - (S2(X) - S2(X|Q^m))|
  bool sum_within_n = false;
  double min_gap = 0.0;               // most negative gap (nonnegativity check)
  json to_json() const;
};
// Gaps for i = 0..m-1, so only m copies are used.
IStarReport find_i_star(const OwsgInstance& inst, double threshold);
// c' log n.
double i_star_threshold(std::size_t n, double c_prime);

// Lines of the bound on S2(X|Q^i JB) - S2(X|Q^{i+1} JB) after flattening tau^{XQ^i}.
struct FlattenedGapReport {
  std::size_t i = 0;
  double s2_qjb = 0.0;       // S2(X|Q^i JB)
  double s2_q = 0.0;         // S2(X|Q^i)
  double s2_next = 0.0;      // S2(X|Q^{i+1})
  double s2_next_j = 0.0;    // S2(X|Q^{i+1} J)
  double s2_next_jb = 0.0;   // S2(X|Q^{i+1} JB)
  double j_bits = 0.0;       // |J|
  double difference = 0.0;   // s2_qjb - s2_next_jb
  double bound = 0.0;        // (s2_q - s2_next) + |J|
  std::vector<double> line_slacks;
  bool pass = false;
  json to_json() const;
};
FlattenedGapReport flattened_gap_check(const OwsgInstance& inst, std::size_t i, const FlatteningParams& params);

// ---- adversaries --------------------------------------------------------------

// Receives phi_x^{(x) m} and returns a key guess.
using KeyAdversary = std::function<std::uint64_t(const Mat& copies, Rng& rng)>;

KeyAdversary random_guess_adversary(std::size_t n);
KeyAdversary fixed_guess_adversary(std::uint64_t guess);
// Pretty-good measurement for the key ensemble on m copies; optimal for orthogonal supports.
KeyAdversary pgm_adversary(const OwsgInstance& inst);
// Exact Pr[Ver accepts] of the pretty-good measurement.
double pgm_exact_acceptance(const OwsgInstance& inst);

struct OneWaynessReport {
  int trials = 0;
  int accepts = 0;
  double rate = 0.0;
  double wilson_lo = 0.0, wilson_hi = 0.0;  // 95%
  json to_json() const;
};
OneWaynessReport measure_one_wayness(const OwsgInstance& inst, const KeyAdversary& adv, int trials,
                                     std::uint64_t seed);

// 95% Wilson score interval.
std::pair<double, double> wilson_interval(int successes, int trials, double z = 1.959963984540054);

}  // namespace qlab
