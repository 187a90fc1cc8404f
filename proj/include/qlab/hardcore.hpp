// Multi-bit inner-product hardcore function g(x, r) and the list decoder that inverts a
// predictor for <x, r>.
#pragma once

#include "qlab/core.hpp"
#include "qlab/extractors.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace qlab {

struct HardcoreSpec {
  std::size_t n = 1;        // input bits
  std::size_t out_len = 1;  // output bits, at most n
  std::size_t r_len() const { return 2 * n; }
  void check() const;
};

// Bit i = <x, r[i .. i+n-1]> mod 2.
BitVec hardcore_eval(const HardcoreSpec& spec, const BitVec& x, const BitVec& r);
// Same on register indices (first bit most significant).
std::uint64_t hardcore_index(const HardcoreSpec& spec, std::uint64_t x, std::uint64_t r);

// Exact law of g(X, R) for uniform X and R: probability of each output value.
std::vector<double> hardcore_output_law(const HardcoreSpec& spec);

// Predicts <x, r> for r on n bits. The rng is a per-call substream, so a predictor may be
// randomized; deterministic predictors ignore it.
using Predictor = std::function<int(std::uint64_t r, Rng& rng)>;

// Agrees with <x, r> except on a fixed pseudo-random set of r of density flip_rate.
Predictor noisy_parity_predictor(std::uint64_t x, std::size_t n, double flip_rate, std::uint64_t noise_seed);
// Ignores r and flips a coin.
Predictor coin_predictor();
// Quantum predictor: prepares a state for r and measures {povm1, 1 - povm1}.
Predictor measured_predictor(std::function<DensityState(std::uint64_t)> prepare, Mat povm1);

struct GlResult {
  std::vector<std::uint64_t> candidates;  // after pruning, deduplicated
  std::size_t raw_candidates = 0;         // 2^k guesses before pruning
  std::size_t k = 0;                      // seed vectors
  std::size_t queries = 0;
};

// Pairwise-independent sampling from k seed vectors with all 2^k guesses of their
// parities; the majority vote for every guess is one Walsh-Hadamard transform per bit.
// Candidates agreeing with the predictor on fewer than 1/2 + eps/2 of fresh samples are pruned.
GlResult gl_decode(const Predictor& pred, std::size_t n, double advantage_estimate, std::uint64_t rng_seed);

struct GlTrialReport {
  std::size_t n = 0;
  double flip_rate = 0.0;
  double advantage_estimate = 0.0;
  int trials = 0;
  int successes = 0;
  double mean_list_size = 0.0;
  json to_json() const;
};
// Uniform x per trial, noisy_parity_predictor with the given flip rate.
GlTrialReport gl_trials(std::size_t n, double flip_rate, double advantage_estimate, int trials, std::uint64_t seed);

}  // namespace qlab
