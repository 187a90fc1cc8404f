// Toeplitz 2-universal hashing with exact leftover-hash distances, and the quantum
// extractor Tr_S G (psi (x) |0><0| (x) U_s) G^dag with sampled unitaries.
#pragma once

#include "qlab/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qlab {

using BitVec = std::vector<std::uint8_t>;

// Register index <-> bits, first bit most significant.
BitVec bits_of(std::uint64_t v, std::size_t n);
std::uint64_t value_of(const BitVec& b);

// T_ij = seed[i - j + n_in - 1], i < l_out, j < n_in.
struct ToeplitzHash {
  std::size_t n_in = 0;
  std::size_t l_out = 0;
  BitVec seed;  // n_in + l_out - 1 bits (empty when l_out = 0)
  ToeplitzHash() = default;
  ToeplitzHash(std::size_t n, std::size_t l, BitVec s);
  static std::size_t seed_len(std::size_t n, std::size_t l) { return l == 0 ? 0 : n + l - 1; }
  // Row masks over input bit positions (bit j of the mask is column j).
  std::vector<std::uint64_t> row_masks() const;
};

BitVec hash_eval(const ToeplitzHash& h, const BitVec& x);
// Hash of the input with register index xv; returns the output register index.
std::uint64_t hash_index(const std::vector<std::uint64_t>& rows, std::uint64_t xv, std::size_t n_in);

// Max over x != x' of Pr_seed[H(x) = H(x')], exhaustive over seeds and pairs.
double toeplitz_collision_probability(std::size_t n_in, std::size_t l_out);

// tau^{X H H^{l'}(X) Q} for a cq-state with X on n qubits (first register, classical).
// The hash has l = floor(S2(X|Q)) output bits. Throws if l_prime > l.
DensityState apply_classical_extractor(const DensityState& s, std::size_t l_prime);

// || Q H H^{l'}(X) - Q (x) U_s (x) U_{l'} ||_1, exact per seed, averaged over all seeds
// when n <= exhaustive_max_n and over sampled seeds otherwise.
struct LeftoverHashReport {
  std::size_t n = 0;
  double l = 0.0;           // S2(X|Q)
  std::size_t l_out = 0;    // floor(l)
  std::size_t l_prime = 0;
  double measured_distance = 0.0;
  double bound = 0.0;       // 2^{-(l - l')/2}
  bool exhaustive = true;
  std::size_t seeds_used = 0;
  bool pass = false;
  json to_json() const;
};
LeftoverHashReport leftover_hash_audit(const DensityState& s, std::size_t l_prime, std::size_t sampled_seeds = 10000,
                                       std::uint64_t rng_seed = 1, std::size_t exhaustive_max_n = 3);
// Distance for one fixed seed.
double extractor_distance_for_seed(const DensityState& s, const ToeplitzHash& h);

// ---- quantum extractor ------------------------------------------------------

enum class UnitarySampler { haar, two_design };

struct QuantumExtractorSpec {
  std::size_t n_qubits = 1;    // input R
  std::size_t seed_len = 0;    // s
  std::size_t output_len = 1;  // output qubits; S has n + 1 + s - output_len qubits
  UnitarySampler sampler = UnitarySampler::haar;
  std::size_t traced_qubits() const { return n_qubits + 1 + seed_len - output_len; }
  void check() const;
};

// s = ceil(o - 1 - Sinf^eps(psi) + kappa), clipped at 0. For o = 4n + 1 this is
// 4n - Sinf^eps(psi) + kappa.
std::size_t seed_law(std::size_t output_len, double sinf_eps, double kappa);

// Ext_Q(psi, U_s) for one sampled G. Haar G only matters on supp(psi (x) |0><0| (x) 1),
// so it is drawn as a Haar isometry from that support. two_design applies a random
// Clifford circuit.
DensityState apply_quantum_extractor(const DensityState& psi, const QuantumExtractorSpec& spec, Rng& rng);

struct RankAuditReport {
  double delta = 0.0;
  double input_s0 = 0.0;   // S0^delta(psi)
  double seed = 0.0;       // s
  double max_output_s0 = 0.0;
  double min_slack = 0.0;  // min over samples of S0^delta(psi) + s - S0^delta(out)
  int samples = 0;
  bool pass = false;
  json to_json() const;
};
RankAuditReport quantum_extractor_rank_audit(const DensityState& psi, const QuantumExtractorSpec& spec, double delta,
                                             int samples, std::uint64_t rng_seed);

struct SeedSweepRow {
  double kappa = 0.0;
  std::size_t seed = 0;
  double mean_distance = 0.0;  // mean ||Ext_Q - U_o||_1 over samples
  double max_distance = 0.0;
  double rank_slack = 0.0;     // min rank-law slack over samples
};
struct SeedSweepReport {
  std::vector<SeedSweepRow> rows;
  bool monotone = true;  // mean distance nonincreasing in kappa (within 1e-12)
  json to_json() const;
};
SeedSweepReport quantum_extractor_seed_sweep(const DensityState& psi, std::size_t output_len, double eps,
                                             const std::vector<double>& kappas, int samples, double delta,
                                             std::uint64_t rng_seed,
                                             UnitarySampler sampler = UnitarySampler::haar);

}  // namespace qlab
