// The imbalanced EFI built from an OWSG: tau_0 / tau_1 blocks, the rho_0 / rho_1 mixtures,
// the hash length l_{i*}, the entropy gap chain, k*, the extracted t-fold output and the
// hybrid-argument harness.
//
// Registers of tau_0(i, l): Q^i, H (Toeplitz seed of 2n - 1 bits), Z = H^l(X) (the first l
// hash bits), R (2n bits), G = g(X, R) (hardcore_len bits). The primed versions keep J and B
// from flattening tau^{X Q^i}. Entropies are computed from per-key blocks: every classical
// register is a function of (x, h, r), so each block is a sum of p_x phi_x^{(x) i} over the
// keys sharing a label.
#pragma once

#include "qlab/core.hpp"
#include "qlab/entropy.hpp"
#include "qlab/extractors.hpp"
#include "qlab/flattening.hpp"
#include "qlab/owsg.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qlab {

struct PipelineParams {
  double c_prime = 1.0;         // i* threshold c' log n
  double c_dprime = 1.0;        // c''
  int hardcore_len = -1;        // -1: n
  double hash_offset = -1.0;    // -1: (12 + 2c'') log n
  FlatteningParams flat{16, 16};
  int t = 1;
  double eps = 0.0;
  double kappa_log = -1.0;      // -1: 2 log t0 + 4 with t0 = max(n, t)
  int out_len = -1;             // -1: (qubits of rho_0^{(x) t}) + 1
  std::uint64_t seed = 1;
  UnitarySampler sampler = UnitarySampler::haar;

  std::size_t hl(std::size_t n) const;
  double offset(std::size_t n) const;
  double kappa(std::size_t n) const;
  void check(std::size_t n) const;
  json to_json() const;
  static PipelineParams from_json(const json& j);
};

// Seed bits of the full n -> n Toeplitz hash.
inline std::size_t hash_seed_bits(std::size_t n) { return 2 * n - 1; }

// l_{i*} = max(0, floor(S2(X|Q^{i+1} J B) - offset)), capped at n.
struct LStar {
  std::size_t i = 0;
  double s2_next_jb = 0.0;
  double offset = 0.0;
  std::size_t l = 0;
  double offset_eff = 0.0;  // s2_next_jb - l
};
LStar compute_l_star(const OwsgInstance& inst, std::size_t i, const PipelineParams& params);

// Exact von Neumann entropies of one (i, l) block, in bits.
struct BlockEntropies {
  std::size_t i = 0, l = 0, hl = 0, s = 0;
  double tau0 = 0.0, tau1 = 0.0;          // S(tau_0), S(tau_1)
  double tau0p = 0.0, tau1p = 0.0;        // S(tau'_0), S(tau'_1)
  double tau1_tilde = 0.0;                // S(Q^i JB) + s + l + 2n + hl
  double s_xqjb = 0.0, s_qjb = 0.0;       // S(X Q^i J B), S(Q^i J B)
  double s_b_given_j = 0.0;               // S(B|J)
  double j_bits = 0.0;                    // |J|
  double qubits = 0.0;                    // log d of tau'_0
  double d_hash = 0.0;                    // || Q^i JB H Z - Q^i JB (x) U_s (x) U_l ||_1
  double d_hash_next = 0.0;               // same with Q^{i+1}
  double s2_next_jb = 0.0;                // S2(X|Q^{i+1} JB)
  double visible_marginal_diff = 0.0;     // tau_0 vs tau_1 on Q^i H Z
  json to_json() const;
};
BlockEntropies block_entropies(const OwsgInstance& inst, std::size_t i, std::size_t l, const PipelineParams& params);

// Dense blocks for small cases (dimension cap applies). Layout [J, B,] H, Z, R, G, Q1..Qi;
// empty registers are omitted.
DensityState build_tau0(const OwsgInstance& inst, std::size_t i, std::size_t l, const PipelineParams& params,
                        bool keep_jb = false);
DensityState build_tau1(const OwsgInstance& inst, std::size_t i, std::size_t l, const PipelineParams& params,
                        bool keep_jb = false);

// Grid i = 0..m, l = 0..n with weight 1/G each.
std::size_t grid_size(const OwsgInstance& inst);

struct EfiCandidatePair {
  DensityState rho0, rho1;
  std::size_t i_star = 0, l_star = 0;
  bool rho0_uniform = true, rho1_uniform = false;  // rho_1 needs (i*, l*) as advice
};
// Dense rho_0 / rho_1 on IDX, H, Z (n bits), R, G, Q1..Qm with missing copies and hash
// bits padded by |0>.
DensityState build_rho0(const OwsgInstance& inst, const PipelineParams& params);
DensityState build_rho1(const OwsgInstance& inst, std::size_t i_star, std::size_t l_star,
                        const PipelineParams& params);
EfiCandidatePair build_pair(const OwsgInstance& inst, std::size_t i_star, std::size_t l_star,
                            const PipelineParams& params);

// Spectra of rho_0 and rho_1 from the block structure (no dense matrices).
WeightedSpectrum rho_spectrum(const OwsgInstance& inst, const PipelineParams& params, bool swap_block,
                              std::size_t i_star = 0, std::size_t l_star = 0);
double spectrum_entropy(const WeightedSpectrum& w);
// Exact t-fold power of a weighted spectrum, merging equal eigenvalues; throws past max_items.
WeightedSpectrum weighted_power(const WeightedSpectrum& w, int t, std::size_t max_items = 4000000);

struct AuditLine {
  std::string id;
  double lhs = 0.0, rhs = 0.0;  // asserted lhs <= rhs
  bool asserted = true;         // false when the line's hypotheses fail
  double slack() const { return rhs - lhs; }
  bool pass(double tol) const { return !asserted || slack() >= -tol; }
};
json audit_lines_to_json(const std::vector<AuditLine>& lines, double tol);

struct GapChainReport {
  IStarReport istar;
  LStar lstar;
  BlockEntropies block;
  double c_log_n = 0.0;          // c' log n
  double rho0_entropy = 0.0, rho1_entropy = 0.0;
  double rho_diff = 0.0;         // S(rho_1) - S(rho_0) from the spectra
  double rho_diff_blocks = 0.0;  // (S(tau_1) - S(tau_0)) / G at (i*, l*)
  std::vector<AuditLine> lines;
  bool pass = false;
  json to_json() const;
};
GapChainReport entropy_gap_audit(const OwsgInstance& inst, const PipelineParams& params);

// ---- t-fold extraction ----------------------------------------------------------

// Embeds a state into the next power of two (zero padding, spectrum unchanged).
DensityState pad_to_qubits(const DensityState& s);
std::size_t qubit_count(std::size_t dim);

struct EfiRun {
  DensityState output;
  std::size_t input_qubits = 0, seed_len = 0, out_len = 0, traced = 0;
  double kappa = 0.0;
  int k = 0;
};
// b = 1: maximally mixed on out_len qubits. b = 0: Ext_Q(rho^{(x) t}, U_{s_Q(k)}) with
// s_Q(k) = max(0, out_len - 1 - k + kappa), raised so out_len fits.
// kappa uses t0 = max(key_len, t).
EfiRun run_efi_k(const DensityState& rho0, const PipelineParams& params, int b, int k, Rng& rng,
                 std::size_t key_len = 1);

// k* = S_inf^eps(rho_1^{(x) t}).
double compute_k_star(const WeightedSpectrum& rho1, int t, double eps);
double compute_k_star(const DensityState& rho1, int t, double eps);

struct FarnessRow {
  int delta = 0, k = 0;
  std::size_t seed_len = 0, traced = 0;
  double mean_distance = 0.0, min_distance = 0.0;  // 1/2 || out - U ||_1
  double target = 0.0;                              // 1 - 2^{-delta/2}
  double max_rank_bits = 0.0;                       // log2 rank of the outputs
  double rank_bound_seed = 0.0;                     // S0^eps(rho_0^t) + s
  double rank_bound_traced = 0.0;                   // + traced qubits
  double distance_floor = 0.0;                      // 1 - 2^{rank_bound_traced - out_len}
};
struct FarnessReport {
  double k_star = 0.0;             // S_inf^eps(rho_1^{(x) t})
  double k_star_support = 0.0;     // S0^eps(rho_0^{(x) t}), the other threshold convention
  std::size_t out_len = 0, input_qubits = 0;
  std::vector<FarnessRow> rows;
  json to_json() const;
};
FarnessReport efi_farness_audit(const DensityState& rho0, const DensityState& rho1, const PipelineParams& params,
                                const std::vector<int>& deltas, int samples);

// ---- hybrid argument ------------------------------------------------------------

struct HybridReport {
  std::size_t t = 0;
  double overall = 0.0;                 // Tr D (rho_0^t - rho_1^t)
  double helstrom_t = 0.0;              // 1/2 || rho_0^t - rho_1^t ||_1
  std::vector<double> steps;            // Tr D (H_{i-1} - H_i), i = 1..t
  double sum_abs_steps = 0.0;
  double telescoping_residual = 0.0;    // |sum steps - overall|
  std::vector<double> single_copy;      // advantage of the single-copy operator E_i
  double best_single = 0.0;
  double helstrom_1 = 0.0;              // 1/2 || rho_0 - rho_1 ||_1
  double mix_weight = 0.0;              // p in p sigma + (1 - p) rho_b
  double mixed_advantage = 0.0;         // Helstrom advantage of the mixtures
  double mixed_bound = 0.0;             // (1 - p) helstrom_1
  double channel_distance = 0.0;        // 1/2 || N(rho_0) - N(rho_1) ||_1
  std::vector<AuditLine> lines;
  bool pass = false;
  json to_json() const;
};
// d is a POVM element on the t-fold space (outcome "0").
HybridReport hybrid_advantage_check(const Mat& d, const Mat& rho0, const Mat& rho1, std::size_t t, double mix_weight,
                                    std::uint64_t seed);

}  // namespace qlab
