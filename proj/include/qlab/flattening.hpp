// Flattening by the brothers extension: bin the eigenvalues of a state into a
// classical register J, then pad each bin with uniform classical bits B so the
// extended spectrum lies in (gamma, 2 gamma] outside the J = 0 tail.
#pragma once

#include "qlab/core.hpp"
#include "qlab/entropy.hpp"

#include <vector>

namespace qlab {

struct FlatteningParams {
  int bin_count = 16;       // N_J
  int brother_budget = 16;  // N_B, at least the largest brother count used
  double gamma() const { return std::exp2(-bin_count); }
  void check() const;
};

// j = r iff p in (2^-r, 2^-r+1] for r in [1, N_J], else 0.
int bin_index(double p, int bin_count);
// Qubits of J: ceil(log2(N_J + 1)).
std::size_t j_qubits(int bin_count);

// Eigen-decomposition with one bin label per eigenvector. When the first register is
// classical the eigenvectors are taken inside its blocks, so each carries a label x.
struct BinnedState {
  DensityState input;
  std::vector<double> p;              // eigenvalues, zeros dropped
  Mat vectors;                        // columns e_k on the input space
  std::vector<std::size_t> label;     // block of the first register (0 if not classical)
  std::vector<int> bins;              // j_k
  std::vector<double> q;              // Pr(J = j), j = 0..N_J
  FlatteningParams params;
  DensityState with_j() const;        // sum_k p_k |e_k><e_k| (x) |j_k><j_k|, J appended
};
BinnedState bin_spectrum(const DensityState& s, const FlatteningParams& params);

// Brothers: B = U_{N_B - j} for j != 0; for j = 0, U_{floor(log(q0 / gamma))} when
// q0 >= gamma, else one brother |0>. B has N_B qubits, unused ones fixed to |0>.
struct FlattenedState {
  BinnedState binned;
  std::vector<int> brothers;  // uniform qubits of B per j
  std::size_t j_qubits = 0, b_qubits = 0;

  // Sector of the input with J = j (subnormalized, weight q_j).
  Mat sector(int j) const;
  Mat marginal() const;  // Tr_JB, equals the input
  WeightedSpectrum extended_spectrum() const;
  // Max / min extended eigenvalue over J != 0 (1 when the sector is empty).
  double nonzero_sector_ratio() const;
  // Dense state over (input registers, J, B); subject to the dimension cap.
  DensityState materialize() const;
};
FlattenedState attach_brothers(const BinnedState& b);
FlattenedState flatten(const DensityState& s, const FlatteningParams& params);

// S(XQJB) <= S2(X|QJB) + S(QJB) + 2 with X the first register and Q the rest.
struct FlatnessReport {
  double s_total = 0.0;      // S(XQJB)
  double s2_cond = 0.0;      // S2(X|QJB)
  double s_rest = 0.0;       // S(QJB)
  double excess = 0.0;       // S(XQJB) - S2(X|QJB) - S(QJB), at most 2
  double slack = 0.0;        // 2 - excess
  bool pass = false;
  json to_json() const;
};
FlatnessReport verify_flatness_claim(const FlattenedState& f);

// S_alpha(X|Q J B) for the flattened state. B is independent of XQ given J, so this is
// the per-label expression over J.
double cond_x_given_rest(const FlattenedState& f, double alpha);
// Same with an extra register attached per label x of the first register (the next
// copy of a cq-state): each e_k = |x> (x) v gains ext[x]. Requires a classical first register.
double cond_x_given_rest_extended(const FlattenedState& f, const std::vector<Mat>& ext, double alpha);
// S(Q J B).
double entropy_rest(const FlattenedState& f);
// S(X Q J B).
double entropy_total(const FlattenedState& f);

json flattening_to_json(const FlattenedState& f, const FlatnessReport& r);

}  // namespace qlab
