// Randomized verification of the entropy and distance inequalities used by the
// constructions. Each fact maps a random instance to a slack that is
// nonnegative when the inequality holds (equalities report minus the deviation).
#pragma once

#include "qlab/core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace qlab {

struct FactFailure {
  std::size_t dim = 0;
  int trial = 0;
  double slack = 0.0;
};

struct FactReport {
  std::string fact_id;
  int trials = 0;
  std::vector<std::size_t> dims;
  double min_slack = 0.0;
  std::vector<double> min_slack_per_dim;
  std::vector<FactFailure> failures;
  bool pass() const { return failures.empty(); }
  json to_json() const;
};

// Slack of one random instance of total dimension dim.
using FactTrial = std::function<double(Rng&, std::size_t dim)>;

struct FactEntry {
  std::string id;
  std::string description;
  FactTrial trial;
};

const std::vector<FactEntry>& fact_registry();
std::vector<std::string> fact_ids();

// Runs trials per dimension with per-trial seeds derived from (seed, fact, dim, trial).
// Throws std::invalid_argument for an unknown fact id.
FactReport verify_fact(const std::string& fact_id, int trials, const std::vector<std::size_t>& dims,
                       std::uint64_t seed, double threshold = -1e-7);

// Splits a power-of-two dimension into k factors as evenly as possible, the
// earlier factors receiving the extra qubits. Non powers of two go to the first factor.
std::vector<std::size_t> split_dim(std::size_t dim, std::size_t k);

// 2-flat spectrum of the given length: entries drawn from [1, 2] then normalized.
std::vector<double> random_two_flat(Rng& rng, std::size_t len);

// Multi-copy smoothed entropy excess relative to t S(rho):
// e0(t) = S0^eps(rho^t) - t S(rho) and einf(t) = t S(rho) - Sinf^eps(rho^t),
// normalized by f(t) = sqrt(t n) sqrt(2 log(1/(2 eps))) + max(1, log n).
struct MultiCopyRow {
  int t = 0;
  double s0 = 0.0, sinf = 0.0, tS = 0.0, scale = 0.0;
  double excess0 = 0.0, excess_inf = 0.0;
};
struct MultiCopyReport {
  int n_qubits = 0;
  double eps = 0.0;
  std::vector<MultiCopyRow> rows;
  double measured_c = 0.0;  // max over rows of max(e0, einf) / f(t)
  bool monotone = true;     // e0 and einf nondecreasing in t
  json to_json() const;
};
MultiCopyReport multicopy_smoothing(const std::vector<double>& spectrum, int n_qubits, int t_max, double eps);

}  // namespace qlab
