// Entropies and divergences in bits: von Neumann, Renyi, sandwiched Renyi
// divergence, conditional Renyi entropy and eigenbasis-smoothed S0 / Sinf.
#pragma once

#include "qlab/core.hpp"

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

double log2_safe(double x);

// ---- spectra -------------------------------------------------------------------

// Renyi entropy of a probability vector; alpha in [0, inf].
double renyi_of(const std::vector<double>& p, double alpha);
double shannon(const std::vector<double>& p);

double von_neumann(const DensityState& s);
double von_neumann(const Mat& m);
double renyi(const DensityState& s, double alpha);
double renyi(const Mat& m, double alpha);

// ---- divergences ---------------------------------------------------------------

struct DivergenceResult {
  double value = 0.0;
  bool support_violation = false;  // value is +inf because supp(rho) is not in supp(sigma)
};

// Sandwiched Renyi divergence on raw positive matrices (sigma need not be normalized).
DivergenceResult sandwiched_divergence(const Mat& rho, const Mat& sigma, double alpha);
DivergenceResult sandwiched_divergence(const DensityState& rho, const DensityState& sigma, double alpha);

// ---- conditional entropies ---------------------------------------------------

enum class Method { closed_form, variational, brute_grid };
std::string method_name(Method m);

struct ConditionalEntropyResult {
  double value = 0.0;
  DensityState optimizer_sigma;  // on the conditioning registers
  Method method = Method::closed_form;
  bool converged = true;
  int iterations = 0;
};

class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, double best)
      : std::runtime_error(what), best_value(best) {}
  double best_value;
};

// S_alpha(A|B) = -min_sigma D_alpha(rho_AB || 1_A (x) sigma_B), alpha in [1/2, inf].
// Registers outside A and B are traced out. An empty B gives S_alpha(A).
ConditionalEntropyResult conditional_renyi(const DensityState& s, const std::vector<std::string>& a,
                                           const std::vector<std::string>& b, double alpha);

// Block form used by the conditional solver: rho_AB = sum_k |k><k| (x) M_k where
// each M_k acts on C^{da} (x) C^{r}. A classical A gives da = 1 blocks.
struct CondBlocks {
  std::size_t da = 1;
  std::size_t r = 1;  // compressed B dimension
  std::vector<Mat> blocks;
  Mat support;        // dB x r isometry onto supp(rho_B)
};
CondBlocks condition_blocks(const DensityState& s, const std::vector<std::string>& a,
                            const std::vector<std::string>& b);
// Sum_k Tr[((1 (x) sigma^g) M_k (1 (x) sigma^g))^alpha], g = (1-alpha)/(2 alpha).
double cond_q(const CondBlocks& cb, const Mat& sigma, double alpha);
// Entropy from Q at a candidate sigma (the value -D at that sigma).
double cond_value(const CondBlocks& cb, const Mat& sigma, double alpha);

// S_alpha(A|B X) via the per-label expression for classical X.
double conditional_renyi_classical(const DensityState& s, const std::string& x,
                                   const std::vector<std::string>& a,
                                   const std::vector<std::string>& b, double alpha);

// Independent oracle: direct search over sigma_B on the full B space.
// dim(B) = 2 uses a Bloch-ball grid of the given step then zoom refinement;
// dim(B) in {3, 4} uses random-restart Nelder-Mead.
struct BruteOptions {
  double grid_step = 0.05;
  int restarts = 64;
  std::uint64_t seed = 1;
};
double brute_conditional_renyi(const DensityState& s, const std::vector<std::string>& a,
                               const std::vector<std::string>& b, double alpha,
                               const BruteOptions& opts = {});

// ---- smoothing -------------------------------------------------------------------

// Spectrum with multiplicities, used for large tensor powers.
struct WeightedSpectrum {
  std::vector<std::pair<double, double>> items;  // (eigenvalue, multiplicity)
  double total_mass() const;
};
WeightedSpectrum weighted(const std::vector<double>& p);
WeightedSpectrum weighted_tensor_power(const std::vector<double>& p, int t);

// Smoothing ball: subnormalized diagonal perturbations in the eigenbasis at
// generalized trace distance at most eps.
double smooth_s0(const WeightedSpectrum& w, double eps);
double smooth_sinf(const WeightedSpectrum& w, double eps);
double smooth_s0(const DensityState& s, double eps);
double smooth_sinf(const DensityState& s, double eps);
// Exhaustive oracles for short spectra (at most 16 entries).
double smooth_s0_exhaustive(const std::vector<double>& p, double eps);
double smooth_sinf_exhaustive(const std::vector<double>& p, double eps);

// ---- random channels -----------------------------------------------------------

// Random isometry C^din -> C^dout (x) C^env followed by tracing the environment.
struct RandomChannel {
  Mat v;
  std::size_t din = 1, dout = 1, denv = 1;
  Mat apply(const Mat& rho) const;
};
RandomChannel random_channel(Rng& rng, std::size_t din, std::size_t dout, std::size_t denv);

}  // namespace qlab
