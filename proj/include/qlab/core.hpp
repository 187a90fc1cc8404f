// Finite-dimensional state algebra: layouts, density states, partial traces,
// spectra, distances, purification-based extensions and cq Markov chains.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace qlab {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using Rng = std::mt19937_64;
using json = nlohmann::json;

struct Tolerances {
  double herm = 1e-9;
  double psd = 1e-9;
  double tr = 1e-9;
  double recon = 1e-8;
  double num = 1e-7;
  double opt = 1e-6;  // optimizer agreement
};

// Process-wide tolerances. Mutable so experiments can tighten or loosen them.
Tolerances& tol();

class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// LAB_DIM_CAP or 4096.
std::size_t dim_cap();
void check_dim(std::size_t d, const std::string& what);

struct Subsystem {
  std::string name;
  std::size_t dim = 1;
  bool classical = false;
  bool operator==(const Subsystem& o) const {
    return name == o.name && dim == o.dim && classical == o.classical;
  }
};

// Ordered subsystems. The first subsystem is the most significant digit of
// the computational basis index.
class RegisterLayout {
 public:
  RegisterLayout() = default;
  explicit RegisterLayout(std::vector<Subsystem> subs);

  const std::vector<Subsystem>& subsystems() const { return subs_; }
  std::size_t size() const { return subs_.size(); }
  std::size_t total_dim() const;
  std::size_t index_of(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;
  std::size_t dim_of(const std::vector<std::string>& names) const;
  // Stride of subsystem k in the basis index.
  std::size_t stride(std::size_t k) const;

  RegisterLayout concat(const RegisterLayout& other) const;
  RegisterLayout select(const std::vector<std::string>& keep) const;

  bool operator==(const RegisterLayout& o) const { return subs_ == o.subs_; }
  bool operator!=(const RegisterLayout& o) const { return !(*this == o); }

 private:
  std::vector<Subsystem> subs_;
};

RegisterLayout qubits(const std::string& name, int n, bool classical = false);
RegisterLayout reg(const std::string& name, std::size_t dim, bool classical = false);

class DensityState {
 public:
  DensityState() = default;
  // Validates hermiticity, trace, positivity and classical block structure.
  DensityState(Mat m, RegisterLayout layout);
  // Skips the eigenvalue check; used for states produced by exact operations.
  static DensityState trusted(Mat m, RegisterLayout layout);

  const Mat& matrix() const { return m_; }
  const RegisterLayout& layout() const { return layout_; }
  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }

 private:
  Mat m_;
  RegisterLayout layout_;
};

// Validation helpers. Each returns the offending magnitude (0 when clean).
double hermiticity_defect(const Mat& m);
double classical_defect(const Mat& m, const RegisterLayout& layout);
void validate(const Mat& m, const RegisterLayout& layout, bool check_psd);

struct SpectralDecomp {
  RVec eigenvalues;  // descending, clipped, summing to one
  Mat eigenvectors;  // columns
};

// ---- matrix utilities -------------------------------------------------------

Mat kron(const Mat& a, const Mat& b);
Mat hermitize(const Mat& m);
// Eigen-decomposition of a Hermitian matrix, ascending eigenvalues.
void herm_eig(const Mat& a, RVec& w, Mat& v);
RVec herm_eigenvalues(const Mat& a);
// f applied to the spectrum of a Hermitian matrix.
template <class F>
Mat herm_fn(const Mat& a, F f) {
  RVec w;
  Mat v;
  herm_eig(a, w, v);
  RVec fw(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) fw(i) = f(w(i));
  return v * fw.cast<cplx>().asDiagonal() * v.adjoint();
}
Mat herm_pow(const Mat& a, double p, double cutoff = 1e-13);
Mat herm_sqrt(const Mat& a);
double trace_norm(const Mat& a);
double min_eigenvalue(const Mat& a);
double max_eigenvalue(const Mat& a);
Mat projector_onto_support(const Mat& a, double cutoff = 1e-12);

// ---- construction -----------------------------------------------------------

DensityState maximally_mixed(const RegisterLayout& layout);
DensityState basis_state(const RegisterLayout& layout, std::size_t index);
DensityState pure_state(const Vec& v, const RegisterLayout& layout);
DensityState diagonal_state(const std::vector<double>& p, const RegisterLayout& layout);

// sum_x dist[x] |x><x| (x) states[x], the label register marked classical.
DensityState make_cq_state(const std::vector<double>& dist,
                           const std::vector<DensityState>& states,
                           const std::string& label = "X");

DensityState tensor(const DensityState& a, const DensityState& b);
// Copies named base_1 .. base_t for every register of s.
DensityState tensor_power(const DensityState& s, int t);
DensityState rename(const DensityState& s, const std::vector<std::string>& names);

// Keeps the named subsystems in the order given.
DensityState partial_trace(const DensityState& s, const std::vector<std::string>& keep);
DensityState reorder(const DensityState& s, const std::vector<std::string>& order);
// Raw version on a matrix with explicit dims; keep lists indices in output order.
Mat partial_trace_raw(const Mat& m, const std::vector<std::size_t>& dims,
                      const std::vector<std::size_t>& keep);

// ---- spectra and distances ---------------------------------------------------

SpectralDecomp spectral_decompose(const DensityState& s);
// Clipped, renormalized, descending spectrum of a state matrix.
std::vector<double> spectrum(const Mat& m);

// ||a-b||_1 (unnormalized; the distinguishing advantage is half of this).
double trace_distance(const DensityState& a, const DensityState& b);
double fidelity(const DensityState& a, const DensityState& b);
double bures(const DensityState& a, const DensityState& b);
double fidelity(const Mat& a, const Mat& b);

// theta_AB with Tr_B theta = sigma_A and Bures(rho_AB, theta_AB) = Bures(rho_A, sigma_A).
// A is the leading block of rho_AB's layout with sigma_A's register names.
DensityState uhlmann_extension(const DensityState& rho_ab, const DensityState& sigma_a);

// ---- cq Markov chains ------------------------------------------------------

class CqMarkovChain {
 public:
  // Validates that state = sum_x p_x rho^A_x (x) |x><x| (x) rho^B_x.
  CqMarkovChain(DensityState state, std::vector<std::string> a, std::string x,
                std::vector<std::string> b);

  const DensityState& state() const { return state_; }  // ordered A, X, B
  const std::vector<std::string>& a() const { return a_; }
  const std::string& x() const { return x_; }
  const std::vector<std::string>& b() const { return b_; }
  // Largest block deviation from the product form.
  double markov_defect() const { return defect_; }

 private:
  DensityState state_;
  std::vector<std::string> a_;
  std::string x_;
  std::vector<std::string> b_;
  double defect_ = 0.0;
};

// Channel X -> XB, |x><x| -> |x><x| (x) rho^B_x.
struct RecoveryMap {
  RegisterLayout x_layout;
  RegisterLayout b_layout;
  std::vector<Mat> b_given_x;
  // Appends B after X. The input must contain X as a classical register;
  // registers before X stay in front, registers after X follow B.
  DensityState apply(const DensityState& s) const;
};

RecoveryMap markov_recovery(const CqMarkovChain& chain);
double markov_defect(const Mat& axb, std::size_t da, std::size_t dx, std::size_t db);

// ---- serialization ---------------------------------------------------------

json layout_to_json(const RegisterLayout& layout);
RegisterLayout layout_from_json(const json& j);
json state_to_json(const DensityState& s);
DensityState state_from_json(const json& j);

// ---- randomness ------------------------------------------------------------

// Deterministic sub-seed for (seed, a, b, c) streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);
Mat ginibre(Rng& rng, std::size_t rows, std::size_t cols);
Mat random_density_matrix(Rng& rng, std::size_t d, std::size_t rank = 0);
Vec random_pure_vector(Rng& rng, std::size_t d);
Mat haar_unitary(Rng& rng, std::size_t d);
// Haar-distributed isometry C^cols -> C^rows.
Mat haar_isometry(Rng& rng, std::size_t rows, std::size_t cols);
DensityState random_state(Rng& rng, const RegisterLayout& layout, std::size_t rank = 0);
// Random cq state: first register classical with a random distribution.
DensityState random_cq_state(Rng& rng, std::size_t dx, const RegisterLayout& rest,
                             const std::string& label = "X", std::size_t rank = 0);
std::vector<double> random_distribution(Rng& rng, std::size_t k);

}  // namespace qlab
