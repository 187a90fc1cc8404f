#include "qlab/facts.hpp"

#include "qlab/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qlab {

std::vector<std::size_t> split_dim(std::size_t dim, std::size_t k) {
  std::vector<std::size_t> out(k, 1);
  if (k == 0) return out;
  if ((dim & (dim - 1)) != 0) {
    out[0] = dim;
    return out;
  }
  std::size_t q = 0;
  while ((std::size_t{1} << q) < dim) ++q;
  for (std::size_t b = 0; b < q; ++b) out[b % k] *= 2;
  return out;
}

std::vector<double> random_two_flat(Rng& rng, std::size_t len) {
  std::uniform_real_distribution<double> u(1.0, 2.0);
  std::vector<double> p(len);
  double t = 0.0;
  for (auto& x : p) {
    x = u(rng);
    t += x;
  }
  for (auto& x : p) x /= t;
  return p;
}

json FactReport::to_json() const {
  json f = json::array();
  for (const auto& e : failures) f.push_back({{"dim", e.dim}, {"trial", e.trial}, {"slack", e.slack}});
  return {{"fact_id", fact_id},     {"trials", trials},     {"dims", dims},
          {"min_slack", min_slack}, {"min_slack_per_dim", min_slack_per_dim},
          {"failures", f},          {"pass", pass()}};
}

namespace {

constexpr double kE = 2.718281828459045;

std::size_t uniform_index(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

// Random state whose rank is drawn uniformly, so boundary cases occur.
Mat rand_mat(Rng& rng, std::size_t d) { return random_density_matrix(rng, d, 1 + uniform_index(rng, d)); }
Mat full_rank(Rng& rng, std::size_t d) { return random_density_matrix(rng, d); }

DensityState state_on(Rng& rng, const std::vector<std::pair<std::string, std::size_t>>& regs, bool full = true) {
  std::vector<Subsystem> subs;
  std::size_t d = 1;
  for (const auto& [n, k] : regs) {
    subs.push_back({n, k, false});
    d *= k;
  }
  return DensityState::trusted(full ? full_rank(rng, d) : rand_mat(rng, d), RegisterLayout(subs));
}

// sum_x p_x |x><x| (x) rho_x with the label in front.
DensityState cq_on(Rng& rng, const std::string& label, std::size_t dx,
                   const std::vector<std::pair<std::string, std::size_t>>& regs, bool full = true) {
  auto p = random_distribution(rng, dx);
  std::vector<DensityState> states;
  for (std::size_t x = 0; x < dx; ++x) states.push_back(state_on(rng, regs, full));
  return make_cq_state(p, states, label);
}

// A - X - B chain in the order A, X, B.
DensityState markov_chain(Rng& rng, std::size_t da, std::size_t dx, std::size_t db) {
  auto p = random_distribution(rng, dx);
  Mat m = Mat::Zero(da * dx * db, da * dx * db);
  for (std::size_t x = 0; x < dx; ++x) {
    Mat px = Mat::Zero(dx, dx);
    px(x, x) = p[x];
    m += kron(kron(full_rank(rng, da), px), full_rank(rng, db));
  }
  return DensityState::trusted(m, reg("A", da).concat(reg("X", dx, true)).concat(reg("B", db)));
}

double cond(const DensityState& s, const std::vector<std::string>& a, const std::vector<std::string>& b,
            double alpha) {
  return conditional_renyi(s, a, b, alpha).value;
}

double div(const Mat& r, const Mat& s, double alpha) { return sandwiched_divergence(r, s, alpha).value; }

double fuchs(Rng& rng, std::size_t d) {
  auto r = DensityState::trusted(rand_mat(rng, d), reg("A", d));
  auto s = DensityState::trusted(rand_mat(rng, d), reg("A", d));
  const double half = 0.5 * trace_distance(r, s);
  const double b = bures(r, s);
  return std::min(half - b * b, std::sqrt(2.0) * b - half);
}

double triangle(Rng& rng, std::size_t d) {
  auto a = DensityState::trusted(rand_mat(rng, d), reg("A", d));
  auto b = DensityState::trusted(rand_mat(rng, d), reg("A", d));
  auto c = DensityState::trusted(rand_mat(rng, d), reg("A", d));
  return trace_distance(a, b) + trace_distance(b, c) - trace_distance(a, c);
}

double identity_upper(Rng& rng, std::size_t d) {
  auto f = split_dim(d, 2);
  auto s = state_on(rng, {{"A", f[0]}, {"B", f[1]}}, false);
  Mat sa = partial_trace(s, {"A"}).matrix();
  Mat ib = Mat::Identity(f[1], f[1]);
  double slack = min_eigenvalue(static_cast<double>(f[1]) * kron(sa, ib) - s.matrix());
  auto cq = cq_on(rng, "X", f[0], {{"B", f[1]}}, false);
  Mat sx = partial_trace(cq, {"X"}).matrix();
  Mat sb = partial_trace(cq, {"B"}).matrix();
  slack = std::min(slack, min_eigenvalue(kron(sx, ib) - cq.matrix()));
  slack = std::min(slack, min_eigenvalue(kron(Mat::Identity(f[0], f[0]), sb) - cq.matrix()));
  return slack;
}

double dmax_markov(Rng& rng, std::size_t d) {
  auto f = split_dim(d, 3);  // X, A, B
  auto s = markov_chain(rng, f[1], f[0], f[2]);
  CqMarkovChain ch(s, {"A"}, "X", {"B"});
  RecoveryMap phi = markov_recovery(ch);
  auto ux = maximally_mixed(reg("X", f[0], true));
  Mat rhs = static_cast<double>(f[0]) * kron(partial_trace(s, {"A"}).matrix(), phi.apply(ux).matrix());
  return min_eigenvalue(rhs - s.matrix());
}

double dmax_characterization(Rng& rng, std::size_t d) {
  Mat r = rand_mat(rng, d);
  Mat s = full_rank(rng, d);
  const double l = div(r, s, kInf);
  // Feasible at lambda and infeasible slightly below it.
  const double at = min_eigenvalue(std::exp2(l) * s - r);
  const double below = min_eigenvalue(std::exp2(l - 1e-6) * s - r);
  return std::min(at, -below);
}

const std::vector<double> kAlphaGrid = {0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 10.0, kInf};
const std::vector<double> kCondAlpha = {0.5, 1.0, 4.0 / 3.0, 2.0, 3.0, kInf};

double monotonicity(Rng& rng, std::size_t d) {
  auto s = spectrum(rand_mat(rng, d));
  double slack = kInf;
  for (std::size_t k = 0; k + 1 < kAlphaGrid.size(); ++k)
    slack = std::min(slack, renyi_of(s, kAlphaGrid[k]) - renyi_of(s, kAlphaGrid[k + 1]));
  return slack;
}

double monotonicity_conditional(Rng& rng, std::size_t d) {
  auto f = split_dim(d, 2);
  auto s = state_on(rng, {{"A", f[0]}, {"B", f[1]}});
  double slack = kInf, prev = kInf;
  for (double a : kCondAlpha) {
    const double v = cond(s, {"A"}, {"B"}, a);
    slack = std::min(slack, prev - v);
    prev = v;
  }
  return slack;
}

double data_processing(Rng& rng, std::size_t d) {
  Mat r = rand_mat(rng, d);
  Mat s = full_rank(rng, d);
  auto ch = random_channel(rng, d, d, 2);
  Mat fr = ch.apply(r), fs = ch.apply(s);
  double slack = kInf;
  for (double a : {0.5, 1.0, 2.0, kInf}) slack = std::min(slack, div(r, s, a) - div(fr, fs, a));
  auto bur = [](const Mat& x, const Mat& y) { return std::sqrt(std::max(0.0, 1.0 - fidelity(x, y))); };
  slack = std::min(slack, bur(r, s) - bur(fr, fs));
  slack = std::min(slack, trace_norm(r - s) - trace_norm(fr - fs));
  return slack;
}

double additivity(Rng& rng, std::size_t d) {
  Mat r1 = rand_mat(rng, d);
  Mat r2 = full_rank(rng, d);
  Mat s = rand_mat(rng, 2);
  double slack = kInf;
  for (double a : {0.5, 0.75, 2.0, 3.0})
    slack = std::min(slack, -std::abs(div(kron(r1, s), kron(r2, s), a) - div(r1, r2, a)));
  return slack;
}

double cq_bounds(Rng& rng, std::size_t d) {
  auto f = split_dim(d, 3);  // A, C, B
  auto s = cq_on(rng, "C", f[1], {{"A", f[0]}, {"B", f[2]}});
  const double c_bits = std::log2(static_cast<double>(f[1]));
  const double a_bits = std::log2(static_cast<double>(f[0]));
  double slack = kInf;
  for (double a : {0.5, 1.0, 2.0, kInf}) {
    const double ab = cond(s, {"A"}, {"B"}, a);
    const double abc = cond(s, {"A"}, {"B", "C"}, a);
    slack = std::min({slack, abc - (ab - c_bits), ab - abc, a_bits - ab});
  }
  return slack;
}

double nonnegativity(Rng& rng, std::size_t d) {
  auto f = split_dim(d, 2);
  auto s = cq_on(rng, "X", f[0], {{"Q", f[1]}}, false);
  double slack = kInf;
  for (double a : {0.5, 1.0, 2.0, 3.0, kInf}) slack = std::min(slack, cond(s, {"X"}, {"Q"}, a));
  return slack;
}

double chain_rule(Rng& rng, std::size_t d) {
  auto f = split_dim(d, 2);
  auto s = state_on(rng, {{"A", f[0]}, {"B", f[1]}}, false);
  Mat ra = partial_trace(s, {"A"}).matrix();
  // S(B|A) = -D(rho_AB || rho_A (x) 1_B), computed through the relative entropy.
  const double sba = -div(s.matrix(), kron(ra, Mat::Identity(f[1], f[1])), 1.0);
  return -std::abs(von_neumann(s) - von_neumann(ra) - sba);
}

double chain_rule_renyi(Rng& rng, std::size_t d) {
  auto f = split_dim(d, 3);  // A, B, C
  auto s = state_on(rng, {{"A", f[0]}, {"B", f[1]}, {"C", f[2]}});
  const double lhs = cond(s, {"A", "B"}, {"C"}, 4.0 / 3.0);
  const double rhs = cond(s, {"A"}, {"B", "C"}, 2.0) + cond(s, {"B"}, {"C"}, 2.0);
  return rhs - lhs;
}

// The same orders with the inequality reversed, the direction that holds when
// (alpha-1)(beta-1)(gamma-1) > 0.
double chain_rule_renyi_reverse(Rng& rng, std::size_t d) {
  auto f = split_dim(d, 3);  // A, B, C
  auto s = state_on(rng, {{"A", f[0]}, {"B", f[1]}, {"C", f[2]}});
  const double lhs = cond(s, {"A", "B"}, {"C"}, 4.0 / 3.0);
  const double rhs = cond(s, {"A"}, {"B", "C"}, 2.0) + cond(s, {"B"}, {"C"}, 2.0);
  return lhs - rhs;
}

double markov_vn(Rng& rng, std::size_t d) {
  auto f = split_dim(d, 3);  // X, A, B
  auto s = markov_chain(rng, f[1], f[0], f[2]);
  const double sx = von_neumann(partial_trace(s, {"X"}));
  const double sax = von_neumann(partial_trace(s, {"A", "X"})) - sx;
  const double sbx = von_neumann(partial_trace(s, {"X", "B"})) - sx;
  return -std::abs(von_neumann(s) - (sx + sax + sbx));
}

double markov_renyi(Rng& rng, std::size_t d) {
  auto f = split_dim(d, 4);  // X, A1, B, A2
  auto p = random_distribution(rng, f[0]);
  const std::size_t da = f[1] * f[3];
  Mat m = Mat::Zero(da * f[0] * f[2], da * f[0] * f[2]);
  for (std::size_t x = 0; x < f[0]; ++x) {
    Mat px = Mat::Zero(f[0], f[0]);
    px(x, x) = p[x];
    m += kron(kron(full_rank(rng, da), px), full_rank(rng, f[2]));
  }
  auto s = DensityState::trusted(
      m, reg("A1", f[1]).concat(reg("A2", f[3])).concat(reg("X", f[0], true)).concat(reg("B", f[2])));
  double slack = kInf;
  for (double a : {0.5, 2.0, 3.0})
    slack = std::min(slack, -std::abs(cond(s, {"A1"}, {"A2", "X"}, a) - cond(s, {"A1"}, {"A2", "X", "B"}, a)));
  return slack;
}

double fannes(Rng& rng, std::size_t d) {
  Mat r = rand_mat(rng, d);
  Mat s = rand_mat(rng, d);
  // Occasionally compare nearby states, where the bound is tightest.
  if (rng() % 2 == 0) s = hermitize(0.9 * r + 0.1 * s);
  const double lhs = std::abs(von_neumann(r) - von_neumann(s));
  return std::log2(static_cast<double>(d)) * trace_norm(r - s) + 1.0 / kE - lhs;
}

double two_flat(Rng& rng, std::size_t d) {
  const std::size_t len = 1 + uniform_index(rng, d);
  auto p = random_two_flat(rng, len);
  p.resize(d, 0.0);
  Mat u = haar_unitary(rng, d);
  Mat m = Mat::Zero(d, d);
  for (std::size_t i = 0; i < d; ++i) m(i, i) = p[i];
  auto sp = spectrum(hermitize(u * m * u.adjoint()));
  const double pmax = *std::max_element(p.begin(), p.end());
  double pmin = 1.0;
  for (double x : p)
    if (x > 0.0) pmin = std::min(pmin, x);
  const double spread = renyi_of(sp, 0.0) - renyi_of(sp, kInf);
  double widest = 0.0;
  for (double a : kAlphaGrid)
    for (double b : kAlphaGrid) widest = std::max(widest, std::abs(renyi_of(sp, a) - renyi_of(sp, b)));
  return std::min({1.0 - spread, std::log2(pmax / pmin) - spread, spread - widest});
}

double renyi_classical_expression(Rng& rng, std::size_t d) {
  auto f = split_dim(d, 3);  // X, A, B
  auto s = cq_on(rng, "X", f[0], {{"A", f[1]}, {"B", f[2]}});
  double slack = kInf;
  for (double a : {0.5, 0.75, 2.0, 3.0})
    slack = std::min(slack, -std::abs(conditional_renyi_classical(s, "X", {"A"}, {"B"}, a) -
                                      cond(s, {"A"}, {"B", "X"}, a)));
  return slack;
}

double entropy_inequalities(Rng& rng, std::size_t d) {
  auto f = split_dim(d, 2);
  auto s = cq_on(rng, "X", f[0], {{"Q", f[1]}}, false);
  const double sxq = von_neumann(s);
  const double sq = von_neumann(partial_trace(s, {"Q"}));
  const double sx = von_neumann(partial_trace(s, {"X"}));
  const double x_bits = std::log2(static_cast<double>(f[0]));
  return std::min({sq - (sxq - sx), sxq - sq, sq + x_bits - sxq});
}

}  // namespace

const std::vector<FactEntry>& fact_registry() {
  static const std::vector<FactEntry> reg = {
      {"fuchs", "Bures and trace distance sandwich", fuchs},
      {"triangle", "trace distance triangle inequality", triangle},
      {"identity_upper", "operator upper bounds by marginal times identity", identity_upper},
      {"dmax_markov", "Markov chain operator bound with the recovery map", dmax_markov},
      {"dmax_characterization", "max divergence is the least feasible exponent", dmax_characterization},
      {"monotonicity", "Renyi entropy decreases in the order", monotonicity},
      {"monotonicity_conditional", "conditional Renyi entropy decreases in the order", monotonicity_conditional},
      {"data_processing", "divergences, Bures and trace distance contract under channels", data_processing},
      {"additivity", "divergence unchanged by a common tensor factor", additivity},
      {"cq_bounds", "conditioning on classical C costs at most |C| and never helps A", cq_bounds},
      {"nonnegativity", "conditional entropy of a classical register is nonnegative", nonnegativity},
      {"chain_rule", "von Neumann chain rule", chain_rule},
      {"chain_rule_renyi", "sandwiched chain rule at orders (4/3, 2, 2)", chain_rule_renyi},
      {"chain_rule_renyi_reverse", "sandwiched chain rule at orders (4/3, 2, 2), reversed", chain_rule_renyi_reverse},
      {"markov_vn", "entropy of a Markov chain splits over the classical cut", markov_vn},
      {"markov_renyi", "conditioning on B is free in a Markov chain", markov_renyi},
      {"fannes", "entropy continuity bound", fannes},
      {"two_flat", "Renyi spread of 2-flat states is at most one bit", two_flat},
      {"renyi_classical_expression", "conditional entropy given a classical label", renyi_classical_expression},
      {"entropy_inequalities", "ordering of entropies of a cq-state", entropy_inequalities},
  };
  return reg;
}

std::vector<std::string> fact_ids() {
  std::vector<std::string> out;
  for (const auto& f : fact_registry()) out.push_back(f.id);
  return out;
}

static std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

FactReport verify_fact(const std::string& fact_id, int trials, const std::vector<std::size_t>& dims,
                       std::uint64_t seed, double threshold) {
  const FactEntry* entry = nullptr;
  for (const auto& f : fact_registry())
    if (f.id == fact_id) entry = &f;
  if (entry == nullptr) throw std::invalid_argument("unknown fact id " + fact_id);
  FactReport rep;
  rep.fact_id = fact_id;
  rep.trials = trials;
  rep.dims = dims;
  rep.min_slack = kInf;
  for (std::size_t d : dims) {
    double dmin = kInf;
    for (int t = 0; t < trials; ++t) {
      Rng rng(derive_seed(seed, fnv1a(fact_id), d, static_cast<std::uint64_t>(t)));
      double slack;
      try {
        slack = entry->trial(rng, d);
      } catch (const NonConvergenceError& e) {
        slack = -kInf;
      }
      if (!(slack >= threshold)) rep.failures.push_back({d, t, slack});
      if (slack == slack) dmin = std::min(dmin, slack);
    }
    rep.min_slack_per_dim.push_back(dmin);
    rep.min_slack = std::min(rep.min_slack, dmin);
  }
  return rep;
}

json MultiCopyReport::to_json() const {
  json rs = json::array();
  for (const auto& r : rows)
    rs.push_back({{"t", r.t},
                  {"s0_eps", r.s0},
                  {"sinf_eps", r.sinf},
                  {"t_times_S", r.tS},
                  {"scale", r.scale},
                  {"excess0", r.excess0},
                  {"excess_inf", r.excess_inf}});
  return {{"n_qubits", n_qubits}, {"eps", eps}, {"rows", rs}, {"measured_c", measured_c}, {"monotone", monotone}};
}

MultiCopyReport multicopy_smoothing(const std::vector<double>& spectrum, int n_qubits, int t_max, double eps) {
  MultiCopyReport rep;
  rep.n_qubits = n_qubits;
  rep.eps = eps;
  const double s1 = shannon(spectrum);
  const double tail = std::sqrt(2.0 * std::log2(1.0 / (2.0 * eps)));
  const double logn = std::max(1.0, std::log2(static_cast<double>(n_qubits)));
  for (int t = 1; t <= t_max; ++t) {
    MultiCopyRow row;
    row.t = t;
    auto w = weighted_tensor_power(spectrum, t);
    row.s0 = smooth_s0(w, eps);
    row.sinf = smooth_sinf(w, eps);
    row.tS = t * s1;
    row.scale = std::sqrt(static_cast<double>(t * n_qubits)) * tail + logn;
    row.excess0 = row.s0 - row.tS;
    row.excess_inf = row.tS - row.sinf;
    rep.measured_c = std::max(rep.measured_c, std::max(row.excess0, row.excess_inf) / row.scale);
    if (!rep.rows.empty()) {
      const auto& prev = rep.rows.back();
      if (row.excess0 < prev.excess0 - 1e-12 || row.excess_inf < prev.excess_inf - 1e-12) rep.monotone = false;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace qlab
