#include "qlab/extractors.hpp"

#include "qlab/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qlab {

BitVec bits_of(std::uint64_t v, std::size_t n) {
  BitVec b(n);
  for (std::size_t j = 0; j < n; ++j) b[j] = static_cast<std::uint8_t>((v >> (n - 1 - j)) & 1U);
  return b;
}

std::uint64_t value_of(const BitVec& b) {
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 1) | (x & 1U);
  return v;
}

ToeplitzHash::ToeplitzHash(std::size_t n, std::size_t l, BitVec s) : n_in(n), l_out(l), seed(std::move(s)) {
  if (n == 0 || n > 62) throw std::invalid_argument("hash input length must be in [1, 62]");
  if (seed.size() != seed_len(n, l)) throw std::invalid_argument("Toeplitz seed must have n + l - 1 bits");
}

std::vector<std::uint64_t> ToeplitzHash::row_masks() const {
  std::vector<std::uint64_t> rows(l_out, 0);
  for (std::size_t i = 0; i < l_out; ++i)
    for (std::size_t j = 0; j < n_in; ++j)
      if (seed[i + n_in - 1 - j]) rows[i] |= std::uint64_t{1} << j;
  return rows;
}

namespace {

// Input bit j sits at mask position j; the register index has bit 0 first.
std::uint64_t mask_of_index(std::uint64_t xv, std::size_t n) {
  std::uint64_t m = 0;
  for (std::size_t j = 0; j < n; ++j)
    if ((xv >> (n - 1 - j)) & 1U) m |= std::uint64_t{1} << j;
  return m;
}

}  // namespace

std::uint64_t hash_index(const std::vector<std::uint64_t>& rows, std::uint64_t xv, std::size_t n_in) {
  const std::uint64_t xm = mask_of_index(xv, n_in);
  std::uint64_t z = 0;
  for (auto r : rows) z = (z << 1) | static_cast<std::uint64_t>(__builtin_parityll(r & xm));
  return z;
}

BitVec hash_eval(const ToeplitzHash& h, const BitVec& x) {
  if (x.size() != h.n_in) throw std::invalid_argument("hash input length mismatch");
  return bits_of(hash_index(h.row_masks(), value_of(x), h.n_in), h.l_out);
}

double toeplitz_collision_probability(std::size_t n_in, std::size_t l_out) {
  if (l_out == 0) return 1.0;
  const std::size_t sl = ToeplitzHash::seed_len(n_in, l_out);
  const std::uint64_t nx = std::uint64_t{1} << n_in, ns = std::uint64_t{1} << sl;
  std::vector<std::uint64_t> count(nx * nx, 0);
  std::vector<std::uint64_t> z(nx);
  for (std::uint64_t sv = 0; sv < ns; ++sv) {
    auto rows = ToeplitzHash(n_in, l_out, bits_of(sv, sl)).row_masks();
    for (std::uint64_t x = 0; x < nx; ++x) z[x] = hash_index(rows, x, n_in);
    for (std::uint64_t a = 0; a < nx; ++a)
      for (std::uint64_t b = a + 1; b < nx; ++b)
        if (z[a] == z[b]) ++count[a * nx + b];
  }
  std::uint64_t worst = 0;
  for (auto c : count) worst = std::max(worst, c);
  return static_cast<double>(worst) / static_cast<double>(ns);
}

namespace {

struct CqBlocks {
  std::size_t n = 0;    // qubits of X
  std::size_t dq = 1;
  std::vector<Mat> m;   // p_x tau_x
  Mat tq;               // tau_Q
};

CqBlocks cq_blocks(const DensityState& s) {
  const auto& subs = s.layout().subsystems();
  if (!subs.front().classical) throw StateError("first register must be classical");
  const std::size_t dx = subs.front().dim;
  if (dx & (dx - 1)) throw StateError("classical register must hold whole bits");
  CqBlocks c;
  while ((std::size_t{1} << c.n) < dx) ++c.n;
  c.dq = s.dim() / dx;
  c.tq = Mat::Zero(c.dq, c.dq);
  for (std::size_t x = 0; x < dx; ++x) {
    c.m.push_back(s.matrix().block(x * c.dq, x * c.dq, c.dq, c.dq));
    c.tq += c.m.back();
  }
  return c;
}

double s2_x_given_rest(const DensityState& s) {
  auto names = s.layout().names();
  return conditional_renyi(s, {names.front()}, {names.begin() + 1, names.end()}, 2.0).value;
}

double distance_for_rows(const CqBlocks& c, const std::vector<std::uint64_t>& rows, std::size_t l_prime) {
  const std::size_t nz = std::size_t{1} << l_prime;
  std::vector<Mat> acc(nz, Mat::Zero(c.dq, c.dq));
  for (std::size_t x = 0; x < c.m.size(); ++x) acc[hash_index(rows, x, c.n)] += c.m[x];
  double d = 0.0;
  const double u = 1.0 / static_cast<double>(nz);
  for (auto& a : acc) d += trace_norm(hermitize(a - u * c.tq));
  return d;
}

std::vector<std::uint64_t> prefix_rows(const ToeplitzHash& h, std::size_t l_prime) {
  auto rows = h.row_masks();
  rows.resize(l_prime);
  return rows;
}

std::size_t hash_out_len(double l, std::size_t n) {
  return static_cast<std::size_t>(std::clamp(std::floor(l + 1e-9), 0.0, static_cast<double>(n)));
}

}  // namespace

double extractor_distance_for_seed(const DensityState& s, const ToeplitzHash& h) {
  CqBlocks c = cq_blocks(s);
  if (h.n_in != c.n) throw std::invalid_argument("hash input length mismatch");
  return distance_for_rows(c, h.row_masks(), h.l_out);
}

DensityState apply_classical_extractor(const DensityState& s, std::size_t l_prime) {
  CqBlocks c = cq_blocks(s);
  const std::size_t l = hash_out_len(s2_x_given_rest(s), c.n);
  if (l_prime > l) throw std::invalid_argument("l_prime exceeds S2(X|Q)");
  const std::size_t sl = ToeplitzHash::seed_len(c.n, l);
  const std::size_t dx = std::size_t{1} << c.n, dh = std::size_t{1} << sl, dz = std::size_t{1} << l_prime;
  const std::size_t d = dx * dh * dz * c.dq;
  check_dim(d, "apply_classical_extractor");
  Mat m = Mat::Zero(d, d);
  const double w = 1.0 / static_cast<double>(dh);
  for (std::size_t hv = 0; hv < dh; ++hv) {
    auto rows = prefix_rows(ToeplitzHash(c.n, l, bits_of(hv, sl)), l_prime);
    for (std::size_t x = 0; x < dx; ++x) {
      const std::size_t z = hash_index(rows, x, c.n);
      const std::size_t base = ((x * dh + hv) * dz + z) * c.dq;
      m.block(base, base, c.dq, c.dq) = w * c.m[x];
    }
  }
  auto names = s.layout().names();
  RegisterLayout rest = s.layout().select({names.begin() + 1, names.end()});
  RegisterLayout l2 = reg(names.front(), dx, true).concat(reg("H", dh, true)).concat(reg("Z", dz, true)).concat(rest);
  return DensityState::trusted(m, l2);
}

json LeftoverHashReport::to_json() const {
  return {{"n", n},
          {"l", l},
          {"l_out", l_out},
          {"l_prime", l_prime},
          {"measured_distance", measured_distance},
          {"bound", bound},
          {"exhaustive", exhaustive},
          {"seeds_used", seeds_used},
          {"pass", pass}};
}

LeftoverHashReport leftover_hash_audit(const DensityState& s, std::size_t l_prime, std::size_t sampled_seeds,
                                       std::uint64_t rng_seed, std::size_t exhaustive_max_n) {
  CqBlocks c = cq_blocks(s);
  LeftoverHashReport r;
  r.n = c.n;
  r.l = s2_x_given_rest(s);
  r.l_out = hash_out_len(r.l, c.n);
  if (l_prime > r.l_out) throw std::invalid_argument("l_prime exceeds S2(X|Q)");
  r.l_prime = l_prime;
  r.bound = std::exp2(-(r.l - static_cast<double>(l_prime)) / 2.0);
  // Only the first n + l' - 1 seed bits reach the prefix; the rest are independent and uniform.
  const std::size_t sl = ToeplitzHash::seed_len(c.n, l_prime);
  double total = 0.0;
  if (c.n <= exhaustive_max_n) {
    r.exhaustive = true;
    r.seeds_used = std::size_t{1} << sl;
    for (std::uint64_t hv = 0; hv < r.seeds_used; ++hv)
      total += distance_for_rows(c, ToeplitzHash(c.n, l_prime, bits_of(hv, sl)).row_masks(), l_prime);
  } else {
    r.exhaustive = false;
    r.seeds_used = sampled_seeds;
    Rng rng(rng_seed);
    for (std::size_t t = 0; t < sampled_seeds; ++t) {
      const std::uint64_t hv = sl == 0 ? 0 : (rng() >> (64 - sl));
      total += distance_for_rows(c, ToeplitzHash(c.n, l_prime, bits_of(hv, sl)).row_masks(), l_prime);
    }
  }
  r.measured_distance = total / static_cast<double>(r.seeds_used);
  r.pass = r.measured_distance <= r.bound + tol().num;
  return r;
}

// ---- quantum extractor ------------------------------------------------------

void QuantumExtractorSpec::check() const {
  if (n_qubits == 0) throw std::invalid_argument("input must have at least one qubit");
  if (output_len > n_qubits + 1 + seed_len) throw std::invalid_argument("output longer than the total register");
  check_dim(std::size_t{1} << (n_qubits + 1 + seed_len), "quantum extractor");
}

std::size_t seed_law(std::size_t output_len, double sinf_eps, double kappa) {
  const double s = std::ceil(static_cast<double>(output_len) - 1.0 - sinf_eps + kappa - 1e-9);
  return s <= 0.0 ? 0 : static_cast<std::size_t>(s);
}

namespace {

// 2x2 gate on qubit q (0 = most significant) of the rows of w.
void apply_1q(Mat& w, std::size_t nq, std::size_t q, const Eigen::Matrix2cd& g) {
  const std::size_t stride = std::size_t{1} << (nq - 1 - q);
  const std::size_t d = std::size_t{1} << nq;
  for (std::size_t i = 0; i < d; ++i) {
    if (i & stride) continue;
    const std::size_t j = i | stride;
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      const cplx a = w(i, c), b = w(j, c);
      w(i, c) = g(0, 0) * a + g(0, 1) * b;
      w(j, c) = g(1, 0) * a + g(1, 1) * b;
    }
  }
}

void apply_cnot(Mat& w, std::size_t nq, std::size_t ctrl, std::size_t tgt) {
  const std::size_t cs = std::size_t{1} << (nq - 1 - ctrl), ts = std::size_t{1} << (nq - 1 - tgt);
  const std::size_t d = std::size_t{1} << nq;
  for (std::size_t i = 0; i < d; ++i)
    if ((i & cs) && !(i & ts)) w.row(i).swap(w.row(i | ts));
}

// The 24 single-qubit Cliffords modulo phase, generated from H and S.
const std::vector<Eigen::Matrix2cd>& single_qubit_cliffords() {
  static const std::vector<Eigen::Matrix2cd> group = [] {
    Eigen::Matrix2cd h, s;
    const double r = 1.0 / std::sqrt(2.0);
    h << r, r, r, -r;
    s << 1, 0, 0, cplx(0, 1);
    auto same = [](const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
      // Equal up to a global phase.
      cplx ph = 0;
      for (int i = 0; i < 4; ++i)
        if (std::abs(b(i)) > 1e-9) {
          ph = a(i) / b(i);
          break;
        }
      return std::abs(std::abs(ph) - 1.0) < 1e-9 && (a - ph * b).norm() < 1e-9;
    };
    std::vector<Eigen::Matrix2cd> g = {Eigen::Matrix2cd::Identity()};
    for (std::size_t i = 0; i < g.size(); ++i)
      for (const auto& gen : {h, s}) {
        Eigen::Matrix2cd c = gen * g[i];
        bool seen = false;
        for (const auto& e : g) seen = seen || same(c, e);
        if (!seen) g.push_back(c);
      }
    return g;
  }();
  return group;
}

// Random Clifford circuit: 4n layers of random single-qubit Cliffords followed by CNOTs
// on a random pairing with random orientation.
void random_clifford_circuit(Mat& w, std::size_t nq, Rng& rng) {
  const auto& c1 = single_qubit_cliffords();
  std::uniform_int_distribution<std::size_t> pick(0, c1.size() - 1);
  std::vector<std::size_t> perm(nq);
  for (std::size_t layer = 0; layer < 4 * nq; ++layer) {
    for (std::size_t q = 0; q < nq; ++q) apply_1q(w, nq, q, c1[pick(rng)]);
    for (std::size_t q = 0; q < nq; ++q) perm[q] = q;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t k = 0; k + 1 < nq; k += 2) {
      if (rng() & 1U)
        apply_cnot(w, nq, perm[k], perm[k + 1]);
      else
        apply_cnot(w, nq, perm[k + 1], perm[k]);
    }
  }
}

}  // namespace

DensityState apply_quantum_extractor(const DensityState& psi, const QuantumExtractorSpec& spec, Rng& rng) {
  spec.check();
  if (psi.dim() != (std::size_t{1} << spec.n_qubits)) throw StateError("input dimension does not match n_qubits");
  const std::size_t nq = spec.n_qubits + 1 + spec.seed_len;
  const std::size_t d = std::size_t{1} << nq;
  const std::size_t ds = std::size_t{1} << spec.seed_len;
  const std::size_t dout = std::size_t{1} << spec.output_len;
  const std::size_t dtr = std::size_t{1} << spec.traced_qubits();
  // psi (x) |0><0| (x) U_s = W W^dag with columns sqrt(lambda_i / 2^s) |v_i, 0, u>.
  RVec lam;
  Mat vec;
  herm_eig(psi.matrix(), lam, vec);
  std::vector<std::pair<double, Eigen::Index>> keep;
  const double cut = 1e-14 * std::max(1.0, lam.maxCoeff());
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) > cut) keep.push_back({lam(i), i});
  const std::size_t r = keep.size() * ds;
  Mat w;
  if (spec.sampler == UnitarySampler::haar) {
    w = haar_isometry(rng, d, r);
    for (std::size_t k = 0; k < keep.size(); ++k)
      for (std::size_t u = 0; u < ds; ++u) w.col(k * ds + u) *= std::sqrt(keep[k].first / static_cast<double>(ds));
  } else {
    w = Mat::Zero(d, r);
    for (std::size_t k = 0; k < keep.size(); ++k) {
      const Vec v = vec.col(keep[k].second);
      const double a = std::sqrt(keep[k].first / static_cast<double>(ds));
      for (std::size_t u = 0; u < ds; ++u)
        for (Eigen::Index i = 0; i < v.size(); ++i) w(static_cast<std::size_t>(i) * 2 * ds + u, k * ds + u) = a * v(i);
    }
    random_clifford_circuit(w, nq, rng);
  }
  // Tr_S over the trailing qubits.
  Mat out = Mat::Zero(dout, dout);
  for (std::size_t t = 0; t < dtr; ++t) {
    Mat b(dout, r);
    for (std::size_t o = 0; o < dout; ++o) b.row(o) = w.row(o * dtr + t);
    out += b * b.adjoint();
  }
  return DensityState::trusted(hermitize(out), qubits("E", static_cast<int>(spec.output_len)));
}

json RankAuditReport::to_json() const {
  return {{"delta", delta},         {"input_s0", input_s0}, {"seed", seed},  {"max_output_s0", max_output_s0},
          {"min_slack", min_slack}, {"samples", samples},   {"pass", pass}};
}

RankAuditReport quantum_extractor_rank_audit(const DensityState& psi, const QuantumExtractorSpec& spec, double delta,
                                             int samples, std::uint64_t rng_seed) {
  RankAuditReport r;
  r.delta = delta;
  r.input_s0 = smooth_s0(psi, delta);
  r.seed = static_cast<double>(spec.seed_len);
  r.samples = samples;
  r.min_slack = kInf;
  for (int t = 0; t < samples; ++t) {
    Rng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(t)));
    const double o = smooth_s0(apply_quantum_extractor(psi, spec, rng), delta);
    r.max_output_s0 = std::max(r.max_output_s0, o);
    r.min_slack = std::min(r.min_slack, r.input_s0 + r.seed - o);
  }
  r.pass = r.min_slack >= -tol().num;
  return r;
}

json SeedSweepReport::to_json() const {
  json rs = json::array();
  for (const auto& r : rows)
    rs.push_back({{"kappa", r.kappa},
                  {"seed", r.seed},
                  {"mean_distance", r.mean_distance},
                  {"max_distance", r.max_distance},
                  {"rank_slack", r.rank_slack}});
  return {{"rows", rs}, {"monotone", monotone}};
}

SeedSweepReport quantum_extractor_seed_sweep(const DensityState& psi, std::size_t output_len, double eps,
                                             const std::vector<double>& kappas, int samples, double delta,
                                             std::uint64_t rng_seed, UnitarySampler sampler) {
  SeedSweepReport rep;
  std::size_t nq = 0;
  while ((std::size_t{1} << nq) < psi.dim()) ++nq;
  const double sinf = smooth_sinf(psi, eps);
  const double s0 = smooth_s0(psi, delta);
  const std::size_t dout = std::size_t{1} << output_len;
  Mat u = Mat::Identity(dout, dout) / static_cast<double>(dout);
  for (std::size_t ki = 0; ki < kappas.size(); ++ki) {
    SeedSweepRow row;
    row.kappa = kappas[ki];
    row.seed = seed_law(output_len, sinf, kappas[ki]);
    // The output cannot exceed the register, so a short seed is padded up to it.
    row.seed = std::max(row.seed, output_len > nq + 1 ? output_len - nq - 1 : std::size_t{0});
    QuantumExtractorSpec spec{nq, row.seed, output_len, sampler};
    row.rank_slack = kInf;
    double total = 0.0;
    for (int t = 0; t < samples; ++t) {
      Rng rng(derive_seed(rng_seed, ki, static_cast<std::uint64_t>(t)));
      auto out = apply_quantum_extractor(psi, spec, rng);
      const double dist = trace_norm(out.matrix() - u);
      total += dist;
      row.max_distance = std::max(row.max_distance, dist);
      row.rank_slack = std::min(row.rank_slack, s0 + static_cast<double>(row.seed) - smooth_s0(out, delta));
    }
    row.mean_distance = total / samples;
    if (!rep.rows.empty() && row.mean_distance > rep.rows.back().mean_distance + 1e-12) rep.monotone = false;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace qlab
