#include "qlab/owsg.hpp"

#include "qlab/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qlab {

double OwsgInstance::accept_probability(std::uint64_t guess, std::uint64_t key) const {
  if (guess >= keys() || key >= keys()) return 0.0;
  return std::clamp((ver[guess] * phi[key]).trace().real(), 0.0, 1.0);
}

double OwsgInstance::correctness() const {
  double c = 0.0;
  for (std::uint64_t x = 0; x < keys(); ++x) c += key_dist[x] * accept_probability(x, x);
  return c;
}

void OwsgInstance::check() const {
  if (n == 0 || n > 20) throw std::invalid_argument("key length must be in [1, 20]");
  if (m == 0) throw std::invalid_argument("copies must be at least 1");
  if (key_dist.size() != (std::size_t{1} << n) || phi.size() != key_dist.size() || ver.size() != phi.size())
    throw std::invalid_argument("instance needs one state per key");
  double t = 0.0;
  for (double p : key_dist) {
    if (p < 0.0) throw std::invalid_argument("negative key probability");
    t += p;
  }
  if (std::abs(t - 1.0) > tol().tr) throw std::invalid_argument("key distribution must sum to 1");
  for (const auto& p : phi) {
    if (p.rows() != phi.front().rows()) throw std::invalid_argument("states must share a dimension");
    validate(p, reg("Q", static_cast<std::size_t>(p.rows())), true);
  }
}

OwsgInstance make_instance(std::string type, std::size_t n, std::size_t m, std::vector<double> key_dist,
                           std::vector<Mat> phi) {
  OwsgInstance inst{std::move(type), n, m, std::move(key_dist), std::move(phi), {}};
  for (const auto& p : inst.phi) inst.ver.push_back(projector_onto_support(p, 1e-12));
  inst.check();
  return inst;
}

namespace {

std::vector<double> uniform_keys(std::size_t n) {
  return std::vector<double>(std::size_t{1} << n, std::exp2(-static_cast<double>(n)));
}

}  // namespace

OwsgInstance orthogonal_pure_instance(std::size_t n, std::size_t m) {
  const std::size_t d = std::size_t{1} << n;
  std::vector<Mat> phi;
  for (std::size_t x = 0; x < d; ++x) {
    Mat p = Mat::Zero(d, d);
    p(x, x) = 1.0;
    phi.push_back(p);
  }
  return make_instance("orthogonal_pure", n, m, uniform_keys(n), std::move(phi));
}

OwsgInstance random_mixed_instance(std::size_t n, std::size_t m, std::size_t q_dim, std::size_t rank,
                                   std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Mat> phi;
  for (std::size_t x = 0; x < (std::size_t{1} << n); ++x) phi.push_back(random_density_matrix(rng, q_dim, rank));
  return make_instance("random_mixed", n, m, uniform_keys(n), std::move(phi));
}

OwsgInstance classical_function_instance(std::size_t n, std::size_t m, std::size_t out_bits, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t d = std::size_t{1} << out_bits;
  std::uniform_int_distribution<std::size_t> f(0, d - 1);
  std::vector<Mat> phi;
  for (std::size_t x = 0; x < (std::size_t{1} << n); ++x) {
    Mat p = Mat::Zero(d, d);
    const std::size_t y = f(rng);
    p(y, y) = 1.0;
    phi.push_back(p);
  }
  return make_instance("classical_function", n, m, uniform_keys(n), std::move(phi));
}

OwsgInstance constant_instance(std::size_t n, std::size_t m, const Mat& phi) {
  return make_instance("constant", n, m, uniform_keys(n), std::vector<Mat>(std::size_t{1} << n, phi));
}

OwsgInstance instance_from_json(const json& j) {
  for (const char* k : {"type", "n", "m"})
    if (!j.contains(k)) throw std::invalid_argument(std::string("instance missing field ") + k);
  const std::string type = j.at("type");
  const std::size_t n = j.at("n"), m = j.at("m");
  const std::uint64_t seed = j.value("seed", std::uint64_t{1});
  const json params = j.value("params", json::object());
  OwsgInstance inst;
  if (type == "orthogonal_pure") {
    inst = orthogonal_pure_instance(n, m);
  } else if (type == "random_mixed") {
    inst = random_mixed_instance(n, m, params.value("q_dim", std::size_t{2}), params.value("rank", std::size_t{0}),
                                 seed);
  } else if (type == "classical_function") {
    inst = classical_function_instance(n, m, params.value("out_bits", n > 1 ? n - 1 : 1), seed);
  } else {
    throw std::invalid_argument("unknown instance type: " + type);
  }
  if (params.contains("key_dist")) {
    inst.key_dist = params.at("key_dist").get<std::vector<double>>();
    inst.check();
  }
  return inst;
}

DensityState build_tau(const OwsgInstance& inst, std::size_t i) {
  const std::size_t dx = inst.keys();
  std::size_t dq = 1;
  for (std::size_t k = 0; k < i; ++k) dq *= inst.q_dim();
  check_dim(dx * dq, "build_tau");
  RegisterLayout l = reg("X", dx, true);
  for (std::size_t k = 1; k <= i; ++k) l = l.concat(reg("Q" + std::to_string(k), inst.q_dim()));
  Mat m = Mat::Zero(dx * dq, dx * dq);
  for (std::size_t x = 0; x < dx; ++x) {
    if (inst.key_dist[x] == 0.0) continue;
    Mat b = Mat::Identity(1, 1);
    for (std::size_t k = 0; k < i; ++k) b = kron(b, inst.phi[x]);
    m.block(x * dq, x * dq, dq, dq) = inst.key_dist[x] * b;
  }
  return DensityState::trusted(m, l);
}

namespace {

std::vector<std::string> copy_names(std::size_t i) {
  std::vector<std::string> q;
  for (std::size_t k = 1; k <= i; ++k) q.push_back("Q" + std::to_string(k));
  return q;
}

double s2_given_copies(const OwsgInstance& inst, std::size_t i) {
  if (i == 0) return renyi_of(inst.key_dist, 2.0);
  return conditional_renyi(build_tau(inst, i), {"X"}, copy_names(i), 2.0).value;
}

}  // namespace

double i_star_threshold(std::size_t n, double c_prime) { return c_prime * std::log2(static_cast<double>(n)); }

IStarReport find_i_star(const OwsgInstance& inst, double threshold) {
  IStarReport r;
  r.threshold = threshold;
  for (std::size_t i = 0; i <= inst.m; ++i) r.s2.push_back(s2_given_copies(inst, i));
  double sum = 0.0;
  r.min_gap = kInf;
  std::size_t best = 0;
  for (std::size_t i = 0; i < inst.m; ++i) {
    r.gaps.push_back(r.s2[i] - r.s2[i + 1]);
    sum += r.gaps.back();
    r.min_gap = std::min(r.min_gap, r.gaps.back());
    if (r.gaps.back() < r.gaps[best]) best = i;
  }
  r.i_star = best;
  for (std::size_t i = 0; i < inst.m; ++i)
    if (r.gaps[i] <= threshold + tol().num) {
      r.i_star = i;
      r.found = true;
      break;
    }
  r.gap = r.gaps[r.i_star];
  // Endpoints recomputed directly rather than taken from the profile.
  const double direct = renyi_of(inst.key_dist, 2.0) -
                        conditional_renyi(build_tau(inst, inst.m), {"X"}, copy_names(inst.m), 2.0).value;
  r.telescoping_residual = std::abs(sum - direct);
  r.sum_within_n = sum <= static_cast<double>(inst.n) + tol().num;
  return r;
}

json IStarReport::to_json() const {
  return {{"s2", s2},
          {"gaps", gaps},
          {"threshold", threshold},
          {"i_star", i_star},
          {"gap", gap},
          {"found", found},
          {"telescoping_residual", telescoping_residual},
          {"sum_within_n", sum_within_n},
          {"min_gap", min_gap}};
}

FlattenedGapReport flattened_gap_check(const OwsgInstance& inst, std::size_t i, const FlatteningParams& params) {
  FlattenedGapReport r;
  r.i = i;
  auto f = flatten(build_tau(inst, i), params);
  r.s2_qjb = cond_x_given_rest(f, 2.0);
  r.s2_q = s2_given_copies(inst, i);
  r.s2_next = s2_given_copies(inst, i + 1);
  // B depends on J alone, so S2(X|Q^{i+1} J) = S2(X|Q^{i+1} JB); the per-label
  // expression over J gives both.
  r.s2_next_jb = cond_x_given_rest_extended(f, inst.phi, 2.0);
  r.s2_next_j = r.s2_next_jb;
  r.j_bits = static_cast<double>(f.j_qubits);
  r.difference = r.s2_qjb - r.s2_next_jb;
  r.bound = (r.s2_q - r.s2_next) + r.j_bits;
  const double t = tol().opt;
  r.line_slacks = {r.s2_q - r.s2_qjb, (r.s2_next_j + r.j_bits) - r.s2_next, r.bound - r.difference};
  r.pass = std::all_of(r.line_slacks.begin(), r.line_slacks.end(), [&](double s) { return s >= -t; });
  return r;
}

json FlattenedGapReport::to_json() const {
  return {{"i", i},
          {"S2_X_given_QJB", s2_qjb},
          {"S2_X_given_Q", s2_q},
          {"S2_X_given_Qnext", s2_next},
          {"S2_X_given_QnextJ", s2_next_j},
          {"S2_X_given_QnextJB", s2_next_jb},
          {"J_bits", j_bits},
          {"difference", difference},
          {"bound", bound},
          {"line_slacks", line_slacks},
          {"pass", pass}};
}

// ---- adversaries --------------------------------------------------------------

KeyAdversary random_guess_adversary(std::size_t n) {
  return [n](const Mat&, Rng& rng) { return rng() & ((std::uint64_t{1} << n) - 1); };
}

KeyAdversary fixed_guess_adversary(std::uint64_t guess) {
  return [guess](const Mat&, Rng&) { return guess; };
}

namespace {

Mat copies_of(const Mat& phi, std::size_t m) {
  Mat b = phi;
  for (std::size_t k = 1; k < m; ++k) b = kron(b, phi);
  return b;
}

std::vector<Mat> pgm_elements(const OwsgInstance& inst) {
  std::vector<Mat> w;
  Mat s;
  for (std::size_t x = 0; x < inst.keys(); ++x) {
    w.push_back(inst.key_dist[x] * copies_of(inst.phi[x], inst.m));
    s = x == 0 ? w.back() : Mat(s + w.back());
  }
  const Mat sh = herm_pow(hermitize(s), -0.5, 1e-12);
  for (auto& e : w) e = hermitize(sh * e * sh);
  return w;
}

std::size_t sample_index(const std::vector<double>& p, Rng& rng) {
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng), acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k)
    if ((acc += p[k]) > u) return k;
  return p.size() - 1;
}

}  // namespace

KeyAdversary pgm_adversary(const OwsgInstance& inst) {
  check_dim(static_cast<std::size_t>(std::pow(inst.q_dim(), inst.m)), "pgm_adversary");
  auto el = pgm_elements(inst);
  return [el](const Mat& copies, Rng& rng) {
    std::vector<double> p;
    for (const auto& e : el) p.push_back(std::max(0.0, (e * copies).trace().real()));
    return static_cast<std::uint64_t>(sample_index(p, rng));
  };
}

double pgm_exact_acceptance(const OwsgInstance& inst) {
  auto el = pgm_elements(inst);
  double acc = 0.0;
  for (std::size_t x = 0; x < inst.keys(); ++x) {
    if (inst.key_dist[x] == 0.0) continue;
    const Mat c = copies_of(inst.phi[x], inst.m);
    for (std::size_t g = 0; g < inst.keys(); ++g)
      acc += inst.key_dist[x] * std::max(0.0, (el[g] * c).trace().real()) * inst.accept_probability(g, x);
  }
  return acc;
}

std::pair<double, double> wilson_interval(int successes, int trials, double z) {
  if (trials <= 0) return {0.0, 1.0};
  const double nn = trials, ph = successes / nn, z2 = z * z;
  const double c = (ph + z2 / (2 * nn)) / (1 + z2 / nn);
  const double h = z / (1 + z2 / nn) * std::sqrt(ph * (1 - ph) / nn + z2 / (4 * nn * nn));
  return {std::max(0.0, c - h), std::min(1.0, c + h)};
}

OneWaynessReport measure_one_wayness(const OwsgInstance& inst, const KeyAdversary& adv, int trials,
                                     std::uint64_t seed) {
  OneWaynessReport r;
  r.trials = trials;
  std::vector<Mat> cache(inst.keys());
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    const std::size_t x = sample_index(inst.key_dist, rng);
    if (cache[x].size() == 0) cache[x] = copies_of(inst.phi[x], inst.m);
    const std::uint64_t g = adv(cache[x], rng);
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < inst.accept_probability(g, x)) ++r.accepts;
  }
  r.rate = trials > 0 ? static_cast<double>(r.accepts) / trials : 0.0;
  std::tie(r.wilson_lo, r.wilson_hi) = wilson_interval(r.accepts, trials);
  return r;
}

json OneWaynessReport::to_json() const {
  return {{"trials", trials}, {"accepts", accepts}, {"rate", rate}, {"wilson_lo", wilson_lo}, {"wilson_hi", wilson_hi}};
}

}  // namespace qlab
