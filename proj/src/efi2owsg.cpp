#include "qlab/efi2owsg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qlab {

double EfiPair::l1() const { return trace_norm(rho0.matrix() - rho1.matrix()); }
double EfiPair::half_l1() const { return 0.5 * l1(); }

EfiPair make_pair(DensityState rho0, DensityState rho1) {
  if (rho0.dim() != rho1.dim()) throw std::invalid_argument("pair states must share a dimension");
  return {std::move(rho0), std::move(rho1)};
}

EfiPair pair_from_json(const json& j) {
  if (!j.contains("rho0") || !j.contains("rho1")) throw std::invalid_argument("pair needs rho0 and rho1");
  return make_pair(state_from_json(j.at("rho0")), state_from_json(j.at("rho1")));
}

json pair_to_json(const EfiPair& p) { return {{"rho0", state_to_json(p.rho0)}, {"rho1", state_to_json(p.rho1)}}; }

Helstrom helstrom(const Mat& rho0, const Mat& rho1) {
  RVec w;
  Mat v;
  herm_eig(hermitize(rho0 - rho1), w, v);
  const std::size_t d = static_cast<std::size_t>(rho0.rows());
  Helstrom h;
  h.pi0 = Mat::Zero(d, d);
  for (std::size_t k = 0; k < d; ++k)
    if (w(k) >= -1e-12) h.pi0 += v.col(k) * v.col(k).adjoint();
  h.pi1 = Mat::Identity(d, d) - h.pi0;
  h.p00 = (h.pi0 * rho0).trace().real();
  h.p01 = (h.pi0 * rho1).trace().real();
  h.p10 = 1.0 - h.p00;
  h.p11 = 1.0 - h.p01;
  return h;
}

Helstrom helstrom(const EfiPair& p) { return helstrom(p.rho0.matrix(), p.rho1.matrix()); }

EfiPair amplify(const EfiPair& p, int r) {
  if (r < 1) throw std::invalid_argument("amplification needs r >= 1");
  check_dim(static_cast<std::size_t>(std::pow(static_cast<double>(p.rho0.dim()), r)), "amplify");
  return {tensor_power(p.rho0, r), tensor_power(p.rho1, r)};
}

EfiPair amplify_to(const EfiPair& p, double target, int r_max, int* r_used) {
  for (int r = 1; r <= r_max; ++r) {
    if (std::pow(static_cast<double>(p.rho0.dim()), r) > static_cast<double>(dim_cap())) break;
    EfiPair a = amplify(p, r);
    if (a.half_l1() >= target) {
      if (r_used) *r_used = r;
      return a;
    }
  }
  throw std::runtime_error("amplification target not reached within the cap");
}

double EfiOwsg::accept_probability(std::uint64_t guess, std::uint64_t key) const {
  double a = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int g = (guess >> (n - 1 - i)) & 1, x = (key >> (n - 1 - i)) & 1;
    a *= g == 0 ? (x == 0 ? h.p00 : h.p01) : (x == 0 ? h.p10 : h.p11);
  }
  return a;
}

double EfiOwsg::correctness() const {
  double c = 0.0;
  const std::uint64_t keys = std::uint64_t{1} << n;
  for (std::uint64_t x = 0; x < keys; ++x) c += accept_probability(x, x);
  return c / static_cast<double>(keys);
}

double EfiOwsg::union_bound() const { return 1.0 - static_cast<double>(n) * h.error(); }

OwsgInstance EfiOwsg::to_instance(std::size_t m) const {
  check_dim(static_cast<std::size_t>(std::pow(static_cast<double>(pair.rho0.dim()), n)), "EfiOwsg::to_instance");
  OwsgInstance inst;
  inst.type = "efi";
  inst.n = n;
  inst.m = m;
  const std::uint64_t keys = std::uint64_t{1} << n;
  inst.key_dist.assign(keys, 1.0 / static_cast<double>(keys));
  for (std::uint64_t x = 0; x < keys; ++x) {
    Mat phi = Mat::Identity(1, 1), ver = Mat::Identity(1, 1);
    for (std::size_t i = 0; i < n; ++i) {
      const bool one = (x >> (n - 1 - i)) & 1;
      phi = kron(phi, one ? pair.rho1.matrix() : pair.rho0.matrix());
      ver = kron(ver, one ? h.pi1 : h.pi0);
    }
    inst.phi.push_back(phi);
    inst.ver.push_back(ver);
  }
  inst.check();
  return inst;
}

EfiOwsg build_owsg_from_efi(const EfiPair& p, std::size_t n) {
  if (n == 0 || n > 20) throw std::invalid_argument("key length must be in [1, 20]");
  return {p, helstrom(p), n};
}

ProductInverter helstrom_majority_inverter(const Helstrom& h) {
  return [h](const std::vector<const Mat*>& pos, std::size_t t, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uint64_t g = 0;
    for (const Mat* rho : pos) {
      const double p0 = std::clamp((h.pi0 * *rho).trace().real(), 0.0, 1.0);
      std::size_t zeros = 0;
      for (std::size_t c = 0; c < t; ++c) zeros += u(rng) < p0;
      g = (g << 1) | (2 * zeros >= t ? 0u : 1u);
    }
    return g;
  };
}

ProductInverter random_inverter(std::size_t n) {
  return [n](const std::vector<const Mat*>&, std::size_t, Rng& rng) { return rng() & ((std::uint64_t{1} << n) - 1); };
}

ProductInverter mixed_inverter(ProductInverter base, double q, std::size_t n) {
  return [base = std::move(base), q, n](const std::vector<const Mat*>& pos, std::size_t t, Rng& rng) {
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < q) return base(pos, t, rng);
    return rng() & ((std::uint64_t{1} << n) - 1);
  };
}

ReductionReport inverter_to_distinguisher(const ProductInverter& inv, const EfiPair& p, std::size_t n, std::size_t t,
                                          std::size_t advice, int trials, std::uint64_t seed) {
  if (advice >= n) throw std::invalid_argument("advice must be a key position");
  if (trials <= 0) throw std::invalid_argument("trials must be positive");
  ReductionReport r;
  r.n = n, r.t = t, r.advice = advice, r.trials = trials;
  int exact = 0, prefix = 0, cond = 0, success = 0;
  const Mat* states[2] = {&p.rho0.matrix(), &p.rho1.matrix()};
  const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
  for (int k = 0; k < trials; ++k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    const int b = static_cast<int>(rng() & 1);
    std::uint64_t x = rng() & mask;
    const std::size_t shift = n - 1 - advice;
    x = (x & ~(std::uint64_t{1} << shift)) | (static_cast<std::uint64_t>(b) << shift);
    std::vector<const Mat*> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = states[(x >> (n - 1 - i)) & 1];
    const std::uint64_t g = inv(pos, t, rng);
    exact += g == x;
    const std::uint64_t pm = advice == 0 ? 0 : (mask << (n - advice)) & mask;
    int out;
    if ((g & pm) == (x & pm)) {
      ++prefix;
      out = static_cast<int>((g >> shift) & 1);
      cond += out == b;
    } else {
      out = static_cast<int>(rng() & 1);
    }
    success += out == b;
  }
  const double T = trials;
  r.inverter_success = exact / T;
  r.prefix_match = prefix / T;
  r.conditional = prefix > 0 ? static_cast<double>(cond) / prefix : 0.0;
  r.three_quarters = r.conditional >= 0.75;
  r.success = success / T;
  r.composed = r.prefix_match * r.conditional + 0.5 * (1.0 - r.prefix_match);
  r.std_error = std::sqrt(std::max(r.success * (1.0 - r.success), 0.25 / T) / T);
  r.bound = 0.5 + r.inverter_success / 4.0;
  r.advantage = 2.0 * r.success - 1.0;
  return r;
}

std::size_t find_advice(const ProductInverter& inv, const EfiPair& p, std::size_t n, std::size_t t, int trials,
                        std::uint64_t seed) {
  std::size_t best = 0;
  double best_c = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = inverter_to_distinguisher(inv, p, n, t, i, trials, derive_seed(seed, i, 7));
    if (r.conditional > best_c) best_c = r.conditional, best = i;
  }
  return best;
}

json ReductionReport::to_json() const {
  return {{"n", n},
          {"t", t},
          {"advice", advice},
          {"trials", trials},
          {"inverter_success", inverter_success},
          {"prefix_match", prefix_match},
          {"conditional", conditional},
          {"three_quarters", three_quarters},
          {"success", success},
          {"composed", composed},
          {"std_error", std_error},
          {"bound", bound},
          {"advantage", advantage}};
}

}  // namespace qlab
