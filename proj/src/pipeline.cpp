#include "qlab/pipeline.hpp"

#include "qlab/hardcore.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

namespace qlab {

// ---- parameters -----------------------------------------------------------------

std::size_t PipelineParams::hl(std::size_t n) const {
  return hardcore_len < 0 ? n : static_cast<std::size_t>(hardcore_len);
}

double PipelineParams::offset(std::size_t n) const {
  return hash_offset < 0.0 ? (12.0 + 2.0 * c_dprime) * std::log2(static_cast<double>(n)) : hash_offset;
}

double PipelineParams::kappa(std::size_t n) const {
  if (kappa_log >= 0.0) return kappa_log;
  const double t0 = static_cast<double>(std::max<std::size_t>(n, static_cast<std::size_t>(std::max(t, 1))));
  return 2.0 * std::log2(t0) + 4.0;
}

void PipelineParams::check(std::size_t n) const {
  if (t < 1) throw std::invalid_argument("t must be at least 1");
  if (hl(n) > n) throw std::invalid_argument("hardcore_len must be at most n");
  if (eps < 0.0 || eps >= 1.0) throw std::invalid_argument("eps must be in [0, 1)");
  if (out_len == 0 || out_len < -1) throw std::invalid_argument("out_len must be positive");
  flat.check();
}

json PipelineParams::to_json() const {
  return {{"c_prime", c_prime},
          {"c_dprime", c_dprime},
          {"hardcore_len", hardcore_len},
          {"hash_offset", hash_offset},
          {"bin_count", flat.bin_count},
          {"brother_budget", flat.brother_budget},
          {"t", t},
          {"eps", eps},
          {"kappa_log", kappa_log},
          {"out_len", out_len},
          {"seed", seed},
          {"sampler", sampler == UnitarySampler::haar ? "haar" : "two_design"}};
}

PipelineParams PipelineParams::from_json(const json& j) {
  static const std::vector<std::string> known{"c_prime", "c_dprime", "hardcore_len", "hash_offset",
                                              "bin_count", "brother_budget", "t", "eps",
                                              "kappa_log", "out_len", "seed", "sampler"};
  if (!j.is_object()) throw std::invalid_argument("params must be an object");
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw std::invalid_argument("unknown pipeline parameter: " + k);
  PipelineParams p;
  p.c_prime = j.value("c_prime", p.c_prime);
  p.c_dprime = j.value("c_dprime", p.c_dprime);
  p.hardcore_len = j.value("hardcore_len", p.hardcore_len);
  p.hash_offset = j.value("hash_offset", p.hash_offset);
  p.flat.bin_count = j.value("bin_count", p.flat.bin_count);
  p.flat.brother_budget = j.value("brother_budget", p.flat.brother_budget);
  p.t = j.value("t", p.t);
  p.eps = j.value("eps", p.eps);
  p.kappa_log = j.value("kappa_log", p.kappa_log);
  p.out_len = j.value("out_len", p.out_len);
  p.seed = j.value("seed", p.seed);
  const std::string s = j.value("sampler", std::string("haar"));
  if (s == "haar")
    p.sampler = UnitarySampler::haar;
  else if (s == "two_design")
    p.sampler = UnitarySampler::two_design;
  else
    throw std::invalid_argument("unknown sampler: " + s);
  return p;
}

// ---- block machinery ------------------------------------------------------------

namespace {

using Labels = std::vector<std::uint32_t>;
using Key = std::vector<std::uint16_t>;

double eta(const Mat& m) {
  double s = 0.0;
  const RVec w = herm_eigenvalues(hermitize(m));
  for (Eigen::Index k = 0; k < w.size(); ++k)
    if (w(k) > 0.0) s -= w(k) * std::log2(w(k));
  return s;
}

// Classes numbered by first appearance.
Key canonical(const Labels& lab, std::size_t* classes = nullptr) {
  Key k(lab.size());
  std::vector<std::uint32_t> seen;
  for (std::size_t x = 0; x < lab.size(); ++x) {
    auto it = std::find(seen.begin(), seen.end(), lab[x]);
    if (it == seen.end()) {
      k[x] = static_cast<std::uint16_t>(seen.size());
      seen.push_back(lab[x]);
    } else {
      k[x] = static_cast<std::uint16_t>(it - seen.begin());
    }
  }
  if (classes) *classes = seen.size();
  return k;
}

std::vector<Mat> class_sums(const std::vector<Mat>& parts, const Key& key) {
  std::size_t c = 0;
  for (auto v : key) c = std::max<std::size_t>(c, v + 1u);
  const Eigen::Index d = parts.front().rows();
  std::vector<Mat> s(c, Mat::Zero(d, d));
  for (std::size_t x = 0; x < parts.size(); ++x) s[key[x]] += parts[x];
  return s;
}

// z(x) per seed over the n + l - 1 relevant seed bits.
std::vector<Labels> hash_labels(std::size_t n, std::size_t l) {
  const std::size_t keys = std::size_t{1} << n;
  if (l == 0) return {Labels(keys, 0)};
  const std::size_t sl = ToeplitzHash::seed_len(n, l);
  std::vector<Labels> out;
  for (std::uint64_t h = 0; h < (std::uint64_t{1} << sl); ++h) {
    const auto rows = ToeplitzHash(n, l, bits_of(h, sl)).row_masks();
    Labels z(keys);
    for (std::uint64_t x = 0; x < keys; ++x) z[x] = static_cast<std::uint32_t>(hash_index(rows, x, n));
    out.push_back(std::move(z));
  }
  return out;
}

// g(x, r) per value of the n + hl - 1 relevant leading bits of r.
std::vector<Labels> hardcore_labels(std::size_t n, std::size_t hl) {
  const std::size_t keys = std::size_t{1} << n;
  if (hl == 0) return {Labels(keys, 0)};
  const std::size_t rel = n + hl - 1;
  const HardcoreSpec sp{n, hl};
  std::vector<Labels> out;
  for (std::uint64_t rr = 0; rr < (std::uint64_t{1} << rel); ++rr) {
    const std::uint64_t r = rr << (2 * n - rel);
    Labels g(keys);
    for (std::uint64_t x = 0; x < keys; ++x) g[x] = static_cast<std::uint32_t>(hardcore_index(sp, x, r));
    out.push_back(std::move(g));
  }
  return out;
}

Labels combine(const Labels& z, const Labels& g, std::size_t hl) {
  Labels c(z.size());
  for (std::size_t x = 0; x < z.size(); ++x) c[x] = (z[x] << hl) | g[x];
  return c;
}

// sum_j sum_classes eta(sum_{x in class} parts[j][x]), memoized on the partition.
class GroupEntropy {
 public:
  explicit GroupEntropy(std::vector<std::vector<Mat>> parts) : parts_(std::move(parts)) {}
  double operator()(const Labels& lab) {
    Key k = canonical(lab);
    auto it = memo_.find(k);
    if (it != memo_.end()) return it->second;
    double s = 0.0;
    for (const auto& p : parts_)
      for (const auto& m : class_sums(p, k)) s += eta(m);
    memo_.emplace(std::move(k), s);
    return s;
  }

 private:
  std::vector<std::vector<Mat>> parts_;
  std::map<Key, double> memo_;
};

// sum_j sum_z || sum_{x: z(x) = z} parts[j][x] - 2^-l sum_x parts[j][x] ||_1 over all 2^l values z.
class GroupDistance {
 public:
  GroupDistance(std::vector<std::vector<Mat>> parts, std::size_t l) : parts_(std::move(parts)), l_(l) {
    for (const auto& p : parts_) {
      Mat t = Mat::Zero(p.front().rows(), p.front().rows());
      for (const auto& m : p) t += m;
      totals_.push_back(t);
    }
  }
  double operator()(const Labels& lab) {
    std::size_t classes = 0;
    Key k = canonical(lab, &classes);
    auto it = memo_.find(k);
    if (it != memo_.end()) return it->second;
    const double w = std::exp2(-static_cast<double>(l_));
    const double empty = std::exp2(static_cast<double>(l_)) - static_cast<double>(classes);
    double s = 0.0;
    for (std::size_t j = 0; j < parts_.size(); ++j) {
      for (const auto& m : class_sums(parts_[j], k)) s += trace_norm(m - w * totals_[j]);
      s += empty * w * totals_[j].trace().real();
    }
    memo_.emplace(std::move(k), s);
    return s;
  }

 private:
  std::vector<std::vector<Mat>> parts_;
  std::vector<Mat> totals_;
  std::size_t l_;
  std::map<Key, double> memo_;
};

std::vector<Mat> key_blocks(const DensityState& tau) {
  const std::size_t dx = tau.layout().subsystems().front().dim;
  const std::size_t dq = tau.dim() / dx;
  std::vector<Mat> b;
  for (std::size_t x = 0; x < dx; ++x) b.push_back(tau.matrix().block(x * dq, x * dq, dq, dq));
  return b;
}

// sectors[j][x]: the J = j part of p_x phi_x^{(x) i}, for nonempty j.
std::vector<std::vector<Mat>> key_sectors(const FlattenedState& f, std::vector<int>* js = nullptr) {
  std::vector<std::vector<Mat>> s;
  for (int j = 0; j <= f.binned.params.bin_count; ++j) {
    if (f.binned.q[j] <= 0.0) continue;
    s.push_back(key_blocks(DensityState::trusted(f.sector(j), f.binned.input.layout())));
    if (js) js->push_back(j);
  }
  return s;
}

double s_b_given_j(const FlattenedState& f) {
  double s = 0.0;
  for (int j = 0; j <= f.binned.params.bin_count; ++j) s += f.binned.q[j] * f.brothers[j];
  return s;
}

}  // namespace

LStar compute_l_star(const OwsgInstance& inst, std::size_t i, const PipelineParams& params) {
  LStar r;
  r.i = i;
  auto f = flatten(build_tau(inst, i), params.flat);
  r.s2_next_jb = cond_x_given_rest_extended(f, inst.phi, 2.0);
  r.offset = params.offset(inst.n);
  const double v = std::floor(r.s2_next_jb - r.offset + 1e-9);
  r.l = v <= 0.0 ? 0 : std::min(inst.n, static_cast<std::size_t>(v));
  r.offset_eff = r.s2_next_jb - static_cast<double>(r.l);
  return r;
}

BlockEntropies block_entropies(const OwsgInstance& inst, std::size_t i, std::size_t l, const PipelineParams& params) {
  params.check(inst.n);
  const std::size_t n = inst.n;
  if (l > n) throw std::invalid_argument("hash length must be at most n");
  BlockEntropies b;
  b.i = i, b.l = l, b.hl = params.hl(n), b.s = hash_seed_bits(n);
  const double base = static_cast<double>(b.s + 2 * n);

  const DensityState tau = build_tau(inst, i);
  const auto f = flatten(tau, params.flat);
  const auto phi = key_blocks(tau);
  const auto sectors = key_sectors(f);
  std::vector<std::vector<Mat>> sectors_next = sectors;
  for (auto& sj : sectors_next)
    for (std::size_t x = 0; x < sj.size(); ++x) sj[x] = kron(sj[x], inst.phi[x]);

  b.s_b_given_j = s_b_given_j(f);
  b.j_bits = static_cast<double>(f.j_qubits);
  b.qubits = static_cast<double>(i) * std::log2(static_cast<double>(inst.q_dim())) + b.j_bits +
             static_cast<double>(f.b_qubits) + base + static_cast<double>(l + b.hl);
  b.s_xqjb = entropy_total(f);
  b.s_qjb = entropy_rest(f);
  b.s2_next_jb = cond_x_given_rest_extended(f, inst.phi, 2.0);

  const auto zt = hash_labels(n, l);
  const auto gt = hardcore_labels(n, b.hl);
  GroupEntropy e_plain({phi}), e_sect(sectors);
  GroupDistance d_now(sectors, l), d_next(sectors_next, l);

  double a0 = 0.0, a0p = 0.0, a1 = 0.0, a1p = 0.0, dh = 0.0, dn = 0.0, marg = 0.0;
  for (const auto& z : zt) {
    a1 += e_plain(z);
    a1p += e_sect(z);
    if (l > 0) {
      dh += d_now(z);
      dn += d_next(z);
    }
    // tau_1 marginal on Q^i H Z: the classes of z.
    std::map<std::uint32_t, Mat> direct;
    for (std::size_t x = 0; x < phi.size(); ++x) {
      auto it = direct.find(z[x]);
      if (it == direct.end())
        direct.emplace(z[x], phi[x]);
      else
        it->second += phi[x];
    }
    for (const auto& g : gt) {
      const Labels c = combine(z, g, b.hl);
      a0 += e_plain(c);
      a0p += e_sect(c);
      // tau_0 marginal: sum of the (z, g) classes over g.
      std::map<std::uint32_t, Mat> by_class, summed;
      for (std::size_t x = 0; x < phi.size(); ++x) {
        auto it = by_class.find(c[x]);
        if (it == by_class.end())
          by_class.emplace(c[x], phi[x]);
        else
          it->second += phi[x];
      }
      for (const auto& [cls, m] : by_class) {
        const std::uint32_t zv = cls >> b.hl;
        auto it = summed.find(zv);
        if (it == summed.end())
          summed.emplace(zv, m);
        else
          it->second += m;
      }
      for (const auto& [zv, m] : summed) marg = std::max(marg, (m - direct.at(zv)).cwiseAbs().maxCoeff());
    }
  }
  const double nz = static_cast<double>(zt.size()), ng = static_cast<double>(gt.size());
  a0 /= nz * ng, a0p /= nz * ng, a1 /= nz, a1p /= nz;
  b.tau0 = base + a0;
  b.tau0p = base + b.s_b_given_j + a0p;
  b.tau1 = base + static_cast<double>(b.hl) + a1;
  b.tau1p = base + static_cast<double>(b.hl) + b.s_b_given_j + a1p;
  b.tau1_tilde = b.s_qjb + base + static_cast<double>(l + b.hl);
  b.d_hash = dh / nz;
  b.d_hash_next = dn / nz;
  b.visible_marginal_diff = marg;
  return b;
}

json BlockEntropies::to_json() const {
  return {{"i", i},
          {"l", l},
          {"hardcore_len", hl},
          {"seed_bits", s},
          {"S_tau0", tau0},
          {"S_tau1", tau1},
          {"S_tau0_prime", tau0p},
          {"S_tau1_prime", tau1p},
          {"S_tau1_tilde", tau1_tilde},
          {"S_XQJB", s_xqjb},
          {"S_QJB", s_qjb},
          {"S_B_given_J", s_b_given_j},
          {"J_bits", j_bits},
          {"qubits", qubits},
          {"hash_distance", d_hash},
          {"hash_distance_next", d_hash_next},
          {"S2_X_given_QnextJB", s2_next_jb},
          {"visible_marginal_diff", visible_marginal_diff}};
}

// ---- dense blocks ---------------------------------------------------------------

namespace {

// Calls f(x, h, z, r, g, w) for every classical record of tau_0(i, l) (uniform_g: tau_1),
// with w the probability of (h, r, g) given x.
void for_each_record(std::size_t n, std::size_t l, std::size_t hl, bool uniform_g,
                     const std::function<void(std::uint64_t, std::uint64_t, std::uint64_t, std::uint64_t,
                                              std::uint64_t, double)>& f) {
  const std::size_t s = hash_seed_bits(n), keys = std::size_t{1} << n;
  const std::size_t sl = ToeplitzHash::seed_len(n, l);
  const double w = std::exp2(-static_cast<double>(s + 2 * n + (uniform_g ? hl : 0)));
  const HardcoreSpec sp{n, std::max<std::size_t>(hl, 1)};
  for (std::uint64_t h = 0; h < (std::uint64_t{1} << s); ++h) {
    std::vector<std::uint64_t> rows;
    if (l > 0) rows = ToeplitzHash(n, l, bits_of(h >> (s - sl), sl)).row_masks();
    for (std::uint64_t x = 0; x < keys; ++x) {
      const std::uint64_t z = l > 0 ? hash_index(rows, x, n) : 0;
      for (std::uint64_t r = 0; r < (std::uint64_t{1} << (2 * n)); ++r) {
        if (uniform_g) {
          for (std::uint64_t g = 0; g < (std::uint64_t{1} << hl); ++g) f(x, h, z, r, g, w);
        } else {
          const std::uint64_t g = hl > 0 ? hardcore_index(sp, x, r) >> (sp.out_len - hl) : 0;
          f(x, h, z, r, g, w);
        }
      }
    }
  }
}

RegisterLayout classical_tail(std::size_t n, std::size_t z_bits, std::size_t hl) {
  RegisterLayout lay = qubits("H", static_cast<int>(hash_seed_bits(n)), true);
  if (z_bits > 0) lay = lay.concat(qubits("Z", static_cast<int>(z_bits), true));
  lay = lay.concat(qubits("R", static_cast<int>(2 * n), true));
  if (hl > 0) lay = lay.concat(qubits("G", static_cast<int>(hl), true));
  return lay;
}

DensityState dense_block(const OwsgInstance& inst, std::size_t i, std::size_t l, const PipelineParams& params,
                         bool keep_jb, bool uniform_g) {
  params.check(inst.n);
  const std::size_t n = inst.n, hl = params.hl(n);
  const DensityState tau = build_tau(inst, i);
  const auto phi = key_blocks(tau);
  const std::size_t dq = static_cast<std::size_t>(phi.front().rows());
  // (prefix index, weight, per-key blocks)
  std::vector<std::pair<std::size_t, std::vector<Mat>>> parts;
  RegisterLayout lay;
  bool have = false;
  if (keep_jb) {
    const auto f = flatten(tau, params.flat);
    std::vector<int> js;
    const auto sectors = key_sectors(f, &js);
    const std::size_t db = std::size_t{1} << f.b_qubits;
    for (std::size_t k = 0; k < js.size(); ++k) {
      const int bro = f.brothers[js[k]];
      const double w = std::exp2(-static_cast<double>(bro));
      for (std::size_t b = 0; b < (std::size_t{1} << bro); ++b) {
        std::vector<Mat> sc;
        for (const auto& m : sectors[k]) sc.push_back(w * m);
        parts.push_back({static_cast<std::size_t>(js[k]) * db + b, std::move(sc)});
      }
    }
    lay = qubits("J", static_cast<int>(f.j_qubits), true).concat(qubits("B", static_cast<int>(f.b_qubits), true));
    have = true;
  } else {
    parts.push_back({0, phi});
  }
  RegisterLayout tail = classical_tail(n, l, hl);
  lay = have ? lay.concat(tail) : tail;
  for (std::size_t k = 1; k <= i; ++k) lay = lay.concat(reg("Q" + std::to_string(k), inst.q_dim()));
  const std::size_t dc = tail.total_dim();
  check_dim(lay.total_dim(), "dense tau block");
  Mat m = Mat::Zero(lay.total_dim(), lay.total_dim());
  for_each_record(n, l, hl, uniform_g,
                  [&](std::uint64_t x, std::uint64_t h, std::uint64_t z, std::uint64_t r, std::uint64_t g, double w) {
                    const std::size_t c = ((((h << l) | z) << (2 * n) | r) << hl) | g;
                    for (const auto& [prefix, blocks] : parts) {
                      const std::size_t at = (prefix * dc + c) * dq;
                      m.block(at, at, dq, dq) += w * blocks[x];
                    }
                  });
  return DensityState::trusted(m, lay);
}

}  // namespace

DensityState build_tau0(const OwsgInstance& inst, std::size_t i, std::size_t l, const PipelineParams& params,
                        bool keep_jb) {
  return dense_block(inst, i, l, params, keep_jb, false);
}

DensityState build_tau1(const OwsgInstance& inst, std::size_t i, std::size_t l, const PipelineParams& params,
                        bool keep_jb) {
  return dense_block(inst, i, l, params, keep_jb, true);
}

std::size_t grid_size(const OwsgInstance& inst) { return (inst.m + 1) * (inst.n + 1); }

namespace {

DensityState dense_rho(const OwsgInstance& inst, const PipelineParams& params, bool swap, std::size_t is,
                       std::size_t ls) {
  params.check(inst.n);
  const std::size_t n = inst.n, m = inst.m, hl = params.hl(n), G = grid_size(inst);
  RegisterLayout lay = reg("IDX", G, true).concat(classical_tail(n, n, hl));
  for (std::size_t k = 1; k <= m; ++k) lay = lay.concat(reg("Q" + std::to_string(k), inst.q_dim()));
  check_dim(lay.total_dim(), "dense rho");
  const std::size_t dqm = static_cast<std::size_t>(std::pow(inst.q_dim(), m));
  const std::size_t dc = lay.total_dim() / (G * dqm);
  Mat out = Mat::Zero(lay.total_dim(), lay.total_dim());
  for (std::size_t i = 0; i <= m; ++i) {
    const auto phi = key_blocks(build_tau(inst, i));
    const std::size_t pad = dqm / static_cast<std::size_t>(phi.front().rows());
    Mat zero = Mat::Zero(pad, pad);
    zero(0, 0) = 1.0;
    std::vector<Mat> padded;
    for (const auto& p : phi) padded.push_back(kron(p, zero));
    for (std::size_t l = 0; l <= n; ++l) {
      const std::size_t idx = i * (n + 1) + l;
      const bool one = swap && i == is && l == ls;
      for_each_record(n, l, hl, one,
                      [&](std::uint64_t x, std::uint64_t h, std::uint64_t z, std::uint64_t r, std::uint64_t g,
                          double w) {
                        const std::size_t c = ((((h << n) | z) << (2 * n) | r) << hl) | g;
                        const std::size_t at = (idx * dc + c) * dqm;
                        out.block(at, at, dqm, dqm) += (w / static_cast<double>(G)) * padded[x];
                      });
    }
  }
  return DensityState::trusted(out, lay);
}

}  // namespace

DensityState build_rho0(const OwsgInstance& inst, const PipelineParams& params) {
  return dense_rho(inst, params, false, 0, 0);
}

DensityState build_rho1(const OwsgInstance& inst, std::size_t i_star, std::size_t l_star,
                        const PipelineParams& params) {
  if (i_star > inst.m || l_star > inst.n) throw std::invalid_argument("(i*, l*) outside the grid");
  return dense_rho(inst, params, true, i_star, l_star);
}

EfiCandidatePair build_pair(const OwsgInstance& inst, std::size_t i_star, std::size_t l_star,
                            const PipelineParams& params) {
  return {build_rho0(inst, params), build_rho1(inst, i_star, l_star, params), i_star, l_star, true, false};
}

// ---- spectra ----------------------------------------------------------------------

WeightedSpectrum rho_spectrum(const OwsgInstance& inst, const PipelineParams& params, bool swap_block,
                              std::size_t i_star, std::size_t l_star) {
  params.check(inst.n);
  const std::size_t n = inst.n, hl = params.hl(n), s = hash_seed_bits(n);
  const double G = static_cast<double>(grid_size(inst));
  WeightedSpectrum w;
  const auto gt = hardcore_labels(n, hl);
  for (std::size_t i = 0; i <= inst.m; ++i) {
    const auto phi = key_blocks(build_tau(inst, i));
    for (std::size_t l = 0; l <= n; ++l) {
      const bool one = swap_block && i == i_star && l == l_star;
      const auto zt = hash_labels(n, l);
      const double srel = static_cast<double>(ToeplitzHash::seed_len(n, l));
      const double rrel = hl > 0 ? static_cast<double>(n + hl - 1) : 0.0;
      std::map<Key, double> counts;
      for (const auto& z : zt) {
        if (one) {
          counts[canonical(z)] += 1.0;
        } else {
          for (const auto& g : gt) counts[canonical(combine(z, g, hl))] += 1.0;
        }
      }
      const double dn = static_cast<double>(s + 2 * n);
      const double scale = one ? std::exp2(-(dn + static_cast<double>(hl))) / G : std::exp2(-dn) / G;
      const double mult = one ? std::exp2(static_cast<double>(s) - srel + 2.0 * n + static_cast<double>(hl))
                              : std::exp2(static_cast<double>(s) - srel + 2.0 * n - rrel);
      for (const auto& [key, c] : counts)
        for (const auto& m : class_sums(phi, key)) {
          const RVec ev = herm_eigenvalues(hermitize(m));
          for (Eigen::Index k = 0; k < ev.size(); ++k)
            if (ev(k) > 1e-15) w.items.push_back({ev(k) * scale, c * mult});
        }
    }
  }
  return w;
}

double spectrum_entropy(const WeightedSpectrum& w) {
  double s = 0.0;
  for (const auto& [v, m] : w.items)
    if (v > 0.0) s -= m * v * std::log2(v);
  return s;
}

WeightedSpectrum weighted_power(const WeightedSpectrum& w, int t, std::size_t max_items) {
  if (t < 1) throw std::invalid_argument("power must be at least 1");
  WeightedSpectrum r;
  r.items = {{1.0, 1.0}};
  for (int k = 0; k < t; ++k) {
    if (r.items.size() * w.items.size() > max_items) throw std::runtime_error("spectrum power too large");
    std::vector<std::pair<double, double>> next;
    next.reserve(r.items.size() * w.items.size());
    for (const auto& [a, ma] : r.items)
      for (const auto& [b, mb] : w.items) next.push_back({a * b, ma * mb});
    std::sort(next.begin(), next.end());
    r.items.clear();
    for (const auto& it : next) {
      if (!r.items.empty() && std::abs(r.items.back().first - it.first) <= 1e-12 * it.first)
        r.items.back().second += it.second;
      else
        r.items.push_back(it);
    }
  }
  return r;
}

// ---- gap chain --------------------------------------------------------------------

json audit_lines_to_json(const std::vector<AuditLine>& lines, double tol) {
  json a = json::array();
  for (const auto& l : lines)
    a.push_back({{"id", l.id},
                 {"lhs", l.lhs},
                 {"rhs", l.rhs},
                 {"slack", l.slack()},
                 {"asserted", l.asserted},
                 {"pass", l.pass(tol)}});
  return a;
}

GapChainReport entropy_gap_audit(const OwsgInstance& inst, const PipelineParams& params) {
  params.check(inst.n);
  GapChainReport r;
  const std::size_t n = inst.n;
  const double logn = std::log2(static_cast<double>(n));
  r.c_log_n = params.c_prime * logn;
  r.istar = find_i_star(inst, r.c_log_n);
  const std::size_t i = r.istar.i_star;
  r.lstar = compute_l_star(inst, i, params);
  const auto& b = r.block = block_entropies(inst, i, r.lstar.l, params);
  const auto fg = flattened_gap_check(inst, i, params.flat);
  const auto fl = verify_flatness_claim(flatten(build_tau(inst, i), params.flat));

  const double s = static_cast<double>(b.s), two_n = 2.0 * n, hl = static_cast<double>(b.hl), J = b.j_bits;
  const double gap = r.istar.gap, off = r.lstar.offset_eff;
  const double fannes = b.qubits * b.d_hash + 1.0 / std::exp(1.0);
  const bool pigeonhole = r.c_log_n >= static_cast<double>(n) / static_cast<double>(inst.m) - tol().num;
  const bool hyp = gap <= r.c_log_n + tol().num;
  const bool hyp_f = hyp && fannes <= 1.0;
  const double diff_p = b.tau1p - b.tau0p, diff = b.tau1 - b.tau0;
  const double G = static_cast<double>(grid_size(inst));

  const auto w0 = rho_spectrum(inst, params, false);
  const auto w1 = rho_spectrum(inst, params, true, i, r.lstar.l);
  r.rho0_entropy = spectrum_entropy(w0);
  r.rho1_entropy = spectrum_entropy(w1);
  r.rho_diff = r.rho1_entropy - r.rho0_entropy;
  r.rho_diff_blocks = diff / G;
  const double final_param = hl - off - r.c_log_n - 2.0 * J - 3.0;

  r.lines = {
      {"istar_gap", gap, r.c_log_n, pigeonhole},
      {"flattened_gap", fg.difference, fg.bound, true},
      {"two_flat", fl.excess, 2.0, true},
      {"hash_next", b.d_hash_next, std::exp2(-(b.s2_next_jb - static_cast<double>(b.l)) / 2.0),
       static_cast<double>(b.l) <= b.s2_next_jb + tol().num},
      {"hash_traced_out", b.d_hash, b.d_hash_next, true},
      {"fannes", std::abs(b.tau1p - b.tau1_tilde), fannes, true},
      {"rho0_entropy", b.tau0p, b.s_xqjb + s + two_n, true},
      {"rho1_entropy", b.s_xqjb + s + two_n + hl - off - gap - J - 2.0, b.tau1_tilde, true},
      {"rho1_entropy_parametric", b.s_xqjb + s + two_n + hl - off - r.c_log_n - J - 2.0, b.tau1_tilde, hyp},
      {"entropy_diff", hl - off - gap - J - 2.0 - fannes, diff_p, true},
      {"entropy_diff_parametric", hl - off - r.c_log_n - J - 3.0, diff_p, hyp_f},
      {"Stau_0", b.tau0 + b.s_b_given_j, b.tau0p, true},
      {"Stau1", b.tau1p, b.tau1 + b.s_b_given_j + J, true},
      {"final", diff_p - J, diff, true},
      {"final_parametric", final_param, diff, hyp_f},
      {"rho_identity", std::abs(r.rho_diff - r.rho_diff_blocks), 0.0, true},
      {"rho_gap_parametric", final_param / G, r.rho_diff, hyp_f},
      {"visible_marginals", b.visible_marginal_diff, 1e-10, true},
  };
  r.pass = std::all_of(r.lines.begin(), r.lines.end(), [](const AuditLine& l) { return l.pass(tol().opt); });
  return r;
}

json GapChainReport::to_json() const {
  return {{"i_star", istar.to_json()},
          {"l_star",
           {{"i", lstar.i},
            {"S2_X_given_QnextJB", lstar.s2_next_jb},
            {"offset", lstar.offset},
            {"l", lstar.l},
            {"offset_eff", lstar.offset_eff}}},
          {"block", block.to_json()},
          {"c_log_n", c_log_n},
          {"S_rho0", rho0_entropy},
          {"S_rho1", rho1_entropy},
          {"rho_diff", rho_diff},
          {"rho_diff_blocks", rho_diff_blocks},
          {"lines", audit_lines_to_json(lines, tol().opt)},
          {"pass", pass}};
}

// ---- t-fold extraction ----------------------------------------------------------

std::size_t qubit_count(std::size_t dim) {
  std::size_t q = 0;
  while ((std::size_t{1} << q) < dim) ++q;
  return q;
}

DensityState pad_to_qubits(const DensityState& s) {
  const std::size_t q = std::max<std::size_t>(qubit_count(s.dim()), 1), d = std::size_t{1} << q;
  Mat m = Mat::Zero(d, d);
  m.topLeftCorner(s.dim(), s.dim()) = s.matrix();
  return DensityState::trusted(m, qubits("P", static_cast<int>(q)));
}

EfiRun run_efi_k(const DensityState& rho0, const PipelineParams& params, int b, int k, Rng& rng,
                 std::size_t key_len) {
  if (b != 0 && b != 1) throw std::invalid_argument("b must be 0 or 1");
  if (params.t < 1) throw std::invalid_argument("t must be at least 1");
  const std::size_t q1 = std::max<std::size_t>(qubit_count(rho0.dim()), 1);
  const std::size_t N = q1 * static_cast<std::size_t>(params.t);
  EfiRun r;
  r.k = k;
  r.input_qubits = N;
  r.out_len = params.out_len < 0 ? N + 1 : static_cast<std::size_t>(params.out_len);
  r.kappa = params.kappa(key_len);
  if (b == 1) {
    r.output = maximally_mixed(qubits("E", static_cast<int>(r.out_len)));
    return r;
  }
  const double sd = std::ceil(static_cast<double>(r.out_len) - 1.0 - k + r.kappa - 1e-9);
  r.seed_len = sd <= 0.0 ? 0 : static_cast<std::size_t>(sd);
  if (r.out_len > N + 1 + r.seed_len) r.seed_len = r.out_len - N - 1;
  QuantumExtractorSpec spec{N, r.seed_len, r.out_len, params.sampler};
  spec.check();
  const DensityState one = pad_to_qubits(rho0);
  const DensityState psi = params.t == 1 ? one : tensor_power(one, params.t);
  r.traced = spec.traced_qubits();
  r.output = apply_quantum_extractor(DensityState::trusted(psi.matrix(), qubits("R", static_cast<int>(N))), spec, rng);
  return r;
}

double compute_k_star(const WeightedSpectrum& rho1, int t, double eps) {
  if (eps == 0.0) {
    double mx = 0.0;
    for (const auto& [v, m] : rho1.items) mx = std::max(mx, v);
    return -static_cast<double>(t) * std::log2(mx);
  }
  return smooth_sinf(weighted_power(rho1, t), eps);
}

double compute_k_star(const DensityState& rho1, int t, double eps) {
  return compute_k_star(weighted(spectrum(rho1.matrix())), t, eps);
}

FarnessReport efi_farness_audit(const DensityState& rho0, const DensityState& rho1, const PipelineParams& params,
                                const std::vector<int>& deltas, int samples) {
  FarnessReport rep;
  rep.k_star = compute_k_star(rho1, params.t, params.eps);
  rep.k_star_support = smooth_s0(weighted_power(weighted(spectrum(rho0.matrix())), params.t), params.eps);
  for (int delta : deltas) {
    FarnessRow row;
    row.delta = delta;
    row.k = static_cast<int>(std::ceil(rep.k_star - 1e-9)) + delta;
    row.target = 1.0 - std::exp2(-delta / 2.0);
    row.min_distance = kInf;
    double max_rank = 0.0;
    for (int sm = 0; sm < samples; ++sm) {
      Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(delta), static_cast<std::uint64_t>(sm)));
      auto run = run_efi_k(rho0, params, 0, row.k, rng);
      rep.out_len = run.out_len, rep.input_qubits = run.input_qubits;
      row.seed_len = run.seed_len, row.traced = run.traced;
      const std::size_t d = run.output.dim();
      const Mat u = Mat::Identity(d, d) / static_cast<double>(d);
      const double dist = 0.5 * trace_norm(run.output.matrix() - u);
      row.mean_distance += dist / samples;
      row.min_distance = std::min(row.min_distance, dist);
      const RVec ev = herm_eigenvalues(run.output.matrix());
      double rank = 0.0;
      for (Eigen::Index k = 0; k < ev.size(); ++k) rank += ev(k) > 1e-12;
      max_rank = std::max(max_rank, rank);
    }
    row.max_rank_bits = std::log2(max_rank);
    row.rank_bound_seed = rep.k_star_support + static_cast<double>(row.seed_len);
    row.rank_bound_traced = row.rank_bound_seed + static_cast<double>(row.traced);
    const double o = static_cast<double>(rep.out_len);
    row.distance_floor = 1.0 - std::exp2(std::min(o, row.rank_bound_traced) - o);
    rep.rows.push_back(row);
  }
  return rep;
}

json FarnessReport::to_json() const {
  json rows_j = json::array();
  for (const auto& r : rows)
    rows_j.push_back({{"delta", r.delta},
                      {"k", r.k},
                      {"seed_len", r.seed_len},
                      {"traced", r.traced},
                      {"mean_distance", r.mean_distance},
                      {"min_distance", r.min_distance},
                      {"target", r.target},
                      {"max_rank_bits", r.max_rank_bits},
                      {"rank_bound_seed", r.rank_bound_seed},
                      {"rank_bound_traced", r.rank_bound_traced},
                      {"distance_floor", r.distance_floor}});
  return {{"k_star", k_star},
          {"k_star_support", k_star_support},
          {"out_len", out_len},
          {"input_qubits", input_qubits},
          {"rows", rows_j}};
}

// ---- hybrid argument ------------------------------------------------------------

namespace {

Mat hybrid(const Mat& r0, const Mat& r1, std::size_t t, std::size_t i) {
  Mat h = Mat::Identity(1, 1);
  for (std::size_t k = 0; k < t; ++k) h = kron(h, k < t - i ? r0 : r1);
  return h;
}

double tr_real(const Mat& a, const Mat& b) { return (a * b).trace().real(); }

}  // namespace

HybridReport hybrid_advantage_check(const Mat& d, const Mat& rho0, const Mat& rho1, std::size_t t, double mix_weight,
                                    std::uint64_t seed) {
  if (t < 1) throw std::invalid_argument("t must be at least 1");
  const std::size_t dim = static_cast<std::size_t>(rho0.rows());
  check_dim(static_cast<std::size_t>(std::pow(dim, t)), "hybrid_advantage_check");
  if (static_cast<std::size_t>(d.rows()) != static_cast<std::size_t>(std::pow(dim, t)))
    throw std::invalid_argument("distinguisher must act on the t-fold space");
  HybridReport r;
  r.t = t;
  std::vector<Mat> h;
  for (std::size_t i = 0; i <= t; ++i) h.push_back(hybrid(rho0, rho1, t, i));
  r.overall = tr_real(d, h.front() - h.back());
  r.helstrom_t = 0.5 * trace_norm(h.front() - h.back());
  r.helstrom_1 = 0.5 * trace_norm(rho0 - rho1);
  double sum = 0.0, mismatch = 0.0;
  const std::vector<std::size_t> dims(t, dim);
  for (std::size_t i = 1; i <= t; ++i) {
    const double step = tr_real(d, h[i - 1] - h[i]);
    r.steps.push_back(step);
    sum += step;
    r.sum_abs_steps += std::abs(step);
    // H_{i-1} and H_i differ at position t - i; fill the others and keep that one.
    const std::size_t pos = t - i;
    Mat fill = Mat::Identity(1, 1);
    for (std::size_t k = 0; k < t; ++k)
      fill = kron(fill, k == pos ? Mat(Mat::Identity(dim, dim)) : (k < pos ? rho0 : rho1));
    const Mat e = partial_trace_raw(d * fill, dims, {pos});
    const double adv = tr_real(e, rho0 - rho1);
    r.single_copy.push_back(adv);
    r.best_single = std::max(r.best_single, std::abs(adv));
    mismatch = std::max(mismatch, std::abs(adv - step));
  }
  r.telescoping_residual = std::abs(sum - r.overall);

  Rng rng(seed);
  const Mat sigma = random_density_matrix(rng, dim);
  r.mix_weight = mix_weight;
  const Mat m0 = mix_weight * sigma + (1.0 - mix_weight) * rho0;
  const Mat m1 = mix_weight * sigma + (1.0 - mix_weight) * rho1;
  r.mixed_advantage = 0.5 * trace_norm(m0 - m1);
  r.mixed_bound = (1.0 - mix_weight) * r.helstrom_1;
  const auto ch = random_channel(rng, dim, dim, 2);
  r.channel_distance = 0.5 * trace_norm(ch.apply(rho0) - ch.apply(rho1));

  const double tt = static_cast<double>(t);
  r.lines = {
      {"telescoping", r.telescoping_residual, 0.0, true},
      {"sum_of_steps", std::abs(r.overall), r.sum_abs_steps, true},
      {"single_copy_matches_step", mismatch, 0.0, true},
      {"single_copy_share", r.overall / tt, r.best_single, true},
      {"single_copy_helstrom", r.best_single, r.helstrom_1, true},
      {"overall_helstrom", std::abs(r.overall), r.helstrom_t, true},
      {"convex_combination", r.mixed_advantage, r.mixed_bound, true},
      {"data_processing", r.channel_distance, r.helstrom_1, true},
  };
  r.pass = std::all_of(r.lines.begin(), r.lines.end(), [](const AuditLine& l) { return l.pass(1e-9); });
  return r;
}

json HybridReport::to_json() const {
  return {{"t", t},
          {"overall", overall},
          {"helstrom_t", helstrom_t},
          {"steps", steps},
          {"sum_abs_steps", sum_abs_steps},
          {"telescoping_residual", telescoping_residual},
          {"single_copy", single_copy},
          {"best_single", best_single},
          {"helstrom_1", helstrom_1},
          {"mix_weight", mix_weight},
          {"mixed_advantage", mixed_advantage},
          {"mixed_bound", mixed_bound},
          {"channel_distance", channel_distance},
          {"lines", audit_lines_to_json(lines, 1e-9)},
          {"pass", pass}};
}

}  // namespace qlab
