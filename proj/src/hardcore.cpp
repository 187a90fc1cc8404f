#include "qlab/hardcore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qlab {

void HardcoreSpec::check() const {
  if (n == 0 || n > 31) throw std::invalid_argument("hardcore input length must be in [1, 31]");
  if (out_len == 0 || out_len > n) throw std::invalid_argument("hardcore output length must be in [1, n]");
}

std::uint64_t hardcore_index(const HardcoreSpec& spec, std::uint64_t x, std::uint64_t r) {
  const std::uint64_t mask = (std::uint64_t{1} << spec.n) - 1;
  std::uint64_t g = 0;
  for (std::size_t i = 0; i < spec.out_len; ++i) {
    const std::uint64_t w = (r >> (spec.n - i)) & mask;  // bits i .. i+n-1 of r
    g = (g << 1) | static_cast<std::uint64_t>(__builtin_parityll(x & w));
  }
  return g;
}

BitVec hardcore_eval(const HardcoreSpec& spec, const BitVec& x, const BitVec& r) {
  spec.check();
  if (x.size() != spec.n || r.size() != spec.r_len()) throw std::invalid_argument("hardcore input length mismatch");
  return bits_of(hardcore_index(spec, value_of(x), value_of(r)), spec.out_len);
}

std::vector<double> hardcore_output_law(const HardcoreSpec& spec) {
  spec.check();
  if (spec.n > 8) throw std::invalid_argument("exact hardcore law limited to n <= 8");
  const std::uint64_t nx = std::uint64_t{1} << spec.n, nr = std::uint64_t{1} << spec.r_len();
  std::vector<double> law(std::size_t{1} << spec.out_len, 0.0);
  const double w = 1.0 / static_cast<double>(nx * nr);
  for (std::uint64_t x = 0; x < nx; ++x)
    for (std::uint64_t r = 0; r < nr; ++r) law[hardcore_index(spec, x, r)] += w;
  return law;
}

Predictor noisy_parity_predictor(std::uint64_t x, std::size_t n, double flip_rate, std::uint64_t noise_seed) {
  const std::uint64_t mask = n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  return [=](std::uint64_t r, Rng&) {
    const int bit = __builtin_parityll(x & r & mask);
    const double u = static_cast<double>(derive_seed(noise_seed, r) >> 11) * 0x1.0p-53;
    return u < flip_rate ? 1 - bit : bit;
  };
}

Predictor coin_predictor() {
  return [](std::uint64_t, Rng& rng) { return static_cast<int>(rng() & 1U); };
}

Predictor measured_predictor(std::function<DensityState(std::uint64_t)> prepare, Mat povm1) {
  return [prepare = std::move(prepare), povm1 = std::move(povm1)](std::uint64_t r, Rng& rng) {
    const double p = std::clamp((povm1 * prepare(r).matrix()).trace().real(), 0.0, 1.0);
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p ? 1 : 0;
  };
}

namespace {

void fwht(std::vector<double>& a) {
  for (std::size_t h = 1; h < a.size(); h <<= 1)
    for (std::size_t i = 0; i < a.size(); i += h << 1)
      for (std::size_t j = i; j < i + h; ++j) {
        const double u = a[j], v = a[j + h];
        a[j] = u + v;
        a[j + h] = u - v;
      }
}

}  // namespace

GlResult gl_decode(const Predictor& pred, std::size_t n, double advantage_estimate, std::uint64_t rng_seed) {
  if (n == 0 || n > 62) throw std::invalid_argument("decoder input length must be in [1, 62]");
  const double eps = std::clamp(advantage_estimate, 0.01, 0.5);
  GlResult res;
  res.k = std::min<std::size_t>(20, static_cast<std::size_t>(std::ceil(std::log2(2.0 * n / (eps * eps) + 1.0))));
  Rng rng(rng_seed);
  const std::uint64_t xmask = (std::uint64_t{1} << n) - 1;
  std::vector<std::uint64_t> seeds(res.k);
  for (auto& s : seeds) s = rng() & xmask;
  const std::size_t ns = std::size_t{1} << res.k;
  std::vector<std::uint64_t> rj(ns, 0);
  for (std::size_t j = 1; j < ns; ++j) rj[j] = rj[j & (j - 1)] ^ seeds[__builtin_ctzll(j)];

  std::vector<std::uint64_t> cand(ns, 0);
  std::vector<double> f(ns);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t ei = std::uint64_t{1} << (n - 1 - i);
    f[0] = 0.0;
    for (std::size_t j = 1; j < ns; ++j) {
      Rng sub(derive_seed(rng_seed, i + 1, j));
      f[j] = pred(rj[j] ^ ei, sub) ? -1.0 : 1.0;
    }
    res.queries += ns - 1;
    fwht(f);
    // f[b] = sum_J (-1)^{<b,J> + P(r_J + e_i)}; nonnegative means the vote for x_i is 0.
    for (std::size_t b = 0; b < ns; ++b)
      if (f[b] < 0.0) cand[b] |= ei;
  }
  res.raw_candidates = ns;
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  const std::size_t m = static_cast<std::size_t>(std::ceil(32.0 / (eps * eps)));
  std::vector<std::uint64_t> pts(m);
  std::vector<int> ans(m);
  for (std::size_t t = 0; t < m; ++t) {
    pts[t] = rng() & xmask;
    Rng sub(derive_seed(rng_seed, 0, t));
    ans[t] = pred(pts[t], sub);
  }
  res.queries += m;
  const double need = (0.5 + eps / 2.0) * static_cast<double>(m);
  for (auto c : cand) {
    std::size_t agree = 0;
    for (std::size_t t = 0; t < m; ++t) agree += (__builtin_parityll(c & pts[t]) == ans[t]);
    if (static_cast<double>(agree) >= need) res.candidates.push_back(c);
  }
  return res;
}

json GlTrialReport::to_json() const {
  return {{"n", n},           {"flip_rate", flip_rate}, {"advantage_estimate", advantage_estimate},
          {"trials", trials}, {"successes", successes}, {"mean_list_size", mean_list_size}};
}

GlTrialReport gl_trials(std::size_t n, double flip_rate, double advantage_estimate, int trials, std::uint64_t seed) {
  GlTrialReport rep{n, flip_rate, advantage_estimate, trials, 0, 0.0};
  const std::uint64_t xmask = (std::uint64_t{1} << n) - 1;
  double list = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto tt = static_cast<std::uint64_t>(t);
    const std::uint64_t x = derive_seed(seed, tt, 0) & xmask;
    auto pred = noisy_parity_predictor(x, n, flip_rate, derive_seed(seed, tt, 1));
    auto res = gl_decode(pred, n, advantage_estimate, derive_seed(seed, tt, 2));
    if (std::find(res.candidates.begin(), res.candidates.end(), x) != res.candidates.end()) ++rep.successes;
    list += static_cast<double>(res.candidates.size());
  }
  rep.mean_list_size = trials > 0 ? list / trials : 0.0;
  return rep;
}

}  // namespace qlab
