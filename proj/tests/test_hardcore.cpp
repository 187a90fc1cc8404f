#include "qlab/hardcore.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace qlab;

namespace {

// Window parities straight from the bit lists.
BitVec windows_oracle(const BitVec& x, const BitVec& r, std::size_t out_len) {
  BitVec g;
  for (std::size_t i = 0; i < out_len; ++i) {
    int s = 0;
    for (std::size_t j = 0; j < x.size(); ++j) s ^= x[j] & r[i + j];
    g.push_back(static_cast<std::uint8_t>(s));
  }
  return g;
}

}  // namespace

TEST_CASE("hardcore function on fixed inputs") {
  HardcoreSpec sp{4, 4};
  CHECK(hardcore_eval(sp, {0, 0, 0, 0}, {1, 1, 0, 1, 0, 1, 1, 1}) == BitVec{0, 0, 0, 0});
  // x = 1011, r = 01101110: windows 0110, 1101, 1011, 0111.
  const BitVec x{1, 0, 1, 1}, r{0, 1, 1, 0, 1, 1, 1, 0};
  CHECK(hardcore_eval(sp, x, r) == BitVec{1, 0, 1, 0});
  CHECK(windows_oracle(x, r, 4) == BitVec{1, 0, 1, 0});
  // A unit window selects one bit of x.
  HardcoreSpec one{4, 1};
  for (std::size_t j = 0; j < 4; ++j) {
    BitVec e(8, 0);
    e[j] = 1;
    CHECK(hardcore_eval(one, x, e)[0] == x[j]);
  }
  CHECK_THROWS_AS(hardcore_eval(sp, x, {1, 0}), std::invalid_argument);
  CHECK_THROWS_AS((HardcoreSpec{4, 5}.check()), std::invalid_argument);
}

TEST_CASE("hardcore function matches the window oracle and is linear in x") {
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + t % 7;
    HardcoreSpec sp{n, 1 + t % n};
    BitVec x = bits_of(rng() & ((1ULL << n) - 1), n), y = bits_of(rng() & ((1ULL << n) - 1), n);
    BitVec r = bits_of(rng() & ((1ULL << (2 * n)) - 1), 2 * n);
    BitVec xy(n);
    for (std::size_t j = 0; j < n; ++j) xy[j] = x[j] ^ y[j];
    auto gx = hardcore_eval(sp, x, r), gy = hardcore_eval(sp, y, r), gxy = hardcore_eval(sp, xy, r);
    CHECK(gx == windows_oracle(x, r, sp.out_len));
    for (std::size_t i = 0; i < sp.out_len; ++i) CHECK(gxy[i] == (gx[i] ^ gy[i]));
  }
}

TEST_CASE("output bits are unbiased up to the zero window and pairwise independent otherwise") {
  for (std::size_t n = 2; n <= 5; ++n) {
    HardcoreSpec sp{n, 2};
    auto law = hardcore_output_law(sp);
    // Joint law of the first two bits from the windows alone.
    const std::uint64_t mask = (1ULL << n) - 1;
    std::vector<double> oracle(4, 0.0);
    const double w = std::exp2(-2.0 * n);
    for (std::uint64_t r = 0; r < (1ULL << (2 * n)); ++r) {
      const std::uint64_t w0 = (r >> n) & mask, w1 = (r >> (n - 1)) & mask;
      if (w0 == 0 && w1 == 0) {
        oracle[0] += w;
      } else if (w0 == 0) {
        oracle[0] += w / 2, oracle[1] += w / 2;
      } else if (w1 == 0) {
        oracle[0] += w / 2, oracle[2] += w / 2;
      } else if (w0 == w1) {
        oracle[0] += w / 2, oracle[3] += w / 2;
      } else {
        for (auto& o : oracle) o += w / 4;
      }
    }
    for (std::size_t k = 0; k < 4; ++k) CHECK(law[k] == doctest::Approx(oracle[k]).epsilon(1e-12));
    // Each bit is 1 with probability (1 - 2^-n) / 2.
    CHECK(law[2] + law[3] == doctest::Approx(0.5 * (1.0 - std::exp2(-double(n)))));
    CHECK(law[1] + law[3] == doctest::Approx(0.5 * (1.0 - std::exp2(-double(n)))));
  }
}

TEST_CASE("noiseless predictor is decoded to a single candidate") {
  auto rep = gl_trials(8, 0.0, 0.5, 100, 41);
  CHECK(rep.successes == 100);
  CHECK(rep.mean_list_size == doctest::Approx(1.0));
}

TEST_CASE("ten percent noise is decoded in at least 90 of 100 trials") {
  auto rep = gl_trials(8, 0.1, 0.4, 100, 42);
  CHECK(rep.successes >= 90);
  CHECK(rep.to_json()["successes"] == rep.successes);
}

TEST_CASE("coin-flip predictor stays near the guessing baseline") {
  int hits = 0;
  for (int t = 0; t < 100; ++t) {
    const std::uint64_t x = derive_seed(43, t) & 0xFF;
    auto res = gl_decode(coin_predictor(), 8, 0.4, derive_seed(44, t));
    hits += std::count(res.candidates.begin(), res.candidates.end(), x) > 0;
  }
  CHECK(hits <= 3);
}

TEST_CASE("decoding success grows with the predictor advantage") {
  // Same seeds for every rate: the flipped queries are nested, so success is monotone.
  int prev = -1;
  for (double flip : {0.5, 0.47, 0.45, 0.42, 0.4, 0.3, 0.1, 0.0}) {
    auto rep = gl_trials(8, flip, 0.1, 60, 45);
    INFO("flip " << flip << " successes " << rep.successes);
    CHECK(rep.successes >= prev);
    prev = rep.successes;
  }
  CHECK(prev == 60);
}

TEST_CASE("a measured quantum predictor feeds the same decoder") {
  const std::uint64_t x = 0b101101;
  auto prep = [x](std::uint64_t r) {
    // |<x,r>> rotated slightly so the measurement errs with probability sin^2(0.3).
    const double th = __builtin_parityll(x & r) ? 3.14159265358979 / 2 - 0.3 : 0.3;
    Vec v(2);
    v << std::cos(th), std::sin(th);
    return pure_state(v, qubits("P", 1));
  };
  Mat p1 = Mat::Zero(2, 2);
  p1(1, 1) = 1.0;
  auto res = gl_decode(measured_predictor(prep, p1), 6, 0.35, 7);
  CHECK(std::count(res.candidates.begin(), res.candidates.end(), x) == 1);
}
