#include <doctest.h>

#include "qlab/entropy.hpp"

#include <cmath>

using namespace qlab;

namespace {

DensityState diag(std::vector<double> p, const std::string& name = "A") {
  return diagonal_state(p, reg(name, p.size()));
}

DensityState bell() {
  Vec v = Vec::Zero(4);
  v(0) = v(3) = 1.0;
  return pure_state(v, reg("A", 2).concat(reg("B", 2)));
}

}  // namespace

TEST_CASE("von Neumann examples") {
  CHECK(von_neumann(basis_state(reg("A", 4), 2)) == doctest::Approx(0.0));
  CHECK(von_neumann(maximally_mixed(qubits("A", 3))) == doctest::Approx(3.0));
  // -(3/4)log(3/4) - (1/4)log(1/4) = 0.811278...
  CHECK(von_neumann(diag({0.75, 0.25})) == doctest::Approx(0.811278124459).epsilon(1e-10));
}

TEST_CASE("Renyi examples") {
  for (double a : {0.0, 0.5, 1.0, 2.0, 3.5, kInf}) CHECK(renyi(maximally_mixed(reg("A", 2)), a) == doctest::Approx(1.0));
  // -log(9/16 + 1/16)
  CHECK(renyi(diag({0.75, 0.25}), 2.0) == doctest::Approx(0.678071905113).epsilon(1e-10));
  // log(4/3)
  CHECK(renyi(diag({0.75, 0.25}), kInf) == doctest::Approx(0.415037499279).epsilon(1e-10));
  CHECK(renyi(diag({0.75, 0.25, 0.0}), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("Renyi order one is the limit") {
  auto s = diag({0.5, 0.3, 0.2});
  CHECK(renyi(s, 1.0 + 1e-7) == doctest::Approx(von_neumann(s)).epsilon(1e-5));
  CHECK(renyi(s, 1.0 - 1e-7) == doctest::Approx(von_neumann(s)).epsilon(1e-5));
}

TEST_CASE("sandwiched divergence examples") {
  Rng rng(1);
  auto r = random_state(rng, reg("A", 3));
  for (double a : {0.5, 1.0, 2.0, kInf}) CHECK(sandwiched_divergence(r, r, a).value == doctest::Approx(0.0).epsilon(1e-9));
  auto half = maximally_mixed(reg("A", 2));
  CHECK(sandwiched_divergence(diag({1.0, 0.0}), half, kInf).value == doctest::Approx(1.0));
  // (1/(2-1)) log(2 (9/16 + 1/16)) = log(5/4)
  CHECK(sandwiched_divergence(diag({0.75, 0.25}), half, 2.0).value == doctest::Approx(0.321928094887).epsilon(1e-10));
}

TEST_CASE("sandwiched divergence flags support violations") {
  auto r = diag({0.5, 0.5});
  auto s = diag({1.0, 0.0});
  for (double a : {1.0, 2.0, kInf}) {
    auto d = sandwiched_divergence(r, s, a);
    CHECK(d.support_violation);
    CHECK(std::isinf(d.value));
  }
  auto low = sandwiched_divergence(r, s, 0.5);
  CHECK_FALSE(low.support_violation);
  // (1/(1/2-1)) log Tr[(s^{1/2} r s^{1/2})^{1/2}] = -2 log sqrt(1/2) = 1
  CHECK(low.value == doctest::Approx(1.0));
}

TEST_CASE("sandwiched divergence of commuting states is the classical Renyi divergence") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_distribution(rng, 4);
    auto q = random_distribution(rng, 4);
    for (double a : {0.5, 0.8, 1.5, 2.0, 3.0}) {
      double s = 0.0;
      for (int i = 0; i < 4; ++i) s += std::pow(p[i], a) * std::pow(q[i], 1.0 - a);
      const double expect = std::log2(s) / (a - 1.0);
      CHECK(sandwiched_divergence(diag(p), diag(q), a).value == doctest::Approx(expect).epsilon(1e-9));
    }
    double mx = 0.0, kl = 0.0;
    for (int i = 0; i < 4; ++i) {
      mx = std::max(mx, p[i] / q[i]);
      kl += p[i] * std::log2(p[i] / q[i]);
    }
    CHECK(sandwiched_divergence(diag(p), diag(q), kInf).value == doctest::Approx(std::log2(mx)).epsilon(1e-9));
    CHECK(sandwiched_divergence(diag(p), diag(q), 1.0).value == doctest::Approx(kl).epsilon(1e-9));
  }
}

TEST_CASE("divergence at infinity is the smallest valid exponent") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto r = random_state(rng, reg("A", 3));
    auto s = random_state(rng, reg("A", 3));
    const double l = sandwiched_divergence(r, s, kInf).value;
    CHECK(min_eigenvalue(std::exp2(l + 1e-9) * s.matrix() - r.matrix()) >= -1e-12);
    CHECK(min_eigenvalue(std::exp2(l - 1e-3) * s.matrix() - r.matrix()) < 0.0);
  }
}

TEST_CASE("conditional entropy of product states") {
  Rng rng(4);
  auto ra = random_state(rng, reg("A", 2));
  auto rb = random_state(rng, reg("B", 2));
  auto ab = tensor(ra, rb);
  for (double a : {0.5, 1.0, 1.5, 2.0, kInf}) {
    auto res = conditional_renyi(ab, {"A"}, {"B"}, a);
    CHECK(res.value == doctest::Approx(renyi(ra, a)).epsilon(1e-8));
    CHECK(brute_conditional_renyi(ab, {"A"}, {"B"}, a) <= res.value + 1e-9);
    CHECK(brute_conditional_renyi(ab, {"A"}, {"B"}, a) == doctest::Approx(res.value).epsilon(1e-6));
  }
}

TEST_CASE("conditional entropy of a perfectly correlated classical pair is zero") {
  auto xx = diagonal_state({0.5, 0.0, 0.0, 0.5}, reg("X", 2, true).concat(reg("Y", 2, true)));
  for (double a : {0.5, 1.0, 2.0, 3.0, kInf}) {
    CHECK(conditional_renyi(xx, {"X"}, {"Y"}, a).value == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(brute_conditional_renyi(xx, {"X"}, {"Y"}, a) == doctest::Approx(0.0).epsilon(1e-6));
  }
}

TEST_CASE("conditional min-entropy of a maximally entangled pair is minus one") {
  auto res = conditional_renyi(bell(), {"A"}, {"B"}, kInf);
  CHECK(res.value == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(brute_conditional_renyi(bell(), {"A"}, {"B"}, kInf) == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(conditional_renyi(bell(), {"A"}, {"B"}, 2.0).value == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(conditional_renyi(bell(), {"A"}, {"B"}, 1.0).value == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("variational conditional entropy agrees with the Bloch grid oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    auto s = random_state(rng, reg("A", 2).concat(reg("B", 2)));
    for (double a : {0.5, 0.75, 2.0, 3.0, kInf}) {
      const double v = conditional_renyi(s, {"A"}, {"B"}, a).value;
      const double b = brute_conditional_renyi(s, {"A"}, {"B"}, a);
      CHECK(v >= b - tol().opt);
      CHECK(v == doctest::Approx(b).epsilon(1e-6));
    }
  }
}

TEST_CASE("variational conditional entropy agrees with the restart oracle") {
  Rng rng(6);
  BruteOptions opts;
  opts.restarts = 8;
  for (std::size_t db : {3u, 4u}) {
    auto s = random_state(rng, reg("A", 2).concat(reg("B", db)));
    for (double a : {0.5, 2.0, kInf}) {
      const double v = conditional_renyi(s, {"A"}, {"B"}, a).value;
      const double b = brute_conditional_renyi(s, {"A"}, {"B"}, a, opts);
      CHECK(v >= b - tol().opt);
      // The max-eigenvalue objective is not smooth, which slows the simplex search.
      CHECK(v == doctest::Approx(b).epsilon(std::isinf(a) ? 1e-3 : 1e-5));
    }
  }
}

TEST_CASE("classical label expression matches direct conditioning") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    auto s = random_cq_state(rng, 3, reg("A", 2).concat(reg("B", 2)));
    for (double a : {0.5, 1.0, 2.0, kInf}) {
      const double direct = conditional_renyi(s, {"A"}, {"B", "X"}, a).value;
      CHECK(conditional_renyi_classical(s, "X", {"A"}, {"B"}, a) == doctest::Approx(direct).epsilon(1e-6));
    }
  }
}

TEST_CASE("classical label expression edge cases") {
  Rng rng(8);
  auto r = random_state(rng, reg("A", 2).concat(reg("B", 2)));
  auto one = make_cq_state({1.0}, {r});
  for (double a : {0.5, 2.0, kInf})
    CHECK(conditional_renyi_classical(one, "X", {"A"}, {"B"}, a) ==
          doctest::Approx(conditional_renyi(r, {"A"}, {"B"}, a).value).epsilon(1e-8));
  auto p0 = pure_state(random_pure_vector(rng, 3), reg("A", 3));
  auto p1 = pure_state(random_pure_vector(rng, 3), reg("A", 3));
  auto pc = make_cq_state({0.4, 0.6}, {p0, p1});
  for (double a : {0.5, 1.0, 2.0, kInf})
    CHECK(conditional_renyi_classical(pc, "X", {"A"}, {}, a) == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("conditional entropy with a trivial conditioning register") {
  auto s = diag({0.5, 0.3, 0.2});
  for (double a : {0.5, 1.0, 2.0, kInf})
    CHECK(conditional_renyi(s, {"A"}, {}, a).value == doctest::Approx(renyi(s, a)).epsilon(1e-9));
}

TEST_CASE("fine Bloch grid oracle at step 0.01") {
  Rng rng(9);
  auto s = random_state(rng, reg("A", 2).concat(reg("B", 2)));
  BruteOptions opts;
  opts.grid_step = 0.01;
  const double b = brute_conditional_renyi(s, {"A"}, {"B"}, 2.0, opts);
  CHECK(conditional_renyi(s, {"A"}, {"B"}, 2.0).value == doctest::Approx(b).epsilon(1e-7));
}

TEST_CASE("smoothing examples") {
  std::vector<double> p = {0.5, 0.25, 0.125, 0.125};
  CHECK(smooth_s0(weighted(p), 0.0) == doctest::Approx(2.0));
  CHECK(smooth_sinf(weighted(p), 0.0) == doctest::Approx(1.0));
  const double d = 0.05;
  std::vector<double> t = {0.5 - d, 0.5 - d, d, d};
  CHECK(smooth_s0(weighted(t), 2 * d) == doctest::Approx(1.0));
  CHECK(smooth_s0(weighted(t), 2 * d - 1e-3) == doctest::Approx(std::log2(3.0)));
  for (int n : {2, 4, 8}) {
    std::vector<double> flat(n, 1.0 / n);
    for (double eps : {0.01, 0.1, 0.3}) {
      const double gain = smooth_sinf(weighted(flat), eps) - std::log2(n);
      CHECK(gain >= 0.0);
      CHECK(gain <= std::log2(1.0 / (1.0 - eps)) + 1e-12);
    }
  }
}

TEST_CASE("smoothing matches exhaustive search") {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 7;
    auto p = random_distribution(rng, n);
    const double eps = std::uniform_real_distribution<double>(0.0, 0.6)(rng);
    CHECK(smooth_s0(weighted(p), eps) == doctest::Approx(smooth_s0_exhaustive(p, eps)));
    CHECK(smooth_sinf(weighted(p), eps) == doctest::Approx(smooth_sinf_exhaustive(p, eps)).epsilon(1e-10));
  }
}

TEST_CASE("weighted tensor power reproduces the explicit spectrum") {
  std::vector<double> p = {0.6, 0.3, 0.1};
  auto w = weighted_tensor_power(p, 3);
  CHECK(w.total_mass() == doctest::Approx(1.0));
  std::vector<double> explicit_p;
  for (double a : p)
    for (double b : p)
      for (double c : p) explicit_p.push_back(a * b * c);
  for (double eps : {0.0, 0.05, 0.2}) {
    CHECK(smooth_s0(w, eps) == doctest::Approx(smooth_s0(weighted(explicit_p), eps)));
    CHECK(smooth_sinf(w, eps) == doctest::Approx(smooth_sinf(weighted(explicit_p), eps)));
  }
}

TEST_CASE("random channel preserves trace and positivity") {
  Rng rng(11);
  auto ch = random_channel(rng, 3, 2, 4);
  auto r = random_state(rng, reg("A", 3));
  Mat out = ch.apply(r.matrix());
  CHECK(out.trace().real() == doctest::Approx(1.0));
  CHECK(min_eigenvalue(out) >= -1e-12);
}
