#include "qlab/efi2owsg.hpp"

#include <doctest.h>

#include <cmath>

using namespace qlab;

namespace {

EfiPair qubit_pair(double a, double b, double angle) {
  Mat r0 = Mat::Zero(2, 2), r1 = Mat::Zero(2, 2);
  r0(0, 0) = a, r0(1, 1) = 1 - a;
  Mat u(2, 2);
  u << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  r1(0, 0) = b, r1(1, 1) = 1 - b;
  r1 = u * r1 * u.adjoint();
  return make_pair(DensityState(r0, qubits("R", 1)), DensityState(r1, qubits("R", 1)));
}

EfiPair basis_pair() { return qubit_pair(1.0, 0.0, 0.0); }

}  // namespace

TEST_CASE("Helstrom advantage equals half the trace distance") {
  // Diagonal pair: half the l1 distance of the eigenvalue lists.
  auto d = qubit_pair(0.9, 0.3, 0.0);
  CHECK(helstrom(d).advantage() == doctest::Approx(0.6));
  Rng rng(71);
  for (int k = 0; k < 20; ++k) {
    const std::size_t dim = 2 + k % 3;
    auto p = make_pair(DensityState(random_density_matrix(rng, dim), reg("R", dim)),
                       DensityState(random_density_matrix(rng, dim), reg("R", dim)));
    auto h = helstrom(p);
    CHECK(h.advantage() == doctest::Approx(p.half_l1()).epsilon(1e-9));
    CHECK((h.pi0 * h.pi0 - h.pi0).norm() <= tol().recon);
    CHECK(h.p00 + h.p10 == doctest::Approx(1.0));
  }
}

TEST_CASE("no random projector beats the Helstrom measurement") {
  Rng rng(72);
  auto p = make_pair(DensityState(random_density_matrix(rng, 4), reg("R", 4)),
                     DensityState(random_density_matrix(rng, 4), reg("R", 4)));
  const double best = helstrom(p).advantage();
  const Mat diff = p.rho0.matrix() - p.rho1.matrix();
  for (int k = 0; k < 500; ++k) {
    const std::size_t rank = k % 5;
    Mat u = haar_unitary(rng, 4);
    Mat proj = Mat::Zero(4, 4);
    for (std::size_t c = 0; c < rank; ++c) proj += u.col(c) * u.col(c).adjoint();
    CHECK((proj * diff).trace().real() <= best + tol().num);
  }
}

TEST_CASE("amplification increases the distance and reaches the target") {
  auto p = qubit_pair(0.8, 0.35, 0.4);
  double prev = p.half_l1();
  for (int r = 2; r <= 6; ++r) {
    const double d = amplify(p, r).half_l1();
    CHECK(d >= prev - tol().num);
    prev = d;
  }
  int r = 0;
  auto a = amplify_to(qubit_pair(0.97, 0.05, 0.1), 0.99, 8, &r);
  CHECK(a.half_l1() >= 0.99);
  CHECK(r > 1);
  CHECK(amplify(qubit_pair(0.97, 0.05, 0.1), r - 1).half_l1() < 0.99);
  CHECK_THROWS(amplify_to(p, 0.999999, 2));
}

TEST_CASE("product OWSG acceptance matches the dense instance") {
  auto p = qubit_pair(0.85, 0.2, 0.7);
  auto o = build_owsg_from_efi(p, 3);
  auto inst = o.to_instance();
  for (std::uint64_t g = 0; g < 8; ++g)
    for (std::uint64_t x = 0; x < 8; ++x)
      CHECK(o.accept_probability(g, x) == doctest::Approx(inst.accept_probability(g, x)).epsilon(1e-9));
  CHECK(o.correctness() == doctest::Approx(inst.correctness()).epsilon(1e-9));
  CHECK(o.correctness() >= o.union_bound() - tol().num);
}

TEST_CASE("wrong keys are accepted at most at the cross rate per differing position") {
  int r = 0;
  auto a = amplify_to(qubit_pair(0.95, 0.1, 0.2), 0.99, 8, &r);
  auto o = build_owsg_from_efi(a, 4);
  CHECK(o.h.error() <= 0.01 + tol().num);
  CHECK(o.correctness() >= 1.0 - 4 * 0.01);
  const double cross = std::max(o.h.p01, o.h.p10);
  for (std::uint64_t g = 0; g < 16; ++g)
    for (std::uint64_t x = 0; x < 16; ++x) {
      const int diff = __builtin_popcountll(g ^ x);
      CHECK(o.accept_probability(g, x) <= std::pow(cross, diff) + 1e-12);
    }
}

TEST_CASE("reduction with a perfect inverter distinguishes perfectly") {
  auto p = basis_pair();
  auto inv = helstrom_majority_inverter(helstrom(p));
  for (std::size_t i = 0; i < 4; ++i) {
    auto r = inverter_to_distinguisher(inv, p, 4, 1, i, 500, 73);
    CHECK(r.inverter_success == 1.0);
    CHECK(r.success == 1.0);
    CHECK(r.advantage == 1.0);
  }
}

TEST_CASE("reduction with a partially successful inverter") {
  // Perfect with probability 0.2, uniform otherwise, n = 4:
  // delta = 0.2 + 0.8/16 = 0.25; at the last position the prefix matches with 0.2 + 0.8/8 = 0.3,
  // the conditional rate is 0.25/0.3 and Pr[A' = B] = 0.25 + 0.7/2 = 0.6.
  auto p = basis_pair();
  auto inv = mixed_inverter(helstrom_majority_inverter(helstrom(p)), 0.2, 4);
  CHECK(find_advice(inv, p, 4, 1, 4000, 74) == 3);
  auto r = inverter_to_distinguisher(inv, p, 4, 1, 3, 10000, 75);
  CHECK(r.inverter_success == doctest::Approx(0.25).epsilon(0.08));
  CHECK(r.prefix_match == doctest::Approx(0.3).epsilon(0.06));
  CHECK(r.conditional == doctest::Approx(0.25 / 0.3).epsilon(0.04));
  CHECK(r.three_quarters);
  CHECK(std::abs(r.success - 0.6) <= 3 * r.std_error);
  CHECK(std::abs(r.success - r.composed) <= 3 * r.std_error);
  CHECK(r.success >= r.bound - 3 * r.std_error);
  // The first position has no prefix, so the conditional rate is 0.2 + 0.8/2.
  auto r0 = inverter_to_distinguisher(inv, p, 4, 1, 0, 10000, 76);
  CHECK(r0.prefix_match == 1.0);
  CHECK(r0.conditional == doctest::Approx(0.6).epsilon(0.04));
  CHECK_FALSE(r0.three_quarters);
}

TEST_CASE("random inverter gives no advantage") {
  auto p = qubit_pair(0.9, 0.2, 0.1);
  auto r = inverter_to_distinguisher(random_inverter(4), p, 4, 3, 2, 10000, 77);
  CHECK(std::abs(r.success - 0.5) <= 3 * r.std_error);
  CHECK(r.to_json()["trials"] == 10000);
}

TEST_CASE("pairs round-trip through JSON") {
  auto p = qubit_pair(0.7, 0.4, 0.5);
  auto q = pair_from_json(pair_to_json(p));
  CHECK((q.rho1.matrix() - p.rho1.matrix()).norm() <= tol().recon);
  CHECK_THROWS_AS(pair_from_json(json{{"rho0", 1}}), std::invalid_argument);
}
