#include "qlab/entropy.hpp"
#include "qlab/extractors.hpp"

#include <doctest.h>

#include <cmath>

using namespace qlab;

namespace {

// GF(2) rank of an l x n matrix built straight from T_ij = seed[i - j + n - 1].
int toeplitz_rank(const BitVec& seed, std::size_t n, std::size_t l) {
  std::vector<std::vector<int>> a(l, std::vector<int>(n));
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i][j] = seed[i + n - 1 - j];
  int rank = 0;
  for (std::size_t c = 0; c < n && static_cast<std::size_t>(rank) < l; ++c) {
    std::size_t piv = rank;
    while (piv < l && a[piv][c] == 0) ++piv;
    if (piv == l) continue;
    std::swap(a[piv], a[rank]);
    for (std::size_t r = 0; r < l; ++r)
      if (r != static_cast<std::size_t>(rank) && a[r][c])
        for (std::size_t k = 0; k < n; ++k) a[r][k] ^= a[rank][k];
    ++rank;
  }
  return rank;
}

DensityState uniform_bits(std::size_t n) {
  return maximally_mixed(reg("X", std::size_t{1} << n, true));
}

}  // namespace

TEST_CASE("bit vectors round trip with the first bit most significant") {
  CHECK(bits_of(6, 3) == BitVec{1, 1, 0});
  CHECK(value_of({1, 0, 1, 1}) == 11);
  for (std::uint64_t v = 0; v < 32; ++v) CHECK(value_of(bits_of(v, 5)) == v);
}

TEST_CASE("Toeplitz hash matches a hand computation") {
  // Seed 1011 gives rows (1 0 1) and (1 1 0).
  ToeplitzHash h(3, 2, {1, 0, 1, 1});
  CHECK(hash_eval(h, {1, 1, 1}) == BitVec{0, 0});
  CHECK(hash_eval(h, {1, 0, 0}) == BitVec{1, 1});
  CHECK(hash_eval(h, {0, 1, 1}) == BitVec{1, 1});
  CHECK(hash_eval(h, {0, 0, 1}) == BitVec{1, 0});
  CHECK(hash_eval(h, {0, 0, 0}) == BitVec{0, 0});
  CHECK_THROWS_AS(ToeplitzHash(3, 2, {1, 0}), std::invalid_argument);
}

TEST_CASE("Toeplitz family is 2-universal") {
  for (std::size_t n = 1; n <= 6; ++n)
    for (std::size_t l = 1; l <= std::min<std::size_t>(n, 3); ++l) {
      INFO("n " << n << " l " << l);
      CHECK(toeplitz_collision_probability(n, l) == doctest::Approx(std::exp2(-double(l))).epsilon(1e-12));
    }
}

TEST_CASE("singular seeds leave uniform input non-uniform by 2(1 - 2^(rank - l'))") {
  for (std::size_t n : {2, 3, 4}) {
    auto s = uniform_bits(n);
    for (std::size_t l = 1; l <= n; ++l) {
      const std::size_t sl = ToeplitzHash::seed_len(n, l);
      for (std::uint64_t v = 0; v < (std::uint64_t{1} << sl); ++v) {
        ToeplitzHash h(n, l, bits_of(v, sl));
        const int k = toeplitz_rank(h.seed, n, l);
        CHECK(extractor_distance_for_seed(s, h) == doctest::Approx(2.0 * (1.0 - std::exp2(k - double(l)))));
      }
    }
  }
}

TEST_CASE("leftover-hash bound holds on random cq-states") {
  Rng rng(11);
  int audited = 0;
  for (int t = 0; t < 30; ++t) {
    auto s = random_cq_state(rng, 8, reg("Q", 2 + t % 2), "X", 1 + t % 2);
    auto r0 = leftover_hash_audit(s, 0);
    CHECK(r0.measured_distance == doctest::Approx(0.0));
    for (std::size_t lp = 1; lp <= r0.l_out; ++lp) {
      auto r = leftover_hash_audit(s, lp);
      INFO("l " << r.l << " l' " << lp << " d " << r.measured_distance << " bound " << r.bound);
      CHECK(r.exhaustive);
      CHECK(r.pass);
      ++audited;
    }
    CHECK_THROWS_AS(leftover_hash_audit(s, r0.l_out + 1), std::invalid_argument);
  }
  CHECK(audited > 10);
}

TEST_CASE("sampled seeds are used above the exhaustive size") {
  Rng rng(12);
  auto s = random_cq_state(rng, 16, reg("Q", 2));
  auto r = leftover_hash_audit(s, 1, 2000, 5);
  CHECK_FALSE(r.exhaustive);
  CHECK(r.seeds_used == 2000);
  CHECK(r.pass);
  auto again = leftover_hash_audit(s, 1, 2000, 5);
  CHECK(again.measured_distance == r.measured_distance);
}

TEST_CASE("low-entropy source is within a factor 4 of the bound") {
  // X uniform on two of eight values: l = 1, one output bit. A collision happens with
  // probability 1/2 and costs distance 1, so the mean is 1/2 against a bound of 1.
  auto s = diagonal_state({0.5, 0.5, 0, 0, 0, 0, 0, 0}, reg("X", 8, true));
  auto r = leftover_hash_audit(s, 1);
  CHECK(r.l == doctest::Approx(1.0));
  CHECK(r.bound == doctest::Approx(1.0));
  CHECK(r.measured_distance == doctest::Approx(0.5));
  CHECK(r.measured_distance >= r.bound / 4.0);
  CHECK(r.pass);
}

TEST_CASE("dense extractor state matches the per-seed distance") {
  Rng rng(13);
  auto s = random_cq_state(rng, 8, reg("Q", 2), "X", 1);
  auto r = leftover_hash_audit(s, 1);
  REQUIRE(r.l_out >= 1);
  auto out = apply_classical_extractor(s, 1);
  CHECK((partial_trace(out, {"X", "Q"}).matrix() - s.matrix()).norm() <= tol().recon);
  auto hzq = partial_trace(out, {"H", "Z", "Q"});
  const std::size_t dh = out.layout().dim_of({"H"});
  Mat ideal = kron(Mat::Identity(dh * 2, dh * 2) / double(dh * 2), partial_trace(s, {"Q"}).matrix());
  CHECK(trace_norm(hzq.matrix() - ideal) == doctest::Approx(r.measured_distance).epsilon(1e-9));
}

TEST_CASE("seed law") {
  CHECK(seed_law(4, 3.0, 2.0) == 2);
  CHECK(seed_law(4, 3.0, 0.0) == 0);
  CHECK(seed_law(4, 3.5, 1.0) == 1);
  CHECK(seed_law(4, 1.0, 0.5) == 3);
  CHECK(seed_law(2, 3.0, 0.0) == 0);
}

TEST_CASE("extractor output is a state and trivial seed keeps distance 1 on flat input") {
  Rng rng(14);
  auto psi = maximally_mixed(qubits("R", 3));
  for (auto smp : {UnitarySampler::haar, UnitarySampler::two_design}) {
    auto out = apply_quantum_extractor(psi, {3, 0, 4, smp}, rng);
    CHECK(out.matrix().trace().real() == doctest::Approx(1.0));
    CHECK(min_eigenvalue(out.matrix()) >= -tol().psd);
    // A unitary image of a rank-8 flat state on 16 dimensions.
    CHECK(trace_norm(out.matrix() - Mat::Identity(16, 16) / 16.0) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("distance to uniform falls as the seed grows") {
  auto psi = maximally_mixed(qubits("R", 3));
  for (auto smp : {UnitarySampler::haar, UnitarySampler::two_design}) {
    auto rep = quantum_extractor_seed_sweep(psi, 4, 0.0, {0, 1, 2, 3}, 12, 0.0, 21, smp);
    REQUIRE(rep.rows.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) CHECK(rep.rows[k].seed == k);
    // Clifford images of a flat stabilizer input are either exactly uniform or far from
    // it, so only the Haar sweep is smooth enough to be monotone sample by sample.
    if (smp == UnitarySampler::haar) CHECK(rep.monotone);
    for (std::size_t k = 1; k < 4; ++k) CHECK(rep.rows[k].mean_distance < 0.5 * rep.rows[0].mean_distance);
    for (const auto& r : rep.rows) CHECK(r.rank_slack >= -tol().num);
    CHECK(rep.to_json()["rows"].size() == 4);
  }
}

TEST_CASE("Clifford circuits average to the maximally mixed output") {
  Rng rng(15);
  Rng rs(16);
  auto psi = DensityState(random_density_matrix(rs, 4, 1), qubits("R", 2));
  Mat mean = Mat::Zero(4, 4);
  const int n = 400;
  for (int t = 0; t < n; ++t) mean += apply_quantum_extractor(psi, {2, 1, 2, UnitarySampler::two_design}, rng).matrix();
  mean /= double(n);
  CHECK(trace_norm(mean - Mat::Identity(4, 4) / 4.0) < 0.1);
}

TEST_CASE("rank law fails for a pure input once qubits are traced") {
  // Pure psi on 2 qubits, o = 2, s = 1: two traced qubits make the output full rank,
  // so S0(out) = 2 > S0(psi) + s = 1.
  Vec v = Vec::Zero(4);
  v(0) = 1.0;
  auto psi = pure_state(v, qubits("R", 2));
  auto r = quantum_extractor_rank_audit(psi, {2, 1, 2, UnitarySampler::haar}, 0.0, 5, 3);
  CHECK(r.input_s0 == doctest::Approx(0.0));
  CHECK(r.max_output_s0 == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(r.min_slack == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK_FALSE(r.pass);
}

TEST_CASE("rank law holds for flat input with the seed from the seed law") {
  auto psi = maximally_mixed(qubits("R", 3));
  for (std::size_t s = 0; s <= 3; ++s) {
    auto r = quantum_extractor_rank_audit(psi, {3, s, 4, UnitarySampler::haar}, 0.0, 4, 7);
    CHECK(r.pass);
    CHECK(r.to_json()["pass"] == true);
  }
}

TEST_CASE("invalid extractor specifications throw") {
  Rng rng(1);
  auto psi = maximally_mixed(qubits("R", 2));
  CHECK_THROWS(apply_quantum_extractor(psi, {2, 0, 4, UnitarySampler::haar}, rng));
  CHECK_THROWS(apply_quantum_extractor(psi, {3, 0, 2, UnitarySampler::haar}, rng));
  auto q = maximally_mixed(reg("X", 3));
  CHECK_THROWS(leftover_hash_audit(q, 0));
}
