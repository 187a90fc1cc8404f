#include <doctest.h>

#include "qlab/core.hpp"

#include <cmath>

using namespace qlab;

namespace {

Mat diag2(double a, double b) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

DensityState plus_state() {
  Vec v(2);
  v << 1.0, 1.0;
  return pure_state(v, reg("A", 2));
}

DensityState bell() {
  Vec v = Vec::Zero(4);
  v(0) = 1.0;
  v(3) = 1.0;
  return pure_state(v, qubits("A", 1).concat(qubits("B", 1)));
}

}  // namespace

TEST_CASE("layout indexing and validation") {
  RegisterLayout l({{"X", 3, true}, {"Q", 2, false}, {"B", 4, false}});
  CHECK(l.total_dim() == 24);
  CHECK(l.index_of("B") == 2);
  CHECK(l.stride(0) == 8);
  CHECK(l.dim_of({"X", "B"}) == 12);
  CHECK_THROWS_AS(RegisterLayout({{"A", 2, false}, {"A", 2, false}}), StateError);
  CHECK_THROWS_AS(l.index_of("Z"), StateError);
}

TEST_CASE("density state rejects invalid matrices") {
  Mat m = diag2(0.5, 0.5);
  m(0, 1) = 0.1;
  CHECK_THROWS_AS(DensityState(m, reg("A", 2)), StateError);
  CHECK_THROWS_AS(DensityState(diag2(0.6, 0.5), reg("A", 2)), StateError);
  CHECK_THROWS_AS(DensityState(diag2(1.2, -0.2), reg("A", 2)), StateError);
  Mat c = diag2(0.5, 0.5);
  c(0, 1) = c(1, 0) = 0.3;
  CHECK_NOTHROW(DensityState(c, reg("A", 2)));
  CHECK_THROWS_AS(DensityState(c, reg("A", 2, true)), StateError);
}

TEST_CASE("dimension cap") {
  RegisterLayout big({{"A", 8192, false}});
  CHECK_THROWS_AS(maximally_mixed(big), DimensionCapError);
}

TEST_CASE("make_cq_state examples") {
  auto zero = basis_state(reg("Q", 2), 0);
  auto one = basis_state(reg("Q", 2), 1);
  auto s = make_cq_state({0.5, 0.5}, {zero, zero});
  Mat expect = Mat::Zero(4, 4);
  expect(0, 0) = expect(2, 2) = 0.5;
  CHECK((s.matrix() - expect).norm() < 1e-15);
  CHECK(s.layout().subsystems()[0].classical);

  Rng rng(3);
  auto r0 = random_state(rng, reg("Q", 2));
  auto deg = make_cq_state({1.0, 0.0}, {r0, one});
  CHECK((deg.matrix() - kron(diag2(1, 0), r0.matrix())).norm() < 1e-15);

  auto corr = make_cq_state({0.5, 0.5}, {zero, one});
  Mat hand = Mat::Zero(4, 4);
  hand(0, 0) = 0.5;
  hand(3, 3) = 0.5;
  CHECK((corr.matrix() - hand).norm() < 1e-15);

  CHECK_THROWS_AS(make_cq_state({1.2, -0.2}, {zero, one}), StateError);
  CHECK_THROWS_AS(make_cq_state({0.5, 0.5}, {zero, maximally_mixed(reg("Q", 3))}), StateError);
}

TEST_CASE("tensor examples") {
  auto half = maximally_mixed(reg("A", 2));
  auto t = tensor(half, maximally_mixed(reg("B", 2)));
  CHECK((t.matrix() - Mat::Identity(4, 4) / 4.0).norm() < 1e-15);
  auto unit = maximally_mixed(reg("U", 1));
  CHECK((tensor(half, unit).matrix() - half.matrix()).norm() < 1e-15);
  auto zp = tensor(basis_state(reg("A", 2), 0), rename(plus_state(), {"B"}));
  Vec v = Vec::Zero(4);
  v(0) = v(1) = std::sqrt(0.5);
  CHECK((zp.matrix() - v * v.adjoint()).norm() < 1e-14);
}

TEST_CASE("partial trace examples") {
  Rng rng(5);
  auto a = random_state(rng, reg("A", 3));
  auto b = random_state(rng, reg("B", 2));
  auto ab = tensor(a, b);
  CHECK((partial_trace(ab, {"A"}).matrix() - a.matrix()).norm() < 1e-12);
  CHECK((partial_trace(ab, {"B"}).matrix() - b.matrix()).norm() < 1e-12);
  CHECK((partial_trace(bell(), {"A"}).matrix() - Mat::Identity(2, 2) / 2.0).norm() < 1e-15);
  CHECK((partial_trace(bell(), {"B"}).matrix() - Mat::Identity(2, 2) / 2.0).norm() < 1e-15);

  std::vector<double> p = {0.2, 0.3, 0.5};
  std::vector<DensityState> rs;
  Mat mix = Mat::Zero(2, 2);
  for (int x = 0; x < 3; ++x) {
    rs.push_back(random_state(rng, reg("Q", 2)));
    mix += p[x] * rs.back().matrix();
  }
  auto cq = make_cq_state(p, rs);
  CHECK((partial_trace(cq, {"Q"}).matrix() - mix).norm() < 1e-14);
  CHECK_THROWS_AS(partial_trace(cq, {"Z"}), StateError);
}

TEST_CASE("reorder swaps Kronecker factors") {
  Rng rng(6);
  auto a = random_state(rng, reg("A", 2));
  auto b = random_state(rng, reg("B", 3));
  auto c = random_state(rng, reg("C", 2));
  auto abc = tensor(tensor(a, b), c);
  auto cab = reorder(abc, {"C", "A", "B"});
  CHECK((cab.matrix() - kron(kron(c.matrix(), a.matrix()), b.matrix())).norm() < 1e-13);
  CHECK(cab.layout().names() == std::vector<std::string>{"C", "A", "B"});
}

TEST_CASE("partial trace inverts tensor on random factors") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t da = 1 + rng() % 4, db = 1 + rng() % 4;
    auto a = random_state(rng, reg("A", da));
    auto b = random_state(rng, reg("B", db));
    CHECK((partial_trace(tensor(a, b), {"A"}).matrix() - a.matrix()).norm() < tol().recon);
  }
}

TEST_CASE("spectral decomposition") {
  auto s = spectral_decompose(DensityState(diag2(0.25, 0.75), reg("A", 2)));
  CHECK(s.eigenvalues(0) == doctest::Approx(0.75));
  CHECK(s.eigenvalues(1) == doctest::Approx(0.25));
  CHECK(std::abs(s.eigenvectors(1, 0)) == doctest::Approx(1.0));

  auto p = spectral_decompose(plus_state());
  CHECK(p.eigenvalues(0) == doctest::Approx(1.0));
  CHECK(std::abs(p.eigenvectors(0, 0)) == doctest::Approx(std::sqrt(0.5)));

  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto r = random_state(rng, reg("A", 4));
    auto d = spectral_decompose(r);
    Mat rec = d.eigenvectors * d.eigenvalues.cast<cplx>().asDiagonal() * d.eigenvectors.adjoint();
    CHECK((rec - r.matrix()).norm() < 1e-10);
    for (int k = 0; k + 1 < 4; ++k) CHECK(d.eigenvalues(k) >= d.eigenvalues(k + 1));
  }
}

TEST_CASE("small negative eigenvalues are clipped") {
  Mat m = diag2(1.0 + 5e-10, -5e-10);
  auto d = spectral_decompose(DensityState(m, reg("A", 2)));
  CHECK(d.eigenvalues(1) == 0.0);
  CHECK(d.eigenvalues.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("distance examples") {
  auto half = maximally_mixed(reg("A", 2));
  CHECK(trace_distance(half, half) == doctest::Approx(0.0));
  CHECK(fidelity(half, half) == doctest::Approx(1.0));
  CHECK(bures(half, half) == doctest::Approx(0.0).epsilon(1e-7));
  auto z = basis_state(reg("A", 2), 0), o = basis_state(reg("A", 2), 1);
  CHECK(trace_distance(z, o) == doctest::Approx(2.0));
  CHECK(fidelity(z, o) == doctest::Approx(0.0));
  CHECK(bures(z, o) == doctest::Approx(1.0));
  // |3/4-1/2| + |1/4-1/2|
  CHECK(trace_distance(DensityState(diag2(0.75, 0.25), reg("A", 2)), half) == doctest::Approx(0.5));
  CHECK_THROWS_AS(trace_distance(half, maximally_mixed(reg("B", 2))), StateError);
}

TEST_CASE("fidelity of commuting states is the classical overlap") {
  // sum_i sqrt(p_i q_i) for p=(0.9,0.1), q=(0.5,0.5), computed by hand
  const double f = std::sqrt(0.45) + std::sqrt(0.05);
  CHECK(fidelity(DensityState(diag2(0.9, 0.1), reg("A", 2)), maximally_mixed(reg("A", 2))) ==
        doctest::Approx(f));
}

TEST_CASE("uhlmann extension") {
  Rng rng(13);
  auto ra = random_state(rng, reg("A", 2));
  auto rb = random_state(rng, reg("B", 2));
  auto rab = tensor(ra, rb);
  auto same = uhlmann_extension(rab, ra);
  CHECK((same.matrix() - rab.matrix()).norm() < 1e-7);

  auto sa = random_state(rng, reg("A", 2));
  auto th = uhlmann_extension(rab, sa);
  CHECK(bures(th, rab) == doctest::Approx(bures(sa, ra)).epsilon(1e-7));

  for (int trial = 0; trial < 30; ++trial) {
    auto r = random_state(rng, qubits("A", 1).concat(qubits("B", 1)));
    auto s = random_state(rng, qubits("A", 1));
    auto t = uhlmann_extension(r, s);
    CHECK((partial_trace(t, {"A"}).matrix() - s.matrix()).norm() < 1e-9);
    CHECK(bures(t, r) == doctest::Approx(bures(s, partial_trace(r, {"A"}))).epsilon(1e-7));
  }
}

TEST_CASE("uhlmann extension with rank-deficient marginals") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto r = random_state(rng, reg("A", 3).concat(reg("B", 2)), 1);
    auto s = random_state(rng, reg("A", 3), 2);
    auto t = uhlmann_extension(r, s);
    CHECK((partial_trace(t, {"A"}).matrix() - s.matrix()).norm() < 1e-9);
    CHECK(bures(t, r) == doctest::Approx(bures(s, partial_trace(r, {"A"}))).epsilon(1e-6));
  }
}

namespace {

DensityState random_chain(Rng& rng, std::size_t da, std::size_t dx, std::size_t db) {
  auto p = random_distribution(rng, dx);
  Mat m = Mat::Zero(da * dx * db, da * dx * db);
  for (std::size_t x = 0; x < dx; ++x) {
    Mat px = Mat::Zero(dx, dx);
    px(x, x) = p[x];
    m += kron(kron(random_density_matrix(rng, da), px), random_density_matrix(rng, db));
  }
  return DensityState(m, reg("A", da).concat(reg("X", dx, true)).concat(reg("B", db)));
}

}  // namespace

TEST_CASE("markov recovery reproduces the chain") {
  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = random_chain(rng, 2, 3, 2);
    CqMarkovChain ch(s, {"A"}, "X", {"B"});
    auto rec = markov_recovery(ch).apply(partial_trace(s, {"A", "X"}));
    CHECK((rec.matrix() - s.matrix()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("markov recovery for deterministic and independent B") {
  Rng rng(23);
  // B = X
  Mat m = Mat::Zero(8, 8);
  auto ra = random_density_matrix(rng, 2);
  for (int x = 0; x < 2; ++x) {
    Mat xb = Mat::Zero(4, 4);
    xb(3 * x, 3 * x) = 0.5;
    m += kron(ra, xb);
  }
  auto s = DensityState(m, reg("A", 2).concat(reg("X", 2, true)).concat(reg("B", 2)));
  auto rmap = markov_recovery(CqMarkovChain(s, {"A"}, "X", {"B"}));
  CHECK(std::abs(rmap.b_given_x[0](0, 0) - 1.0) < 1e-14);
  CHECK(std::abs(rmap.b_given_x[1](1, 1) - 1.0) < 1e-14);

  auto rb = random_state(rng, reg("B", 2));
  auto ind = tensor(random_cq_state(rng, 2, reg("A", 2), "X"), rb);
  auto imap = markov_recovery(CqMarkovChain(ind, {"A"}, "X", {"B"}));
  for (const auto& b : imap.b_given_x) CHECK((b - rb.matrix()).norm() < 1e-12);
}

TEST_CASE("markov chain rejects correlated states") {
  Rng rng(29);
  auto s = random_state(rng, reg("A", 2).concat(reg("B", 2)));
  auto cq = make_cq_state({0.5, 0.5}, {s, s});
  CHECK_THROWS_AS(CqMarkovChain(reorder(cq, {"A", "X", "B"}), {"A"}, "X", {"B"}), StateError);
}

TEST_CASE("json round trip is exact") {
  Rng rng(31);
  auto s = random_cq_state(rng, 2, reg("Q", 3));
  auto back = state_from_json(json::parse(state_to_json(s).dump()));
  CHECK(back.layout() == s.layout());
  CHECK((back.matrix() - s.matrix()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("haar isometry is an isometry") {
  Rng rng(37);
  Mat v = haar_isometry(rng, 6, 3);
  CHECK((v.adjoint() * v - Mat::Identity(3, 3)).norm() < 1e-12);
  Mat u = haar_unitary(rng, 4);
  CHECK((u * u.adjoint() - Mat::Identity(4, 4)).norm() < 1e-12);
}

TEST_CASE("derived seeds differ per stream") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(9, 4, 2) == derive_seed(9, 4, 2));
}
