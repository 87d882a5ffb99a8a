#include "test_support.hpp"

using namespace testsupport;

TEST_CASE("hermitian_sqrt of scalars and identity", "[numlin]") {
  CHECK(maxdiff(hermitian_sqrt(scalar(0.36)), scalar(0.6)) < 1e-14);
  CHECK(maxdiff(hermitian_sqrt(identity(3)), identity(3)) < 1e-14);
}

TEST_CASE("hermitian_sqrt reproduces the defect of the three-dimensional lifting", "[numlin]") {
  const Sec3 s;
  const CMatrix ep = s.second.E[0];
  const CMatrix root = hermitian_sqrt(identity(3) - ep.adjoint() * ep);
  CHECK(maxdiff(root, mat(3, 3, {0.5, 0, 0, 0, 1, 0, 0, 0, 1})) < 1e-12);
}

TEST_CASE("hermitian_sqrt rejects non-Hermitian and indefinite input", "[numlin]") {
  CHECK(thrown_kind([] { hermitian_sqrt(mat(2, 2, {1, 1, 0, 1})); }) == ErrorKind::NotHermitian);
  CHECK(thrown_kind([] { hermitian_sqrt(mat(2, 2, {1, 0, 0, -0.5})); }) == ErrorKind::NotPSD);
  CHECK(thrown_kind([] { hermitian_sqrt(CMatrix::Zero(2, 3)); }) == ErrorKind::NotSquare);
}

TEST_CASE("hermitian_sqrt squares back on random PSD input", "[numlin]") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const CMatrix g = random_gaussian(rng, 4, 3);
    const CMatrix m = g * g.adjoint();
    const CMatrix r = hermitian_sqrt(m);
    CHECK(maxdiff(r * r, m) < 1e-10 * std::max(1.0, op_norm(m)));
    CHECK(maxdiff(r, r.adjoint()) < 1e-12);
  }
}

TEST_CASE("pinv on diagonal, unitary and tall full-rank matrices", "[numlin]") {
  CHECK(maxdiff(pinv(mat(2, 2, {2, 0, 0, 0})), mat(2, 2, {0.5, 0, 0, 0})) < 1e-14);
  Rng rng(3);
  const CMatrix u = random_unitary(rng, 3);
  CHECK(maxdiff(pinv(u), u.adjoint()) < 1e-12);
  const CMatrix m = random_gaussian(rng, 3, 2);
  const CMatrix p = pinv(m);
  CHECK(maxdiff(p * m, identity(2)) < 1e-10);
  // Penrose equations
  CHECK(maxdiff(m * p * m, m) < 1e-10);
  CHECK(maxdiff(p * m * p, p) < 1e-10);
  CHECK(maxdiff(CMatrix((m * p).adjoint()), m * p) < 1e-10);
}

TEST_CASE("range_subspace on coordinate projections and defect operators", "[numlin]") {
  const Subspace s = range_subspace(mat(2, 2, {1, 0, 0, 0}));
  REQUIRE(s.rank() == 1);
  CHECK(maxdiff(s.projector(), mat(2, 2, {1, 0, 0, 0})) < 1e-14);

  const Subspace t = range_subspace(mat(3, 3, {0, 0, 0, 0, 1, 0, 0, 0, 1}));
  REQUIRE(t.rank() == 2);
  CHECK(maxdiff(t.projector(), mat(3, 3, {0, 0, 0, 0, 1, 0, 0, 0, 1})) < 1e-14);

  const CMatrix ghat = mat(1, 2, {kS3, kS3});
  const CMatrix d2 = identity(1) - ghat * ghat.adjoint();
  CHECK(range_subspace(d2).rank() == 1);
  CHECK(std::abs(d2(0, 0).real() - 1.0 / 3.0) < 1e-14);
  CHECK(std::abs(hermitian_sqrt(d2)(0, 0).real() - kS3) < 1e-14);
}

TEST_CASE("range_subspace bases are orthonormal with normalized phases", "[numlin]") {
  Rng rng(5);
  const CMatrix g = random_gaussian(rng, 5, 2);
  const Subspace s = range_subspace(g * g.adjoint());
  REQUIRE(s.rank() == 2);
  CHECK(maxdiff(s.basis.adjoint() * s.basis, identity(2)) < 1e-12);
  for (Index c = 0; c < s.rank(); ++c) {
    Index first = 0;
    while (std::abs(s.basis(first, c)) <= 1e-10) ++first;
    CHECK(std::abs(s.basis(first, c).imag()) < 1e-14);
    CHECK(s.basis(first, c).real() > 0);
  }
}

TEST_CASE("is_unitary residuals", "[numlin]") {
  CHECK(is_unitary(identity(2)) == 0.0);
  const CMatrix p = mat(3, 3, {1, 0, 0, 0, kS2, -kS2, 0, kS2, kS2});
  CHECK(is_unitary(p) < 1e-12);
  CHECK(is_unitary(mat(2, 2, {1, 1, 0, 1})) >= 1.0);
}

TEST_CASE("subspace helpers", "[numlin]") {
  const Subspace a = column_span(mat(3, 1, {1, 1, 0}));
  const Subspace c = orthogonal_complement(a);
  CHECK(c.rank() == 2);
  CHECK(op_norm(a.basis.adjoint() * c.basis) < 1e-12);
  CHECK(containment_residual(a, Subspace::full(3)) < 1e-12);
  CHECK(containment_residual(Subspace::full(3), a) > 0.5);
  const Subspace n = null_space(mat(2, 3, {1, 0, 0, 0, 1, 0}), 1e-12);
  REQUIRE(n.rank() == 1);
  CHECK(std::abs(std::abs(n.basis(2, 0)) - 1.0) < 1e-12);
  const Subspace ds = direct_sum(a, Subspace::zero(2));
  CHECK(ds.ambient_dim == 5);
  CHECK(ds.rank() == 1);
}

TEST_CASE("SubOperator ambient form, transfer and composition", "[numlin]") {
  const Subspace s = column_span(mat(2, 1, {1, 1}));
  const SubOperator x(s, Subspace::full(1), scalar(2.0));
  CHECK(maxdiff(x.ambient(), mat(1, 2, {2 * kS2, 2 * kS2})) < 1e-14);
  const SubOperator y = SubOperator::from_ambient(Subspace::full(1), s, mat(2, 1, {1, 1}));
  CHECK(std::abs(compose(x, y).matrix(0, 0) - cplx(2.0 * std::sqrt(2.0), 0.0)) < 1e-12);
  CHECK(thrown_kind([&] { compose(y, y); }) == ErrorKind::DimMismatch);
  CHECK_THROWS_AS(SubOperator(s, s, identity(2)), Error);
}

TEST_CASE("dense helpers", "[numlin]") {
  CHECK(maxdiff(block_diag(scalar(1), scalar(2)), mat(2, 2, {1, 0, 0, 2})) < 1e-15);
  CHECK(maxdiff(hstack({scalar(1), scalar(2)}), mat(1, 2, {1, 2})) < 1e-15);
  CHECK(maxdiff(vstack({scalar(1), scalar(2)}), mat(2, 1, {1, 2})) < 1e-15);
  CHECK(maxdiff(kron(identity(2), scalar(3)), mat(2, 2, {3, 0, 0, 3})) < 1e-15);
  CMatrix bad = scalar(1);
  bad(0, 0) = cplx(std::nan(""), 0);
  CHECK_FALSE(all_finite(bad));
}
