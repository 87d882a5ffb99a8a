#include "test_support.hpp"

using namespace testsupport;

namespace {

SubOperator defect_gamma(const RowContraction& c, const RowContraction& a, const CMatrix& g) {
  return SubOperator(star_defect(a).space, defect(c).space, g);
}

Lifting zero_coupling(const RowContraction& c, const RowContraction& a) {
  return make_lifting(c, a, defect_gamma(c, a, CMatrix::Zero(defect(c).space.rank(), star_defect(a).space.rank())));
}

ConverseInput scalar_converse(const CMatrix& lambda, const CMatrix& u) {
  ConverseInput ci;
  ci.C = scalar_tuple(0.5);
  ci.A = scalar_tuple(0.0);
  ci.A_prime = scalar_tuple(0.0);
  ci.lambda = lambda;
  ci.U = u;
  ci.f = 1;
  ci.f_star = 1;
  return ci;
}

}  // namespace

TEST_CASE("characteristic function of the zero scalar is z", "[charfact]") {
  const CharFn f = char_popescu(scalar_tuple(0.0), 4);
  CHECK(std::abs(f.op.coeff(Word{})(0, 0)) < 1e-15);
  CHECK(std::abs(f.op.coeff(Word{1})(0, 0) - cplx(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(f.op.coeff(Word{1, 1})(0, 0)) < 1e-15);
  CHECK(f.cross_check_residual < 1e-12);
}

TEST_CASE("isometries have an empty characteristic-function domain", "[charfact]") {
  const CharFn f = char_popescu(scalar_tuple(1.0), 3);
  CHECK(f.op.dom.rank() == 0);
  CHECK(realized_norm(f.op) == 0.0);
}

TEST_CASE("characteristic function of the scalar 1/2 against its Neumann series", "[charfact]") {
  const int N = 5;
  const CharFn f = char_popescu(scalar_tuple(0.5), N);
  // theta = -a + (1 - a^2) z / (1 - a z), expanded coefficient by coefficient
  const double a = 0.5;
  std::vector<double> want{-a};
  for (int k = 1; k <= N; ++k) want.push_back((1 - a * a) * std::pow(a, k - 1));
  CHECK(want[3] == 3.0 / 16.0);
  Word w;
  for (int k = 0; k <= N; ++k) {
    CHECK(std::abs(f.op.coeff(w)(0, 0) - cplx(want[static_cast<std::size_t>(k)], 0.0)) < 1e-14);
    w = w + Word{1};
  }
}

TEST_CASE("random characteristic functions are contractive and multi-analytic", "[charfact]") {
  Rng rng(12);
  for (int t = 0; t < 6; ++t) {
    const RowContraction a = random_row_contraction(rng, 1 + t % 2, 2);
    const CharFn f = char_popescu(a, 3);
    CHECK(f.cross_check_residual < 1e-10);
    CHECK(realized_norm(f.op) <= 1.0 + 5e-10);
    CHECK(intertwining_residual(f.op) == 0.0);
  }
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RandomIterated ri = random_iterated(seed, 2, 2);
    const CharFn f = char_lifting(ri.first, 3);
    CHECK(f.cross_check_residual < 1e-10);
    CHECK(f.consistency_residual < 1e-9);
    CHECK(realized_norm(f.op) <= 1.0 + 5e-10);
    CHECK(intertwining_residual(f.op) == 0.0);
  }
}

TEST_CASE("characteristic functions of the two one-step liftings", "[charfact]") {
  const Sec4 s;
  const CharFn f = char_lifting(s.first, 3);
  CHECK(maxdiff(f.op.ambient_coeff(Word{}), mat(1, 2, {kS2, 0})) < 1e-12);
  CHECK(maxdiff(f.op.ambient_coeff(Word{1}), mat(1, 2, {0, kS2})) < 1e-12);
  CHECK(maxdiff(f.op.ambient_coeff(Word{1, 1}), mat(1, 2, {0, 0})) < 1e-12);
  const CharFn g = char_lifting(s.second, 3);
  CHECK(maxdiff(g.op.ambient_coeff(Word{}), mat(2, 3, {0, 0, 0, 0, 1, 0})) < 1e-12);
  CHECK(maxdiff(g.op.ambient_coeff(Word{1}), mat(2, 3, {0, 0, 1, 0, 0, 0})) < 1e-12);
  CHECK(maxdiff(g.op.ambient_coeff(Word{1, 1}), CMatrix::Zero(2, 3)) < 1e-12);
}

TEST_CASE("characteristic function of an uncoupled lifting", "[charfact]") {
  const Lifting l = zero_coupling(scalar_tuple(0.5), scalar_tuple(0.0));
  const CharFn f = char_lifting(l, 3);
  CHECK(maxdiff(f.op.ambient_coeff(Word{}), mat(1, 2, {1, 0})) < 1e-12);
  CHECK(maxdiff(f.op.ambient_coeff(Word{1}), mat(1, 2, {0, 0})) < 1e-12);
  CHECK(maxdiff(f.op.ambient_coeff(Word{1, 1, 1}), mat(1, 2, {0, 0})) < 1e-12);
}

TEST_CASE("lemma residuals", "[charfact]") {
  CHECK(lemma_maji_residual(scalar_tuple(0.0), 4) < 1e-15);
  CHECK(lemma_maji_residual(scalar_tuple(0.5), 6) < 1e-10);
  Rng rng(40);
  for (int t = 0; t < 5; ++t) CHECK(lemma_maji_residual(random_row_contraction(rng, 2, 2), 4) < 1e-8);
}

TEST_CASE("factorization of the three-dimensional example", "[charfact]") {
  const Sec3 s;
  const IteratedLifting it = iterate(s.first, s.second);
  const FactorizationReport r = verify_factorization(it, 3, 1e-10);
  CHECK(r.pass);
  CHECK(r.residual < 1e-10);
  CHECK(r.residual_C < 1e-10);
  CHECK(r.residual_Ahat < 1e-10);
  CHECK_FALSE(r.factors.empty());
  const FactorizationAssembly fa = assemble_factorization(it, 3);
  // rhs equals M_{C,E'} D_{E'} with the symbol [1/sqrt3, z/sqrt3, z/sqrt3]
  CHECK(maxdiff(fa.rhs.ambient_coeff(Word{}), mat(1, 3, {kS3 * 0.5, 0, 0})) < 1e-12);
  CHECK(maxdiff(fa.rhs.ambient_coeff(Word{1}), mat(1, 3, {0, kS3, kS3})) < 1e-12);
}

TEST_CASE("factorization with uncoupled second step and with no couplings", "[charfact]") {
  const Sec3 s;
  const Lifting second = lifting_from_blocks(s.first.E, s.Ap, {mat(1, 2, {0, 0})});
  const FactorizationReport r = verify_factorization(iterate(s.first, second), 4, 1e-10);
  CHECK(r.pass);

  Rng rng(2);
  const RowContraction c = random_row_contraction(rng, 2, 1), a = random_row_contraction(rng, 2, 1),
                       ap = random_row_contraction(rng, 2, 1);
  const Lifting l1 = zero_coupling(c, a);
  const Lifting l2 = zero_coupling(l1.E, ap);
  const FactorizationReport z = verify_factorization(iterate(l1, l2), 4, 1e-10);
  CHECK(z.pass);
  CHECK(iterate(l1, l2).gamma_hat().norm() == 0.0);
}

TEST_CASE("factorization on random scalar-dimension liftings", "[charfact]") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const RandomIterated ri = random_iterated(seed, 1, 1);
    CHECK(verify_factorization(iterate(ri.first, ri.second), 5, 1e-9).residual < 1e-9);
  }
  for (std::uint64_t seed = 100; seed < 108; ++seed) {
    const RandomIterated ri = random_iterated(seed, 2, 2);
    const FactorizationReport r = verify_factorization(iterate(ri.first, ri.second), 4, 1e-8);
    CHECK(r.pass);
  }
}

TEST_CASE("converse reconstructs the three-dimensional example", "[charfact]") {
  const Sec3 s;
  const ConverseResult r = converse_construct(scalar_converse(mat(1, 2, {kS3, kS3}), identity(2)), 3);
  CHECK(r.pass);
  CHECK(r.residual < 1e-10);
  CHECK(maxdiff(r.E_prime.E[0], s.second.E[0]) < 1e-10);
  const CharFn m = char_lifting(r.E_prime, 3);
  CHECK(maxdiff(m.op.ambient_coeff(Word{}), mat(1, 3, {kS3, 0, 0})) < 1e-10);
  CHECK(maxdiff(m.op.ambient_coeff(Word{1}), mat(1, 3, {0, kS3, kS3})) < 1e-10);
}

TEST_CASE("converse with the swap unitary is not purely contractive", "[charfact]") {
  const ConverseInput ci = scalar_converse(mat(1, 2, {0, 0}), mat(2, 2, {0, 1, 1, 0}));
  CHECK(thrown_kind([&] { converse_construct(ci, 3); }) == ErrorKind::NotPurelyContractive);
}

TEST_CASE("converse with zero lambda decouples E' from C", "[charfact]") {
  const double c = 0.5, sn = std::sqrt(3.0) / 2.0;
  const ConverseResult r = converse_construct(scalar_converse(mat(1, 2, {0, 0}), mat(2, 2, {c, -sn, sn, c})), 4);
  CHECK(r.pass);
  CHECK(r.E_prime.B_row().cwiseAbs().maxCoeff() < 1e-14);
  CHECK(std::abs(r.pure_margin - sn) < 1e-12);
}

TEST_CASE("converse input validation", "[charfact]") {
  CHECK(thrown_kind([] { converse_construct(scalar_converse(mat(1, 2, {1, 1}), identity(2)), 2); }) ==
        ErrorKind::NotContraction);
  CHECK(thrown_kind([] { converse_construct(scalar_converse(mat(1, 2, {0, 0}), mat(2, 2, {1, 1, 0, 1})), 2); }) ==
        ErrorKind::NotUnitary);
  CHECK(thrown_kind([] { converse_construct(scalar_converse(mat(1, 1, {0}), identity(2)), 2); }) ==
        ErrorKind::DimMismatch);
}

TEST_CASE("converse on random purely contractive data", "[charfact]") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RandomConverse rc = random_converse(seed, 2, 2);
    const ConverseResult r = converse_construct(rc.input, 3);
    CHECK(r.pass);
    CHECK(r.U1_unitarity < 1e-8);
    CHECK(r.U2_unitarity < 1e-8);
    CHECK(r.decomposition_residual < 1e-8);
  }
}

TEST_CASE("minimal part of the iterated example", "[charfact]") {
  const Sec4 s;
  const MinimalPart mp = minimal_part(s.first, s.second);
  const CMatrix orbit = mat(3, 2, {1, 0, 0, kS2, 0, kS2});
  CHECK(maxdiff(mp.H_tilde.projector(), CMatrix(orbit * orbit.adjoint())) < 1e-12);
  CHECK(maxdiff(mp.E_tilde[0], mat(2, 2, {0, 0, 1, 0})) < 1e-12);
  CHECK(maxdiff(mp.A_tilde[0], mat(1, 1, {0})) < 1e-12);
  CHECK(std::abs(std::abs(mp.tilde.gamma.matrix(0, 0)) - 1.0) < 1e-12);
  CHECK(mp.sigma.isometry_residual < 1e-10);
  CHECK(mp.inputs_minimal);

  const FactorizationReport r = verify_minimal_product(s.first, s.second, 4, 1e-10);
  CHECK(r.pass);
  CHECK(r.minimal);
  CHECK(maxdiff(r.lhs.ambient_coeff(Word{}), mat(1, 2, {0, 0})) < 1e-12);
  CHECK(maxdiff(r.lhs.ambient_coeff(Word{1}), mat(1, 2, {0, 1})) < 1e-12);
}

TEST_CASE("minimal part when the second step adds nothing", "[charfact]") {
  const Sec4 s;
  const Lifting trivial = lifting_from_blocks(s.first.E, RowContraction::zero(1, 0), {CMatrix::Zero(0, 2)});
  const MinimalPart mp = minimal_part(s.first, trivial);
  CHECK(mp.H_tilde.rank() == 2);
  CHECK(maxdiff(mp.E_tilde[0], s.first.E[0]) < 1e-12);
  CHECK(maxdiff(mp.sigma.sigma.ambient(), identity(2)) < 1e-12);
  const FactorizationReport r = verify_minimal_product(s.first, trivial, 4, 1e-10);
  CHECK(r.pass);
  CHECK(coeff_diff(r.lhs, char_lifting(s.first, 4).op, 4) < 1e-12);
}

TEST_CASE("minimal part when the second step is uncoupled", "[charfact]") {
  const Sec4 s;
  const Lifting second = lifting_from_blocks(s.first.E, s.Ap, {mat(1, 2, {0, 0})});
  const MinimalPart mp = minimal_part(s.first, second);
  CHECK(maxdiff(mp.H_tilde.projector(), mat(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 0})) < 1e-12);
  CHECK(verify_minimal_product(s.first, second, 4, 1e-10).pass);
}

TEST_CASE("minimal product on random liftings", "[charfact]") {
  for (std::uint64_t seed = 200; seed < 210; ++seed) {
    const RandomIterated ri = random_iterated(seed, 2, 2);
    const FactorizationReport r = verify_minimal_product(ri.first, ri.second, 4, 1e-8);
    CHECK(r.residual < 1e-8);
    CHECK(r.minimal);
  }
}
