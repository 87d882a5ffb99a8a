#pragma once

#include <string>
#include <vector>

#include "liftchar/lifting.hpp"
#include "liftchar/ncfock.hpp"
#include "liftchar/numlin.hpp"
#include "liftchar/rowcon.hpp"

namespace liftchar {

enum class CharSource { Popescu, Lifting };

/// A characteristic function together with the agreement between its two
/// independent evaluations.
struct CharFn {
  MultiAnalyticOp op;
  CharSource source = CharSource::Popescu;
  int N = 0;
  double cross_check_residual = 0.0;  ///< word formula vs realized closed form
  double consistency_residual = 0.0;  ///< vanishing on ker D plus range leak
};

inline constexpr double kOracleTol = 1e-10;

namespace detail {

/// (A_w)* for every word of the basis, indexed like the basis.
inline std::vector<CMatrix> word_adjoints(const RowContraction& a, const FockBasis& b) {
  std::vector<CMatrix> out(static_cast<std::size_t>(b.size()));
  out[0] = identity(a.dim);
  for (Index i = 1; i < b.size(); ++i) {
    const Word& w = b.word(i);
    out[static_cast<std::size_t>(i)] =
        out[static_cast<std::size_t>(b.index(w.drop_front(1)))] * a[w[0] - 1].adjoint();
  }
  return out;
}

/// Column block e_0 (x) X inside Gamma (x) C^rows.
inline CMatrix vacuum_block(const FockBasis& b, const CMatrix& x) {
  CMatrix v = CMatrix::Zero(b.size() * x.rows(), x.cols());
  v.topRows(x.rows()) = x;
  return v;
}

/// y + T y + T^2 y + ... with T = R_H A_Gamma*, exact on Gamma_N because T
/// raises the Fock degree.
inline CMatrix neumann(const FockBasis& b, const RowContraction& a, const CMatrix& y) {
  const SparseC t = SparseC(right_creation_row(b, a.dim) * ampliate(b, a.row().adjoint()));
  CMatrix z = y;
  for (int k = 0; k < b.N(); ++k) z = y + t * z;
  return z;
}

inline double max_block_diff(const FockBasis& b, const CMatrix& x, const CMatrix& y, Index block_rows) {
  double worst = 0.0;
  for (Index w = 0; w < b.size(); ++w)
    worst = std::max(worst, op_norm(x.middleRows(w * block_rows, block_rows) - y.middleRows(w * block_rows, block_rows)));
  return worst;
}

/// Word-formula ambient blocks of Popescu's function applied to `x_cols`
/// (columns in H^d):  empty word -> -A_row x;  word j b -> D_{*,A} (A_b)* P_j D_A x.
/// Block w of the result is the output at Fock word w.
inline CMatrix popescu_word_blocks(const RowContraction& a, const FockBasis& b, const CMatrix& dA, const CMatrix& dsA,
                                   const std::vector<CMatrix>& adj, const CMatrix& x_cols) {
  const Index n = a.dim;
  CMatrix out = CMatrix::Zero(b.size() * n, x_cols.cols());
  out.topRows(n) = -a.row() * x_cols;
  const CMatrix dx = dA * x_cols;
  for (Index i = 1; i < b.size(); ++i) {
    const Word& w = b.word(i);
    const int j = w[0];
    const Word rest = w.drop_front(1);
    out.middleRows(i * n, n) = dsA * adj[static_cast<std::size_t>(b.index(rest))] * dx.middleRows((j - 1) * n, n);
  }
  return out;
}

/// Realized closed form -A_Gamma + D_{*,A_Gamma}(I - R_H A_Gamma*)^{-1} R_H D_{A_Gamma}
/// applied to e_0 (x) x_cols.
inline CMatrix popescu_realized_blocks(const RowContraction& a, const FockBasis& b, const CMatrix& dA,
                                       const CMatrix& dsA, const CMatrix& x_cols) {
  const CMatrix e0 = vacuum_block(b, x_cols);
  const CMatrix y = right_creation_row(b, a.dim) * (ampliate(b, dA) * e0);
  const CMatrix z = neumann(b, a, y);
  return -(ampliate(b, a.row()) * e0) + ampliate(b, dsA) * z;
}

}  // namespace detail

/// Popescu's characteristic function M_A : Gamma (x) D_A -> Gamma (x) D_{*,A}.
inline CharFn char_popescu(const RowContraction& a, int N, double oracle_tol = kOracleTol) {
  const FockBasis b(a.d, N);
  const DefectData da = defect(a);
  const DefectData dsa = star_defect(a);
  const auto adj = detail::word_adjoints(a, b);
  const CMatrix qa = da.space.basis;
  const CMatrix words = detail::popescu_word_blocks(a, b, da.D, dsa.D, adj, qa);
  const CMatrix real = detail::popescu_realized_blocks(a, b, da.D, dsa.D, qa);
  CharFn f;
  f.source = CharSource::Popescu;
  f.N = N;
  f.cross_check_residual = qa.cols() ? detail::max_block_diff(b, words, real, a.dim) : 0.0;
  if (f.cross_check_residual > oracle_tol)
    throw Error(ErrorKind::OracleMismatch,
                "Popescu function: word formula and Neumann realization differ by " + std::to_string(f.cross_check_residual));
  const CMatrix coords = ampliate(b, CMatrix(dsa.space.basis.adjoint())) * words;
  f.op = extract_coeffs(b, da.space, dsa.space, coords);
  double leak = 0.0;
  for (Index w = 0; w < b.size() && qa.cols(); ++w) {
    const CMatrix blk = words.middleRows(w * a.dim, a.dim);
    leak = std::max(leak, op_norm(blk - dsa.space.projector() * blk));
  }
  f.consistency_residual = leak;
  return f;
}

namespace detail {

struct LiftingPieces {
  DefectData dc, da, dsa, de;
  CMatrix g;      ///< gamma as ambient map H_A -> H_C^d
  CMatrix pi_c;   ///< H_E^d -> H_C^d
  CMatrix pi_a;   ///< H_E^d -> H_A^d
};

inline LiftingPieces lifting_pieces(const Lifting& l) {
  LiftingPieces p;
  p.dc = defect(l.C);
  p.da = defect(l.A);
  p.dsa = star_defect(l.A);
  p.de = defect(l.E);
  p.g = l.gamma.ambient();
  const CMatrix perm = deinterleave(l.d(), l.nC(), l.nA());
  p.pi_c = perm.topRows(l.d() * l.nC());
  p.pi_a = perm.bottomRows(l.d() * l.nA());
  return p;
}

/// Word formula for the composite theta o D_E on the columns `h` of H_E^d.
inline CMatrix lifting_word_blocks(const Lifting& l, const FockBasis& b, const LiftingPieces& p, const CMatrix& h) {
  const Index m = l.d() * l.nC();
  const Index na = l.nA();
  const auto adj = detail::word_adjoints(l.A, b);
  const CMatrix gd = p.g * p.dsa.D;
  const CMatrix bc = l.B_row() * (p.pi_c * h);
  const CMatrix da2 = p.da.D * p.da.D * (p.pi_a * h);
  CMatrix out = CMatrix::Zero(b.size() * m, h.cols());
  out.topRows(m) = p.dc.D * (p.pi_c * h) - gd * bc - p.g * l.A.row() * p.da.D * (p.pi_a * h);
  for (Index i = 1; i < b.size(); ++i) {
    const Word& w = b.word(i);
    CMatrix blk = -gd * adj[static_cast<std::size_t>(i)] * bc;
    if (na > 0) blk += gd * adj[static_cast<std::size_t>(b.index(w.drop_front(1)))] * da2.middleRows((w[0] - 1) * na, na);
    out.middleRows(i * m, m) = blk;
  }
  return out;
}

/// The realized closed forms: on H_C^d,
/// D_C - gamma D_{*,A}(I - R_H A*)^{-1} D_{*,A} gamma* D_C, and on H_A^d,
/// gamma(-A + D_{*,A}(I - R_H A*)^{-1} R_H D_A) D_A.
inline CMatrix lifting_realized_blocks(const Lifting& l, const FockBasis& b, const LiftingPieces& p, const CMatrix& h) {
  const CMatrix xc = vacuum_block(b, p.pi_c * h);
  const CMatrix xa = vacuum_block(b, p.pi_a * h);
  const CMatrix gd = p.g * p.dsa.D;
  const SparseC amp_gd = ampliate(b, gd);
  const CMatrix yc = ampliate(b, CMatrix(p.dsa.D * p.g.adjoint() * p.dc.D)) * xc;
  CMatrix out = ampliate(b, p.dc.D) * xc - amp_gd * detail::neumann(b, l.A, yc);
  if (l.nA() > 0) {
    const CMatrix ya = right_creation_row(b, l.nA()) * (ampliate(b, CMatrix(p.da.D * p.da.D)) * xa);
    out += -(ampliate(b, CMatrix(p.g * l.A.row() * p.da.D)) * xa) + amp_gd * detail::neumann(b, l.A, ya);
  }
  return out;
}

}  // namespace detail

/// Characteristic function M_{C,E} : Gamma (x) D_E -> Gamma (x) D_C of a lifting.
inline CharFn char_lifting(const Lifting& l, int N, double oracle_tol = kOracleTol, double tol = 1e-9) {
  const FockBasis b(l.d(), N);
  const detail::LiftingPieces p = detail::lifting_pieces(l);
  const Index m = l.d() * l.nC();
  const CMatrix h = identity(l.d() * l.E.dim);
  const CMatrix words = detail::lifting_word_blocks(l, b, p, h);
  const CMatrix real = detail::lifting_realized_blocks(l, b, p, h);
  CharFn f;
  f.source = CharSource::Lifting;
  f.N = N;
  f.cross_check_residual = detail::max_block_diff(b, words, real, m);
  if (f.cross_check_residual > oracle_tol)
    throw Error(ErrorKind::OracleMismatch,
                "lifting function: word formula and closed form differ by " + std::to_string(f.cross_check_residual));
  const CMatrix dep = pinv(p.de.D);
  const CMatrix pc = p.dc.space.projector();
  CMatrix coords(b.size() * p.dc.space.rank(), p.de.space.rank());
  double worst = 0.0;
  for (Index w = 0; w < b.size(); ++w) {
    const CMatrix comp = words.middleRows(w * m, m);
    const CMatrix theta = comp * dep;
    worst = std::max(worst, op_norm(theta * p.de.D - comp));
    worst = std::max(worst, op_norm(theta - pc * theta));
    coords.middleRows(w * p.dc.space.rank(), p.dc.space.rank()) = p.dc.space.basis.adjoint() * theta * p.de.space.basis;
  }
  f.consistency_residual = worst;
  if (worst > tol)
    throw Error(ErrorKind::ResidualTooLarge,
                "theta o D_E is inconsistent with D_E (residual " + std::to_string(worst) + ")");
  f.op = extract_coeffs(b, p.de.space, p.dc.space, coords);
  return f;
}

/// Coefficients of the H_A part of the lifting formula with gamma replaced
/// by an arbitrary ambient map g on D_{*,A}; used to check the reduction to
/// Popescu's function (g = identity).
inline CMatrix lifting_a_part_blocks(const RowContraction& a, int N, const CMatrix& g) {
  const FockBasis b(a.d, N);
  const DefectData da = defect(a);
  const DefectData dsa = star_defect(a);
  const auto adj = detail::word_adjoints(a, b);
  const CMatrix h = da.D * da.space.basis;
  const CMatrix blocks = detail::popescu_word_blocks(a, b, da.D, dsa.D, adj, h);
  return ampliate(b, g) * blocks;
}

/// Max coefficient deviation between D_{*,A}(I - R A*)^{-1} D_{*,A} and
/// I + M_A A_Gamma* on Gamma_N (x) D_{*,A}.
inline double lemma_maji_residual(const RowContraction& a, int N) {
  const FockBasis b(a.d, N);
  const DefectData dsa = star_defect(a);
  const Index n = a.dim;
  const CMatrix qs = dsa.space.basis;
  if (qs.cols() == 0) return 0.0;
  const CMatrix lhs = ampliate(b, dsa.D) * detail::neumann(b, a, detail::vacuum_block(b, CMatrix(dsa.D * qs)));
  const CharFn ma = char_popescu(a, N);
  const CMatrix in = ma.op.dom.basis.adjoint() * a.row().adjoint() * qs;
  const CMatrix rhs = detail::vacuum_block(b, qs) +
                      ampliate(b, ma.op.cod.basis) * (realize(ma.op) * detail::vacuum_block(b, in));
  return detail::max_block_diff(b, lhs, rhs, n);
}

struct NamedMatrix {
  std::string name;
  CMatrix matrix;
};

struct FactorizationReport {
  MultiAnalyticOp lhs;
  MultiAnalyticOp rhs;
  double residual = 0.0;
  double residual_C = 0.0;     ///< restriction to Gamma (x) H_C
  double residual_Ahat = 0.0;  ///< restriction to Gamma (x) H_Ahat via its own chain
  double leak = 0.0;
  double unitarity = 0.0;      ///< worst unitarity/isometry defect among the sigma maps and J
  int degree = 0;
  double tolerance = 0.0;
  std::vector<NamedMatrix> factors;
  bool minimal = true;         ///< for the minimal-part theorem: tilde E certified minimal
  bool pass = false;
};

struct FactorizationAssembly {
  MultiAnalyticOp rhs;        ///< full chain, domain Gamma (x) H_{E'}^d
  MultiAnalyticOp rhs_Ahat;   ///< chain acting on Gamma (x) H_Ahat^d
  double leak = 0.0;
  double unitarity = 0.0;
  SigmaMap sigma_Eprime, sigma_Ahat, sigma_star_Ahat;
  JuliaHalmos jh;
  CharFn MA, MAp;
  std::vector<NamedMatrix> factors;
};

namespace detail {

inline MultiAnalyticOp embedding_op(const FockBasis& b, Index ambient_to, const CMatrix& cols) {
  return MultiAnalyticOp::constant(b, SubOperator(Subspace::full(cols.cols()), Subspace::full(ambient_to), cols));
}

inline double sigma_defect(const SigmaMap& s) {
  return std::max(s.isometry_residual, s.coisometry_residual);
}

}  // namespace detail

/// Right-to-left product of the factorization of M_{C,E'} D_{E'} through
/// sigma_{E'}, sigma_Ahat, M_{A'}, the Julia-Halmos matrix of delta, M_A,
/// sigma'_Ahat^{-1} and [D_{*,gamma_hat}, gamma_hat].
inline FactorizationAssembly assemble_factorization(const IteratedLifting& it, int N, double tol = 1e-8) {
  const FockBasis b(it.first.d(), N);
  FactorizationAssembly fa;
  const Lifting& comp = it.composite;
  const DefectData dc = defect(comp.C);
  const DefectData dep = defect(comp.E);
  const DefectData dahat = defect(it.hat.E);
  const Subspace& sp_c = dc.space;
  const Subspace sp_a = defect(it.first.A).space;
  const Subspace sp_sap = star_defect(it.second.A).space;

  fa.sigma_Eprime = sigma_E(comp);
  fa.sigma_Ahat = sigma_E(it.hat);
  fa.sigma_star_Ahat = sigma_star_E(it.hat);
  fa.jh = julia_halmos(it.delta());
  fa.MA = char_popescu(it.first.A, N);
  fa.MAp = char_popescu(it.second.A, N);
  fa.unitarity = std::max({detail::sigma_defect(fa.sigma_Eprime), detail::sigma_defect(fa.sigma_Ahat),
                           detail::sigma_defect(fa.sigma_star_Ahat), fa.jh.unitarity_residual});

  const auto id = [&](const Subspace& s) { return MultiAnalyticOp::identity_on(b, s); };
  const auto cst = [&](const SubOperator& x) { return MultiAnalyticOp::constant(b, x); };

  const MultiAnalyticOp f_d = cst(SubOperator(Subspace::full(dep.D.cols()), dep.space, dep.space.basis.adjoint() * dep.D));
  const MultiAnalyticOp f_sigma = cst(fa.sigma_Eprime.sigma);
  const MultiAnalyticOp f_sahat = direct_sum(id(sp_c), cst(fa.sigma_Ahat.sigma));
  const MultiAnalyticOp f_map = direct_sum({id(sp_c), id(sp_a), fa.MAp.op});
  const Subspace jspace = direct_sum(fa.jh.L.codomain, fa.jh.L.domain);
  const SubOperator jop(jspace, jspace, fa.jh.J);
  const MultiAnalyticOp f_j = direct_sum(id(sp_c), cst(jop));
  const MultiAnalyticOp f_ma = direct_sum({id(sp_c), fa.MA.op, id(sp_sap)});

  MultiAnalyticOp acc = product({f_ma, f_j, f_map, f_sahat, f_sigma, f_d}, 1e-8);
  const Subspace sigma_star_cod = direct_sum(sp_c, fa.sigma_star_Ahat.sigma.codomain);
  double leak = 0.0;
  acc = compress_codomain(acc, sigma_star_cod, &leak);

  const MultiAnalyticOp f_sinv = direct_sum(id(sp_c), cst(fa.sigma_star_Ahat.sigma.adjoint()));
  const OperatorDefects ghd = operator_defects(comp.gamma);
  const MultiAnalyticOp f_row = row_concat(cst(SubOperator(sp_c, sp_c, ghd.Dstar)), cst(comp.gamma));
  fa.rhs = product({f_row, f_sinv, acc}, 1e-8);

  // chain for the H_Ahat columns
  const MultiAnalyticOp g_d =
      cst(SubOperator(Subspace::full(dahat.D.cols()), dahat.space, dahat.space.basis.adjoint() * dahat.D));
  const MultiAnalyticOp g_map = direct_sum(id(sp_a), fa.MAp.op);
  const MultiAnalyticOp g_ma = direct_sum(fa.MA.op, id(sp_sap));
  MultiAnalyticOp acc2 = product({g_ma, cst(jop), g_map, cst(fa.sigma_Ahat.sigma), g_d}, 1e-8);
  double leak2 = 0.0;
  acc2 = compress_codomain(acc2, fa.sigma_star_Ahat.sigma.codomain, &leak2);
  fa.rhs_Ahat = product({cst(comp.gamma), cst(fa.sigma_star_Ahat.sigma.adjoint()), acc2}, 1e-8);
  fa.leak = std::max(leak, leak2);
  if (fa.leak > tol)
    throw Error(ErrorKind::SubspaceLeak,
                "composite left the range of sigma'_Ahat (residual " + std::to_string(fa.leak) + ")");

  fa.factors = {
      {"sigma_Eprime", fa.sigma_Eprime.sigma.ambient()},
      {"sigma_Ahat", fa.sigma_Ahat.sigma.ambient()},
      {"sigma_star_Ahat", fa.sigma_star_Ahat.sigma.ambient()},
      {"J_delta", jop.ambient()},
      {"theta_A_empty", fa.MA.op.ambient_coeff(Word{})},
      {"theta_Aprime_empty", fa.MAp.op.ambient_coeff(Word{})},
      {"gamma_hat", comp.gamma.ambient()},
      {"D_star_gamma_hat", sp_c.basis * ghd.Dstar * sp_c.basis.adjoint()},
      {"basis_D_C", sp_c.basis},
      {"basis_D_Eprime", dep.space.basis},
  };
  return fa;
}

inline FactorizationReport verify_factorization(const IteratedLifting& it, int N, double tol = 1e-8) {
  const FockBasis b(it.first.d(), N);
  const Lifting& comp = it.composite;
  const int d = comp.d();
  const Index nc = comp.nC(), nah = comp.nA(), ne = comp.E.dim;
  FactorizationAssembly fa = assemble_factorization(it, N, tol);

  const CharFn m = char_lifting(comp, N);
  const DefectData dep = defect(comp.E);
  const CMatrix dcoords = dep.space.basis.adjoint() * dep.D;
  const SparseC lhs_real = SparseC(realize(m.op) * ampliate(b, dcoords));
  FactorizationReport r;
  r.lhs = extract_coeffs(b, Subspace::full(d * ne), m.op.cod, CMatrix(lhs_real.leftCols(d * ne)));
  r.rhs = fa.rhs;
  r.residual = coeff_diff(r.lhs, r.rhs, N);

  CMatrix emb_c = CMatrix::Zero(d * ne, d * nc), emb_a = CMatrix::Zero(d * ne, d * nah);
  for (int i = 0; i < d; ++i) {
    emb_c.block(i * ne, i * nc, nc, nc) = identity(nc);
    emb_a.block(i * ne + nc, i * nah, nah, nah) = identity(nah);
  }
  const MultiAnalyticOp ec = detail::embedding_op(b, d * ne, emb_c);
  const MultiAnalyticOp ea = detail::embedding_op(b, d * ne, emb_a);
  r.residual_C = coeff_diff(product(r.lhs, ec), product(r.rhs, ec), N);
  r.residual_Ahat = coeff_diff(product(r.lhs, ea), fa.rhs_Ahat, N);
  r.leak = fa.leak;
  r.unitarity = fa.unitarity;
  r.degree = N;
  r.tolerance = tol;
  r.factors = fa.factors;
  r.pass = std::max({r.residual, r.residual_C, r.residual_Ahat}) <= tol;
  return r;
}

/// Minimal part of E' over C: the E'-orbit of H_C, the restriction there,
/// the compression to the complement, and the unitary sigma of the theorem.
struct MinimalPart {
  Subspace H_tilde;       ///< inside H_{E'}, basis = [H_C coordinates, rest]
  Subspace H_perp;        ///< orthogonal complement
  RowContraction E_tilde; ///< restriction, in H_tilde coordinates
  RowContraction A_tilde; ///< compression to H_perp
  Lifting tilde;          ///< E_tilde as a lifting of C
  SubOperator gamma;      ///< D_{A_tilde} -> D_{*,E_tilde}
  SigmaMap sigma;         ///< D_{E'} -> D_{E_tilde} (+) D_gamma
  double invariance_residual = 0.0;
  double gamma_residual = 0.0;
  bool inputs_minimal = true;
};

inline MinimalPart minimal_part(const Lifting& first, const Lifting& second, double tol = 1e-9) {
  MinimalPart mp;
  const RowContraction& ep = second.E;
  const int d = ep.d;
  const Index n = ep.dim, nc = first.nC();
  mp.inputs_minimal = is_minimal_lifting(first).minimal && is_minimal_lifting(second).minimal;

  const Subspace orbit = orbit_span(ep, nc);
  CMatrix pc = CMatrix::Zero(n, n);
  pc.topLeftCorner(nc, nc) = identity(nc);
  const Subspace rest = column_span(CMatrix((identity(n) - pc) * orbit.basis));
  CMatrix head = CMatrix::Zero(n, nc);
  head.topRows(nc) = identity(nc);
  mp.H_tilde = Subspace(n, hstack({head, rest.basis}));
  mp.H_perp = orthogonal_complement(mp.H_tilde);
  const CMatrix& qt = mp.H_tilde.basis;
  const CMatrix& qp = mp.H_perp.basis;
  const Index kt = qt.cols(), kp = qp.cols();

  std::vector<CMatrix> et, at, xt;
  for (int i = 0; i < d; ++i) {
    mp.invariance_residual = std::max(mp.invariance_residual, kp && kt ? op_norm(qp.adjoint() * ep[i] * qt) : 0.0);
    et.push_back(qt.adjoint() * ep[i] * qt);
    at.push_back(qp.adjoint() * ep[i] * qp);
    xt.push_back(qt.adjoint() * ep[i] * qp);
  }
  if (mp.invariance_residual > tol)
    throw Error(ErrorKind::ResidualTooLarge, "orbit span is not invariant (residual " + std::to_string(mp.invariance_residual) + ")");
  mp.E_tilde = RowContraction(et, 1e-9);
  mp.A_tilde = RowContraction(at, 1e-9);
  mp.tilde = lifting_from_tuple(mp.E_tilde, nc, tol);

  const DefectData dset = star_defect(mp.E_tilde);
  const DefectData dat = defect(mp.A_tilde);
  const DefectData det = defect(mp.E_tilde);
  const CMatrix xrow = hstack(xt);
  const CMatrix gamb = pinv(dset.D) * xrow * pinv(dat.D);
  mp.gamma = SubOperator::from_ambient(dat.space, dset.space, gamb);
  mp.gamma_residual = xrow.size() ? op_norm(xrow - dset.D * mp.gamma.ambient() * dat.D) : 0.0;
  if (mp.gamma_residual > tol)
    throw Error(ErrorKind::ResidualTooLarge, "X_tilde is not of the form D_{*,E~} gamma D_{A~}");

  const OperatorDefects gd = operator_defects(mp.gamma);
  const CMatrix dg = mp.gamma.domain.basis * gd.D * mp.gamma.domain.basis.adjoint();
  CMatrix t = CMatrix::Zero(d * (kt + kp), d * (kt + kp));
  t.topLeftCorner(d * kt, d * kt) = det.D;
  t.topRightCorner(d * kt, d * kp) = -mp.E_tilde.row().adjoint() * mp.gamma.ambient() * dat.D;
  t.bottomRightCorner(d * kp, d * kp) = dg * dat.D;
  CMatrix phi = CMatrix::Zero(d * (kt + kp), d * n);
  for (int i = 0; i < d; ++i) {
    phi.block(i * kt, i * n, kt, n) = qt.adjoint();
    phi.block(d * kt + i * kp, i * n, kp, n) = qp.adjoint();
  }
  const DefectData dep = defect(ep);
  mp.sigma = detail::finish_sigma(t * phi, dep.D, dep.space, det.space, gd.space, 1e-9, "sigma (minimal part)");
  return mp;
}

inline FactorizationReport verify_minimal_product(const Lifting& first, const Lifting& second, int N, double tol = 1e-8) {
  const FockBasis b(first.d(), N);
  const MinimalPart mp = minimal_part(first, second);
  FactorizationReport r;
  r.lhs = char_lifting(mp.tilde, N).op;
  const MultiAnalyticOp mce = char_lifting(first, N).op;
  const MultiAnalyticOp mee = char_lifting(second, N).op;
  const CMatrix sinv = mp.sigma.sigma.matrix.adjoint();
  const Index kt = mp.sigma.first.rank();
  const SubOperator restricted(mp.sigma.first, mp.sigma.sigma.domain, sinv.leftCols(kt));
  r.rhs = product({mce, mee, MultiAnalyticOp::constant(b, restricted)}, 1e-8);
  r.residual = coeff_diff(r.lhs, r.rhs, N);
  const CMatrix ss = mp.sigma.sigma.matrix * sinv;
  r.leak = kt ? op_norm(ss.topLeftCorner(kt, kt) - identity(kt)) : 0.0;
  r.unitarity = detail::sigma_defect(mp.sigma);
  r.minimal = is_minimal_lifting(mp.tilde).minimal;
  r.degree = N;
  r.tolerance = tol;
  r.factors = {{"sigma_inverse", mp.sigma.sigma.adjoint().ambient()},
               {"basis_H_tilde", mp.H_tilde.basis},
               {"basis_H_perp", mp.H_perp.basis},
               {"gamma_tilde", mp.tilde.gamma.ambient()}};
  r.pass = r.residual <= tol && r.leak <= tol && r.minimal;
  return r;
}

/// Data of the converse construction, in the canonical defect coordinates:
/// lambda : D_{*,A} (+) C^{f_star} -> D_C and
/// U : C^f (+) D_{*,A'} -> D_A (+) C^{f_star}.
struct ConverseInput {
  RowContraction C, A, A_prime;
  CMatrix lambda;
  CMatrix U;
  Index f = 0;
  Index f_star = 0;
};

struct ConverseResult {
  Lifting E_prime;  ///< lifting of C by A_hat
  Lifting A_hat;    ///< lifting of A by A' with delta = R*
  CMatrix P, Q, R, S, U1, U2, J;
  SubOperator phi;
  double U1_unitarity = 0.0, U2_unitarity = 0.0;
  double decomposition_residual = 0.0;  ///< ||U - v* J u||
  double Q1_residual = 0.0;             ///< ||U_2 Q* U_1* + R|_{D_R}||
  double pure_margin = 0.0;             ///< top singular value of the vacuum coefficient
  double residual = 0.0;
  MultiAnalyticOp script_M;
  MultiAnalyticOp rhs;
  bool pass = false;
};

inline ConverseResult converse_construct(const ConverseInput& in, int N, double tol = 1e-8, double eps_pc = 1e-8) {
  const FockBasis b(in.C.d, N);
  const DefectData dc = defect(in.C), da = defect(in.A), dsa = star_defect(in.A);
  const DefectData dap = defect(in.A_prime), dsap = star_defect(in.A_prime);
  const Index kc = dc.space.rank(), ka = da.space.rank(), ksa = dsa.space.rank(), ksap = dsap.space.rank();
  const Index f = in.f, fs = in.f_star;
  if (in.lambda.rows() != kc || in.lambda.cols() != ksa + fs)
    throw Error(ErrorKind::DimMismatch, "lambda must map D_{*,A} (+) F_* into D_C");
  if (in.U.rows() != ka + fs || in.U.cols() != f + ksap)
    throw Error(ErrorKind::DimMismatch, "U must map F (+) D_{*,A'} onto D_A (+) F_*");
  if (op_norm(in.lambda) > 1.0 + 1e-10) throw Error(ErrorKind::NotContraction, "lambda is not a contraction");
  if (is_unitary(in.U) > tol) throw Error(ErrorKind::NotUnitary, "U is not unitary");

  ConverseResult r;
  const CMatrix us = in.U.adjoint();
  r.P = us.topLeftCorner(f, ka);
  r.Q = us.topRightCorner(f, fs);
  r.R = us.bottomLeftCorner(ksap, ka);
  r.S = us.bottomRightCorner(ksap, fs);

  const CharFn ma = char_popescu(in.A, N), map = char_popescu(in.A_prime, N);
  const CMatrix vac = block_diag(ma.op.coeff(Word{}), identity(fs)) * in.U * block_diag(identity(f), map.op.coeff(Word{}));
  r.pure_margin = op_norm(vac);
  if (r.pure_margin >= 1.0 - eps_pc)
    throw Error(ErrorKind::NotPurelyContractive, "vacuum coefficient has norm " + std::to_string(r.pure_margin));
  const auto rank_of = [](const CMatrix& m) { return m.size() ? column_span(m).rank() : Index(0); };
  if (rank_of(r.P) != f || rank_of(r.S.adjoint()) != fs)
    throw Error(ErrorKind::NotPurelyContractive, "P or S* does not have full rank");

  const OperatorDefects rd = operator_defects(SubOperator(Subspace::full(ka), Subspace::full(ksap), r.R));
  r.U1 = rd.space.basis.adjoint() * rd.D * pinv(r.P);
  r.U2 = rd.star_space.basis.adjoint() * rd.Dstar * pinv(CMatrix(r.S.adjoint()));
  r.U1_unitarity = r.U1.rows() == r.U1.cols() ? (r.U1.size() ? is_unitary(r.U1) : 0.0) : 1.0;
  r.U2_unitarity = r.U2.rows() == r.U2.cols() ? (r.U2.size() ? is_unitary(r.U2) : 0.0) : 1.0;
  if (r.U1_unitarity > tol || r.U2_unitarity > tol)
    throw Error(ErrorKind::UnitaryExtensionFailure, "U_1 or U_2 is not unitary");

  const Index kr = rd.space.rank(), ksr = rd.star_space.rank();
  r.J = CMatrix::Zero(ka + ksr, kr + ksap);
  r.J.topLeftCorner(ka, kr) = rd.D * rd.space.basis;
  r.J.topRightCorner(ka, ksap) = r.R.adjoint();
  r.J.bottomLeftCorner(ksr, kr) = -rd.star_space.basis.adjoint() * r.R * rd.space.basis;
  r.J.bottomRightCorner(ksr, ksap) = rd.star_space.basis.adjoint() * rd.Dstar;
  const CMatrix u = block_diag(r.U1, identity(ksap));
  const CMatrix v = block_diag(identity(ka), r.U2);
  r.decomposition_residual = op_norm(in.U - v.adjoint() * r.J * u);
  r.Q1_residual = op_norm(r.U2 * r.Q.adjoint() * r.U1.adjoint() + rd.star_space.basis.adjoint() * r.R * rd.space.basis);

  // delta = R* : D_{*,A'} -> D_A
  const SubOperator delta(dsap.space, da.space, r.R.adjoint());
  r.A_hat = make_lifting(in.A, in.A_prime, delta);
  const SigmaMap sps = sigma_star_E(r.A_hat);
  const SigmaMap sah = sigma_E(r.A_hat);
  // phi = v'* sigma'_Ahat : D_{*,Ahat} -> D_{*,A} (+) F_*
  const Subspace dstar_r_amb(in.A_prime.dim, dsap.space.basis * rd.star_space.basis);
  const CMatrix to_r = transfer(sps.second, dstar_r_amb);
  const CMatrix vp_star = block_diag(identity(transfer(sps.first, dsa.space).rows()), r.U2.adjoint() * to_r);
  const Subspace lam_dom = direct_sum(dsa.space, Subspace::full(fs));
  r.phi = SubOperator(sps.sigma.domain, lam_dom,
                      vp_star * block_diag(transfer(sps.first, dsa.space), identity(sps.second.rank())) * sps.sigma.matrix);
  const SubOperator lambda(lam_dom, dc.space, in.lambda);
  const SubOperator gamma_hat = compose(lambda, r.phi);
  r.E_prime = make_lifting(in.C, r.A_hat.E, gamma_hat, 1e-9);

  const auto id = [&](const Subspace& s) { return MultiAnalyticOp::identity_on(b, s); };
  const auto cst = [&](const SubOperator& x) { return MultiAnalyticOp::constant(b, x); };
  const Subspace sf = Subspace::full(f), sfs = Subspace::full(fs);
  const SubOperator uop(direct_sum(sf, dsap.space), direct_sum(da.space, sfs), in.U);
  const OperatorDefects lam_def = operator_defects(lambda);
  r.script_M = product({row_concat(cst(SubOperator(dc.space, dc.space, lam_def.Dstar)), cst(lambda)),
                        direct_sum({id(dc.space), ma.op, id(sfs)}), direct_sum(id(dc.space), cst(uop)),
                        direct_sum({id(dc.space), id(sf), map.op})},
                       1e-8);

  const SigmaMap sep = sigma_E(r.E_prime);
  const Subspace dr_amb(da.space.ambient_dim, da.space.basis * rd.space.basis);
  const SubOperator u1op(sf, dr_amb, r.U1);
  const SubOperator up = block_diag(u1op, SubOperator::identity_on(dap.space));
  const SubOperator tail = compose(sah.sigma.adjoint(), up, 1e-8);
  const MultiAnalyticOp mce = char_lifting(r.E_prime, N).op;
  try {
    r.rhs = product({mce, cst(sep.sigma.adjoint()), direct_sum(id(dc.space), cst(tail))}, 1e-8);
  } catch (const Error& e) {
    throw Error(ErrorKind::VerificationFailure, std::string("right-hand side not composable: ") + e.what());
  }
  r.residual = coeff_diff(r.script_M, r.rhs, N);
  r.pass = r.residual <= tol && r.decomposition_residual <= tol && r.Q1_residual <= tol;
  if (!r.pass)
    throw Error(ErrorKind::VerificationFailure,
                "converse identity residual " + std::to_string(r.residual) + ", decomposition " +
                    std::to_string(r.decomposition_residual));
  return r;
}

}  // namespace liftchar
