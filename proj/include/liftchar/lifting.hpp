#pragma once

#include <string>
#include <vector>

#include "liftchar/numlin.hpp"
#include "liftchar/rowcon.hpp"

namespace liftchar {

/// Defect data of a contraction between two subspaces, in the coordinates of
/// its domain and codomain bases.
struct OperatorDefects {
  CMatrix D;       ///< (I - L*L)^{1/2} on dom coordinates
  CMatrix Dstar;   ///< (I - LL*)^{1/2} on cod coordinates
  Subspace space;       ///< range of D, ambient = ambient of L.domain
  Subspace star_space;  ///< range of Dstar, ambient = ambient of L.codomain
};

inline OperatorDefects operator_defects(const SubOperator& l, double tol = kRankTol) {
  OperatorDefects o;
  const CMatrix& m = l.matrix;
  o.D = hermitian_sqrt(identity(m.cols()) - m.adjoint() * m, tol);
  o.Dstar = hermitian_sqrt(identity(m.rows()) - m * m.adjoint(), tol);
  const Subspace rc = range_subspace(o.D, tol);
  const Subspace rs = range_subspace(o.Dstar, tol);
  o.space = Subspace(l.domain.ambient_dim, l.domain.basis * rc.basis);
  o.star_space = Subspace(l.codomain.ambient_dim, l.codomain.basis * rs.basis);
  return o;
}

/// Contractive lifting E_i = [[C_i, 0], [B_i, A_i]] of C, together with the
/// contraction gamma : D_{*,A} -> D_C satisfying B_row* = D_C gamma D_{*,A}.
struct Lifting {
  RowContraction C;
  RowContraction A;
  std::vector<CMatrix> B;
  SubOperator gamma;
  RowContraction E;
  double gamma_residual = 0.0;

  int d() const { return C.d; }
  Index nC() const { return C.dim; }
  Index nA() const { return A.dim; }
  CMatrix B_row() const { return hstack(B); }
};

namespace detail {

inline std::vector<CMatrix> assemble_blocks(const RowContraction& c, const RowContraction& a,
                                            const std::vector<CMatrix>& b) {
  std::vector<CMatrix> e;
  const Index nc = c.dim, na = a.dim;
  for (int i = 0; i < c.d; ++i) {
    CMatrix m = CMatrix::Zero(nc + na, nc + na);
    m.topLeftCorner(nc, nc) = c[i];
    m.bottomLeftCorner(na, nc) = b[static_cast<std::size_t>(i)];
    m.bottomRightCorner(na, na) = a[i];
    e.push_back(std::move(m));
  }
  return e;
}

inline std::vector<CMatrix> split_row(const CMatrix& row, int d) {
  std::vector<CMatrix> out;
  const Index w = row.cols() / d;
  for (int i = 0; i < d; ++i) out.push_back(row.middleCols(i * w, w));
  return out;
}

inline void check_pair(const RowContraction& c, const RowContraction& a) {
  if (c.d != a.d) throw Error(ErrorKind::DimMismatch, "C and A have different numbers of letters");
}

}  // namespace detail

struct GammaExtraction {
  SubOperator gamma;
  double residual = 0.0;
};

/// gamma = D_C^+ B_row* D_{*,A}^+ in the canonical defect bases; the residual
/// measures how far B_row* is from the form D_C gamma D_{*,A}.
inline GammaExtraction extract_gamma(const RowContraction& c, const RowContraction& a, const std::vector<CMatrix>& b,
                                     double rank_tol = kRankTol) {
  detail::check_pair(c, a);
  if (static_cast<int>(b.size()) != c.d) throw Error(ErrorKind::DimMismatch, "B needs one block per letter");
  for (const auto& bi : b)
    if (bi.rows() != a.dim || bi.cols() != c.dim) throw Error(ErrorKind::DimMismatch, "B block has wrong shape");
  const DefectData dc = defect(c, rank_tol);
  const DefectData dsa = star_defect(a, rank_tol);
  const CMatrix bstar = hstack(b).adjoint();
  const CMatrix amb = pinv(dc.D, rank_tol) * bstar * pinv(dsa.D, rank_tol);
  GammaExtraction g;
  g.gamma = SubOperator::from_ambient(dsa.space, dc.space, amb);
  g.residual = bstar.size() ? op_norm(bstar - dc.D * g.gamma.ambient() * dsa.D) : 0.0;
  return g;
}

/// Builds B from gamma (B_row = D_{*,A} gamma* D_C) and the assembled lifting.
inline Lifting make_lifting(const RowContraction& c, const RowContraction& a, const SubOperator& gamma,
                            double tol = kRankTol) {
  detail::check_pair(c, a);
  const DefectData dc = defect(c);
  const DefectData dsa = star_defect(a);
  if (gamma.domain.ambient_dim != a.dim || gamma.codomain.ambient_dim != c.d * c.dim)
    throw Error(ErrorKind::DimMismatch, "gamma must map into H_C^d from H_A");
  if (containment_residual(gamma.domain, dsa.space) > 1e-8 || containment_residual(gamma.codomain, dc.space) > 1e-8)
    throw Error(ErrorKind::DimMismatch, "gamma must map D_{*,A} into D_C");
  const double nrm = gamma.norm();
  if (nrm > 1.0 + tol) throw Error(ErrorKind::NotContraction, "||gamma|| = " + std::to_string(nrm));
  Lifting l;
  l.C = c;
  l.A = a;
  l.gamma = SubOperator(dsa.space, dc.space,
                        transfer(gamma.codomain, dc.space) * gamma.matrix * transfer(dsa.space, gamma.domain));
  const CMatrix brow = dsa.D * l.gamma.ambient().adjoint() * dc.D;
  l.B = detail::split_row(brow, c.d);
  l.E = RowContraction(detail::assemble_blocks(c, a, l.B), 1e-9);
  l.gamma_residual = 0.0;
  return l;
}

/// Lifting from explicit blocks; rejects B that is not of the parametrized form.
inline Lifting lifting_from_blocks(const RowContraction& c, const RowContraction& a, const std::vector<CMatrix>& b,
                                   double tol = kRankTol) {
  GammaExtraction g = extract_gamma(c, a, b);
  if (g.residual > tol)
    throw Error(ErrorKind::ResidualTooLarge,
                "B is not of the form D_{*,A} gamma* D_C (residual " + std::to_string(g.residual) + ")");
  const double nrm = g.gamma.norm();
  if (nrm > 1.0 + tol) throw Error(ErrorKind::NotContraction, "gamma not contractive (norm " + std::to_string(nrm) + ")");
  Lifting l;
  l.C = c;
  l.A = a;
  l.B = b;
  l.gamma = g.gamma;
  l.gamma_residual = g.residual;
  l.E = RowContraction(detail::assemble_blocks(c, a, b), 1e-9);
  return l;
}

/// Reads a lifting off a row contraction on H_C (+) H_A with n_C = nc.
inline Lifting lifting_from_tuple(const RowContraction& e, Index nc, double tol = kRankTol) {
  const Index na = e.dim - nc;
  if (nc < 0 || na < 0) throw Error(ErrorKind::DimMismatch, "split point outside the space");
  std::vector<CMatrix> cs, as, bs;
  for (int i = 0; i < e.d; ++i) {
    if (nc > 0 && na > 0 && e[i].topRightCorner(nc, na).cwiseAbs().maxCoeff() > tol)
      throw Error(ErrorKind::Mismatch, "tuple is not block lower triangular");
    cs.push_back(e[i].topLeftCorner(nc, nc));
    as.push_back(e[i].bottomRightCorner(na, na));
    bs.push_back(e[i].bottomLeftCorner(na, nc));
  }
  return lifting_from_blocks(RowContraction(cs, 1e-9), RowContraction(as, 1e-9), bs, tol);
}

/// Result of solving sigma * (defect) = (block matrix) for one of the
/// sigma-type unitaries.
struct SigmaMap {
  SubOperator sigma;
  double relation_residual = 0.0;
  double isometry_residual = 0.0;
  double coisometry_residual = 0.0;
  Index rank_deficit = 0;
  bool polar_applied = false;
  Subspace first;   ///< first summand of the codomain
  Subspace second;  ///< second summand of the codomain
};

namespace detail {

inline SigmaMap finish_sigma(const CMatrix& target, const CMatrix& defect_op, const Subspace& defect_space,
                             const Subspace& first, const Subspace& second, double tol, const char* name) {
  SigmaMap s;
  s.first = first;
  s.second = second;
  const Subspace cod = direct_sum(first, second);
  const CMatrix amb = target * pinv(defect_op);
  CMatrix m = cod.basis.adjoint() * amb * defect_space.basis;
  auto residuals = [&](const CMatrix& x) {
    s.isometry_residual = x.cols() ? op_norm(x.adjoint() * x - identity(x.cols())) : 0.0;
    s.coisometry_residual = x.rows() ? op_norm(x * x.adjoint() - identity(x.rows())) : 0.0;
  };
  residuals(m);
  s.rank_deficit = std::abs(cod.rank() - defect_space.rank());
  const double worst = std::max(s.isometry_residual, s.coisometry_residual);
  if (m.rows() == m.cols() && worst > 1e-12 && worst <= 1e-10) {
    m = polar_unitary(m);
    s.polar_applied = true;
    residuals(m);
  }
  s.sigma = SubOperator(defect_space, cod, m);
  s.relation_residual = target.size() ? op_norm(s.sigma.ambient() * defect_op - target) : 0.0;
  if (s.relation_residual > tol)
    throw Error(ErrorKind::ResidualTooLarge,
                std::string(name) + " relation residual " + std::to_string(s.relation_residual));
  return s;
}

/// Permutation taking the interleaved (H_C (+) H_A)^d to H_C^d (+) H_A^d.
inline CMatrix deinterleave(int d, Index nc, Index na) {
  const Index ne = nc + na;
  CMatrix p = CMatrix::Zero(d * ne, d * ne);
  for (int i = 0; i < d; ++i) {
    for (Index r = 0; r < nc; ++r) p(i * nc + r, i * ne + r) = 1.0;
    for (Index r = 0; r < na; ++r) p(d * nc + i * na + r, i * ne + nc + r) = 1.0;
  }
  return p;
}

}  // namespace detail

/// sigma_E : D_E -> D_{*,gamma} (+) D_A with
/// sigma_E D_E = [[D_{*,gamma} D_C, 0], [-A_row* gamma* D_C, D_A]].
/// The codomain ambient is H_C^d (+) H_A^d.
inline SigmaMap sigma_E(const Lifting& l, double tol = kRankTol) {
  const int d = l.d();
  const DefectData de = defect(l.E);
  const DefectData dc = defect(l.C);
  const DefectData da = defect(l.A);
  const OperatorDefects gd = operator_defects(l.gamma);
  const CMatrix g = l.gamma.ambient();
  const CMatrix dsg = l.gamma.codomain.basis * gd.Dstar * l.gamma.codomain.basis.adjoint();
  const Index dnc = d * l.nC(), dna = d * l.nA();
  CMatrix t = CMatrix::Zero(dnc + dna, dnc + dna);
  t.topLeftCorner(dnc, dnc) = dsg * dc.D;
  t.bottomLeftCorner(dna, dnc) = -l.A.row().adjoint() * g.adjoint() * dc.D;
  t.bottomRightCorner(dna, dna) = da.D;
  const CMatrix target = t * detail::deinterleave(d, l.nC(), l.nA());
  return detail::finish_sigma(target, de.D, de.space, gd.star_space, da.space, tol, "sigma_E");
}

/// sigma'_E : D_{*,E} -> D_{*,C} (+) D_gamma with
/// sigma'_E D_{*,E} = [[D_{*,C}, -C_row gamma D_{*,A}], [0, D_gamma D_{*,A}]].
inline SigmaMap sigma_star_E(const Lifting& l, double tol = kRankTol) {
  const DefectData dse = star_defect(l.E);
  const DefectData dsc = star_defect(l.C);
  const DefectData dsa = star_defect(l.A);
  const OperatorDefects gd = operator_defects(l.gamma);
  const CMatrix g = l.gamma.ambient();
  const CMatrix dg = l.gamma.domain.basis * gd.D * l.gamma.domain.basis.adjoint();
  const Index nc = l.nC(), na = l.nA();
  CMatrix target = CMatrix::Zero(nc + na, nc + na);
  target.topLeftCorner(nc, nc) = dsc.D;
  target.topRightCorner(nc, na) = -l.C.row() * g * dsa.D;
  target.bottomRightCorner(na, na) = dg * dsa.D;
  return detail::finish_sigma(target, dse.D, dse.space, dsc.space, gd.space, tol, "sigma'_E");
}

/// E' over E over C, with the derived lifting of A by A' (A_hat) and the
/// lifting of C by A_hat that reassembles E'.
struct IteratedLifting {
  Lifting first;      ///< E over C by A, contraction gamma
  Lifting second;     ///< E' over E by A', contraction gamma'
  Lifting hat;        ///< A_hat over A by A', contraction delta
  Lifting composite;  ///< E' over C by A_hat, contraction gamma_hat
  std::vector<CMatrix> B1p, B2p;
  double assembly_residual = 0.0;

  const SubOperator& delta() const { return hat.gamma; }
  const SubOperator& gamma_hat() const { return composite.gamma; }
  const RowContraction& A_hat() const { return hat.E; }
  const std::vector<CMatrix>& B_hat() const { return composite.B; }
};

inline IteratedLifting iterate(const Lifting& first, const Lifting& second, double tol = kRankTol) {
  const double diff = max_entry_diff(second.C, first.E);
  if (diff > tol) throw Error(ErrorKind::Mismatch, "second lifting is not a lifting of the first lifting's E");
  IteratedLifting it;
  it.first = first;
  it.second = second;
  const Index nc = first.nC(), na = first.nA();
  for (const auto& bp : second.B) {
    it.B1p.push_back(bp.leftCols(nc));
    it.B2p.push_back(bp.rightCols(na));
  }
  try {
    it.hat = lifting_from_blocks(first.A, second.A, it.B2p, tol);
  } catch (const Error& e) {
    throw Error(ErrorKind::ResidualTooLarge, std::string("delta extraction: ") + e.what());
  }
  std::vector<CMatrix> bhat;
  for (int i = 0; i < first.d(); ++i) bhat.push_back(vstack({first.B[static_cast<std::size_t>(i)], it.B1p[static_cast<std::size_t>(i)]}));
  try {
    it.composite = lifting_from_blocks(first.C, it.hat.E, bhat, tol);
  } catch (const Error& e) {
    throw Error(ErrorKind::ResidualTooLarge, std::string("gamma_hat extraction: ") + e.what());
  }
  it.assembly_residual = max_entry_diff(it.composite.E, second.E);
  if (it.assembly_residual > tol) throw Error(ErrorKind::ResidualTooLarge, "reassembled E' differs from input");
  return it;
}

struct JuliaHalmos {
  SubOperator L;
  CMatrix J;  ///< on cod(L) (+) dom(L), coordinates
  double unitarity_residual = 0.0;
};

/// J_L = [[D_{*,L}, L], [-L*, D_L]].
inline JuliaHalmos julia_halmos(const SubOperator& l, double tol = kRankTol) {
  const double nrm = l.norm();
  if (nrm > 1.0 + tol) throw Error(ErrorKind::NotContraction, "||L|| = " + std::to_string(nrm));
  const OperatorDefects od = operator_defects(l);
  const Index kc = l.matrix.rows(), kd = l.matrix.cols();
  JuliaHalmos jh;
  jh.L = l;
  jh.J = CMatrix::Zero(kc + kd, kc + kd);
  jh.J.topLeftCorner(kc, kc) = od.Dstar;
  jh.J.topRightCorner(kc, kd) = l.matrix;
  jh.J.bottomLeftCorner(kd, kc) = -l.matrix.adjoint();
  jh.J.bottomRightCorner(kd, kd) = od.D;
  jh.unitarity_residual = jh.J.size() ? is_unitary(jh.J) : 0.0;
  return jh;
}

struct ResolvingResult {
  bool resolving = false;
  int word_length = 0;
  Index kernel_G = 0;
  Index kernel_O = 0;
};

/// gamma D_{*,A} A_a* h = 0 for all words a must force D_{*,A} A_a* h = 0.
inline ResolvingResult is_resolving(const SubOperator& gamma, const RowContraction& a, double tol = 1e-9) {
  const DefectData dsa = star_defect(a);
  const CMatrix g = gamma.ambient();
  if (g.cols() != a.dim) throw Error(ErrorKind::DimMismatch, "gamma domain is not inside H_A");
  std::vector<CMatrix> o_rows, g_rows;
  std::vector<CMatrix> level{identity(a.dim)};  // A_a* for |a| = L
  Index prev_g = -1, prev_o = -1;
  ResolvingResult r;
  for (int L = 0;; ++L) {
    for (const auto& x : level) {
      const CMatrix ox = dsa.D * x;
      o_rows.push_back(ox);
      g_rows.push_back(g * ox);
    }
    const Subspace kg = null_space(vstack(g_rows), tol);
    const Subspace ko = null_space(vstack(o_rows), tol);
    r.word_length = L;
    r.kernel_G = kg.rank();
    r.kernel_O = ko.rank();
    const bool stable = kg.rank() == prev_g && ko.rank() == prev_o;
    prev_g = kg.rank();
    prev_o = ko.rank();
    if (stable || L > a.dim + 1) {
      r.resolving = containment_residual(kg, ko) <= std::sqrt(tol);
      return r;
    }
    std::vector<CMatrix> next;
    for (const auto& x : level)
      for (int i = 0; i < a.d; ++i) next.push_back(x * a[i].adjoint());
    level = std::move(next);
  }
}

struct MinimalityResult {
  bool minimal = false;
  Subspace span;
  int steps = 0;
};

/// Stabilized span of {E_a x : x in H_C} inside H_E.
inline Subspace orbit_span(const RowContraction& e, Index nc, int* steps = nullptr) {
  CMatrix start = CMatrix::Zero(e.dim, nc);
  start.topRows(nc) = identity(nc);
  Subspace v = column_span(start);
  int k = 0;
  for (;;) {
    std::vector<CMatrix> parts{v.basis};
    for (int i = 0; i < e.d; ++i) parts.push_back(e[i] * v.basis);
    const Subspace w = column_span(hstack(parts));
    ++k;
    if (w.rank() == v.rank()) break;
    v = w;
  }
  if (steps) *steps = k;
  return v;
}

inline MinimalityResult is_minimal_lifting(const Lifting& l) {
  MinimalityResult r;
  r.span = orbit_span(l.E, l.nC(), &r.steps);
  r.minimal = r.span.rank() == l.E.dim;
  return r;
}

}  // namespace liftchar
