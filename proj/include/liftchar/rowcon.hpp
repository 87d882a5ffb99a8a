#pragma once

#include <limits>
#include <string>
#include <vector>

#include "liftchar/ncfock.hpp"
#include "liftchar/numlin.hpp"
#include "liftchar/word.hpp"

namespace liftchar {

/// A d-tuple (S_1, ..., S_d) of dim x dim matrices whose row operator
/// [S_1 ... S_d] : H^d -> H is a contraction.
struct RowContraction {
  int d = 1;
  Index dim = 0;
  std::vector<CMatrix> ops;

  RowContraction() = default;

  /// Validates shapes and contractivity; throws NotContraction when
  /// I - sum S_i S_i* has an eigenvalue below -tol.
  RowContraction(std::vector<CMatrix> s, double tol = kRankTol) : ops(std::move(s)) {
    if (ops.empty()) throw Error(ErrorKind::DimMismatch, "row contraction needs at least one operator");
    d = static_cast<int>(ops.size());
    dim = ops.front().rows();
    for (const auto& m : ops) {
      if (m.rows() != dim || m.cols() != dim)
        throw Error(ErrorKind::DimMismatch, "row contraction entries must be square of equal size");
      if (!all_finite(m)) throw Error(ErrorKind::ValidationError, "non-finite matrix entry");
    }
    if (dim > 0) {
      const double nrm = op_norm(row());
      if (nrm > 1.0 + tol)
        throw Error(ErrorKind::NotContraction, "row norm " + std::to_string(nrm) + " exceeds 1");
    }
  }

  static RowContraction zero(int d, Index dim) {
    return RowContraction(std::vector<CMatrix>(static_cast<std::size_t>(d), CMatrix::Zero(dim, dim)));
  }

  const CMatrix& operator[](int i) const { return ops[static_cast<std::size_t>(i)]; }

  /// Row operator [S_1 ... S_d] : H^d -> H.
  CMatrix row() const { return hstack(ops); }

  /// S_w = S_{w_1} S_{w_2} ... S_{w_n}; identity for the empty word.
  CMatrix word_op(const Word& w) const {
    CMatrix r = identity(dim);
    for (std::size_t i = 0; i < w.length(); ++i) r = r * ops[static_cast<std::size_t>(w[i] - 1)];
    return r;
  }

  /// The tuple of adjoints is not a row contraction in general, so this
  /// returns plain matrices.
  std::vector<CMatrix> adjoints() const {
    std::vector<CMatrix> r;
    for (const auto& m : ops) r.push_back(m.adjoint());
    return r;
  }
};

inline double max_entry_diff(const RowContraction& a, const RowContraction& b) {
  if (a.d != b.d || a.dim != b.dim) return std::numeric_limits<double>::infinity();
  double w = 0.0;
  for (int i = 0; i < a.d; ++i)
    if (a.dim > 0) w = std::max(w, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return w;
}

enum class DefectKind { Column, Star };

struct DefectData {
  CMatrix D;
  Subspace space;
  DefectKind kind = DefectKind::Column;
};

/// D_S = (I - S_row* S_row)^{1/2} on H^d.
inline DefectData defect(const RowContraction& s, double tol = kRankTol) {
  const CMatrix r = s.row();
  const CMatrix d2 = identity(r.cols()) - r.adjoint() * r;
  DefectData out;
  try {
    out.D = hermitian_sqrt(d2, tol);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NotPSD) throw Error(ErrorKind::NotPSD, "input is not a row contraction");
    throw;
  }
  out.space = range_subspace(out.D, tol);
  out.kind = DefectKind::Column;
  return out;
}

/// D_{*,S} = (I - sum S_i S_i*)^{1/2} on H.
inline DefectData star_defect(const RowContraction& s, double tol = kRankTol) {
  const CMatrix r = s.row();
  DefectData out;
  out.D = hermitian_sqrt(identity(s.dim) - r * r.adjoint(), tol);
  out.space = range_subspace(out.D, tol);
  out.kind = DefectKind::Star;
  return out;
}

/// h placed in block j (1-based) of H^d.
inline CVector column_embed(int d, int j, const CVector& h) {
  if (j < 1 || j > d) throw Error(ErrorKind::IndexOutOfRange, "column_embed letter out of range");
  CVector v = CVector::Zero(d * h.size());
  v.segment((j - 1) * h.size(), h.size()) = h;
  return v;
}

/// Matrix of the inclusion H -> H^d onto block j (1-based).
inline CMatrix block_embedding(int d, int j, Index n) {
  if (j < 1 || j > d) throw Error(ErrorKind::IndexOutOfRange, "block_embedding letter out of range");
  CMatrix e = CMatrix::Zero(d * n, n);
  e.block((j - 1) * n, 0, n, n) = identity(n);
  return e;
}

struct TruncatedDilation {
  std::vector<CMatrix> V;  ///< one matrix per letter on H (+) Gamma_N (x) D_S
  FockBasis basis;
  Subspace defect_space;
  Index dim = 0;  ///< dim H; Fock coordinates follow
};

/// Popescu's minimal isometric dilation with Fock degrees above N dropped:
/// V_j(h (+) xi) = S_j h (+) (e_0 (x) (D_S)_j h + e_j (x) xi).
inline TruncatedDilation mid_truncated(const RowContraction& s, int N) {
  const DefectData df = defect(s);
  TruncatedDilation out;
  out.basis = FockBasis(s.d, N);
  out.defect_space = df.space;
  out.dim = s.dim;
  const Index k = df.space.rank();
  const Index total = s.dim + out.basis.size() * k;
  for (int j = 1; j <= s.d; ++j) {
    CMatrix v = CMatrix::Zero(total, total);
    v.topLeftCorner(s.dim, s.dim) = s[j - 1];
    if (k > 0) {
      v.block(s.dim, 0, k, s.dim) = df.space.basis.adjoint() * df.D * block_embedding(s.d, j, s.dim);
      const SparseC l = creation(out.basis, Side::Left, j);
      for (Index c = 0; c < l.outerSize(); ++c)
        for (SparseC::InnerIterator it(l, c); it; ++it)
          v.block(s.dim + it.row() * k, s.dim + it.col() * k, k, k) = identity(k);
    }
    out.V.push_back(std::move(v));
  }
  return out;
}

struct CncResult {
  bool cnc = true;
  Subspace witness;
  std::vector<Index> kernel_dims;  ///< dim ker(I - Q_n), n = 1..n_max
  int n_max = 0;
};

/// Completely non-coisometric test up to n_max: intersects the kernels of
/// I - Q_n with Q_n = sum_{|a|=n} S_a S_a*.  n_max = 0 selects 2*dim.
inline CncResult is_cnc(const RowContraction& s, int n_max = 0, double tol = 1e-10) {
  CncResult out;
  out.n_max = n_max > 0 ? n_max : static_cast<int>(std::max<Index>(2 * s.dim, 1));
  CMatrix q = identity(s.dim);
  Subspace w = Subspace::full(s.dim);
  if (s.dim == 0) {
    out.witness = w;
    return out;
  }
  for (int n = 1; n <= out.n_max; ++n) {
    CMatrix next = CMatrix::Zero(s.dim, s.dim);
    for (int i = 0; i < s.d; ++i) next += s[i] * q * s[i].adjoint();
    q = 0.5 * (next + next.adjoint());
    const CMatrix gap = identity(s.dim) - q;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(gap);
    Index kdim = 0;
    for (Index i = 0; i < s.dim; ++i)
      if (std::abs(es.eigenvalues()(i)) < tol) ++kdim;
    out.kernel_dims.push_back(kdim);
    if (w.rank() > 0) {
      const Subspace inner = null_space(gap * w.basis, tol);
      CMatrix b = w.basis * inner.basis;
      w = b.cols() > 0 ? column_span(b) : Subspace::zero(s.dim);
    }
  }
  out.witness = w;
  out.cnc = w.rank() == 0;
  return out;
}

}  // namespace liftchar
