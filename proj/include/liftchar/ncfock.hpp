#pragma once

#include <map>
#include <string>
#include <vector>

#include "liftchar/numlin.hpp"
#include "liftchar/word.hpp"

namespace liftchar {

/// Words of length <= N over {1..d} in graded lexicographic order; these
/// index the orthonormal basis of the truncated Fock space.
class FockBasis {
 public:
  FockBasis() = default;
  FockBasis(int d, int N) : d_(d), N_(N) {
    if (d < 1) throw Error(ErrorKind::IndexOutOfRange, "FockBasis needs d >= 1");
    if (N < 0) throw Error(ErrorKind::IndexOutOfRange, "FockBasis needs N >= 0");
    Index pw = 1;
    for (int k = 0; k <= N; ++k) {
      offsets_.push_back(size_);
      size_ += pw;
      pw *= d;
    }
    offsets_.push_back(size_);
    words_.reserve(static_cast<std::size_t>(size_));
    std::vector<int> cur;
    for (int k = 0; k <= N; ++k) {
      cur.assign(static_cast<std::size_t>(k), 1);
      for (;;) {
        words_.emplace_back(cur);
        int pos = k - 1;
        while (pos >= 0 && cur[static_cast<std::size_t>(pos)] == d) {
          cur[static_cast<std::size_t>(pos)] = 1;
          --pos;
        }
        if (pos < 0) break;
        ++cur[static_cast<std::size_t>(pos)];
      }
    }
  }

  int d() const { return d_; }
  int N() const { return N_; }
  Index size() const { return size_; }
  const std::vector<Word>& words() const { return words_; }
  const Word& word(Index i) const { return words_[static_cast<std::size_t>(i)]; }

  /// Position of `w`, or -1 when it is longer than N.
  Index index(const Word& w) const {
    if (static_cast<int>(w.length()) > N_) return -1;
    Index r = 0;
    for (std::size_t i = 0; i < w.length(); ++i) {
      if (w[i] < 1 || w[i] > d_) throw Error(ErrorKind::IndexOutOfRange, "letter out of range");
      r = r * d_ + (w[i] - 1);
    }
    return offsets_[w.length()] + r;
  }

  /// Number of words of length < k.
  Index offset(int k) const { return offsets_[static_cast<std::size_t>(k)]; }

  friend bool operator==(const FockBasis& a, const FockBasis& b) { return a.d_ == b.d_ && a.N_ == b.N_; }

 private:
  int d_ = 1;
  int N_ = 0;
  Index size_ = 0;
  std::vector<Index> offsets_;
  std::vector<Word> words_;
};

enum class Side { Left, Right };

/// Creation operator on the truncated Fock space: left sends e_b to e_{ib},
/// right sends e_b to e_{bi}; words leaving degree N are dropped.
inline SparseC creation(const FockBasis& basis, Side side, int i) {
  if (i < 1 || i > basis.d()) throw Error(ErrorKind::IndexOutOfRange, "creation letter out of range");
  std::vector<Eigen::Triplet<cplx>> trip;
  for (Index c = 0; c < basis.size(); ++c) {
    const Word& b = basis.word(c);
    const Word t = side == Side::Left ? Word{i} + b : b + Word{i};
    const Index r = basis.index(t);
    if (r >= 0) trip.emplace_back(r, c, cplx(1.0, 0.0));
  }
  SparseC m(basis.size(), basis.size());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

/// I_Gamma (x) X with the word as the outer index.
inline SparseC ampliate(const FockBasis& basis, const CMatrix& x) {
  const Index nw = basis.size();
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<std::size_t>(nw * x.size()));
  for (Index w = 0; w < nw; ++w)
    for (Index j = 0; j < x.cols(); ++j)
      for (Index i = 0; i < x.rows(); ++i)
        if (x(i, j) != cplx(0.0, 0.0)) trip.emplace_back(w * x.rows() + i, w * x.cols() + j, x(i, j));
  SparseC m(nw * x.rows(), nw * x.cols());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

inline SparseC ampliate(const FockBasis& basis, const SubOperator& x) { return ampliate(basis, x.matrix); }

/// The row (R_1 (x) I, ..., R_d (x) I) from Gamma (x) H^d to Gamma (x) H,
/// where H^d carries letter j in block j.
inline SparseC right_creation_row(const FockBasis& basis, Index n) {
  const int d = basis.d();
  std::vector<Eigen::Triplet<cplx>> trip;
  for (Index c = 0; c < basis.size(); ++c) {
    const Word& b = basis.word(c);
    for (int j = 1; j <= d; ++j) {
      const Index r = basis.index(b + Word{j});
      if (r < 0) continue;
      for (Index h = 0; h < n; ++h) trip.emplace_back(r * n + h, c * d * n + (j - 1) * n + h, cplx(1.0, 0.0));
    }
  }
  SparseC m(basis.size() * n, basis.size() * d * n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

/// A multi-analytic operator from Gamma (x) dom to Gamma (x) cod, kept as its
/// Fourier coefficients in the coordinates of the two subspace bases.  The
/// coefficient at alpha acts as M(e_b (x) x) = sum_alpha e_{b rev(alpha)} (x) theta_alpha x.
struct MultiAnalyticOp {
  FockBasis basis;
  Subspace dom;
  Subspace cod;
  std::map<Word, CMatrix> coeffs;

  MultiAnalyticOp() = default;
  MultiAnalyticOp(FockBasis b, Subspace domain, Subspace codomain)
      : basis(std::move(b)), dom(std::move(domain)), cod(std::move(codomain)) {}

  int d() const { return basis.d(); }
  int N() const { return basis.N(); }

  CMatrix coeff(const Word& w) const {
    auto it = coeffs.find(w);
    if (it != coeffs.end()) return it->second;
    return CMatrix::Zero(cod.rank(), dom.rank());
  }

  /// Coefficient as an ambient matrix cod-ambient x dom-ambient.
  CMatrix ambient_coeff(const Word& w) const { return cod.basis * coeff(w) * dom.basis.adjoint(); }

  void set(const Word& w, CMatrix m) {
    if (static_cast<int>(w.length()) > N())
      throw Error(ErrorKind::IndexOutOfRange, "coefficient word longer than truncation degree");
    if (m.rows() != cod.rank() || m.cols() != dom.rank())
      throw Error(ErrorKind::DimMismatch, "coefficient shape does not match dom/cod ranks");
    coeffs[w] = std::move(m);
  }

  /// Adds to the stored coefficient.
  void add(const Word& w, const CMatrix& m) {
    auto it = coeffs.find(w);
    if (it == coeffs.end())
      set(w, m);
    else
      it->second += m;
  }

  static MultiAnalyticOp constant(const FockBasis& b, const SubOperator& x) {
    MultiAnalyticOp m(b, x.domain, x.codomain);
    m.set(Word{}, x.matrix);
    return m;
  }
  static MultiAnalyticOp identity_on(const FockBasis& b, const Subspace& s) {
    return constant(b, SubOperator::identity_on(s));
  }
};

/// Matrix of the operator on Gamma_N (x) dom -> Gamma_N (x) cod (coordinates),
/// dropping output words longer than N.
inline SparseC realize(const MultiAnalyticOp& m) {
  const FockBasis& b = m.basis;
  const Index kd = m.dom.rank(), kc = m.cod.rank();
  std::vector<Eigen::Triplet<cplx>> trip;
  for (const auto& [alpha, theta] : m.coeffs) {
    const Word ra = alpha.reversed();
    for (Index c = 0; c < b.size(); ++c) {
      const Word& beta = b.word(c);
      if (static_cast<int>(beta.length() + ra.length()) > b.N()) continue;
      const Index r = b.index(beta + ra);
      for (Index j = 0; j < kd; ++j)
        for (Index i = 0; i < kc; ++i)
          if (theta(i, j) != cplx(0.0, 0.0)) trip.emplace_back(r * kc + i, c * kd + j, theta(i, j));
    }
  }
  SparseC out(b.size() * kc, b.size() * kd);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

/// Reads coefficients from the vacuum block column: block at output word w
/// is the coefficient at rev(w).  `vacuum_cols` holds realize(M) restricted
/// to the columns e_0 (x) dom, i.e. a (|Gamma| k_cod) x k_dom matrix.
inline MultiAnalyticOp extract_coeffs(const FockBasis& b, const Subspace& dom, const Subspace& cod,
                                      const CMatrix& vacuum_cols, double drop_below = 0.0) {
  const Index kc = cod.rank(), kd = dom.rank();
  if (vacuum_cols.rows() != b.size() * kc || vacuum_cols.cols() != kd)
    throw Error(ErrorKind::DimMismatch, "vacuum column block has the wrong shape");
  MultiAnalyticOp m(b, dom, cod);
  for (Index w = 0; w < b.size(); ++w) {
    CMatrix blk = vacuum_cols.block(w * kc, 0, kc, kd);
    if (blk.size() == 0) continue;
    if (blk.cwiseAbs().maxCoeff() <= drop_below) continue;
    m.set(b.word(w).reversed(), std::move(blk));
  }
  return m;
}

inline MultiAnalyticOp extract_coeffs(const MultiAnalyticOp& shape, const SparseC& realized) {
  const CMatrix cols = CMatrix(realized.leftCols(shape.dom.rank()));
  return extract_coeffs(shape.basis, shape.dom, shape.cod, cols);
}

/// Coefficient convolution: coeff(g) = sum over splits g = a b of M1(a) M2(b).
/// cod(M2) must lie in dom(M1).
inline MultiAnalyticOp product(const MultiAnalyticOp& m1, const MultiAnalyticOp& m2, double tol = 1e-9) {
  if (!(m1.basis == m2.basis)) throw Error(ErrorKind::DimMismatch, "product of operators on different Fock truncations");
  const double leak = containment_residual(m2.cod, m1.dom);
  if (leak > tol)
    throw Error(ErrorKind::DimMismatch, "product: codomain of right factor not inside domain of left factor (residual " +
                                            std::to_string(leak) + ")");
  const CMatrix t = transfer(m2.cod, m1.dom);
  MultiAnalyticOp out(m1.basis, m2.dom, m1.cod);
  for (const auto& [a, x] : m1.coeffs) {
    const CMatrix xt = x * t;
    for (const auto& [b, y] : m2.coeffs) {
      if (static_cast<int>(a.length() + b.length()) > m1.N()) continue;
      out.add(a + b, xt * y);
    }
  }
  return out;
}

inline MultiAnalyticOp product(const std::vector<MultiAnalyticOp>& chain_left_to_right, double tol = 1e-9) {
  if (chain_left_to_right.empty()) throw Error(ErrorKind::DimMismatch, "empty product");
  MultiAnalyticOp acc = chain_left_to_right.back();
  for (std::size_t i = chain_left_to_right.size() - 1; i-- > 0;) acc = product(chain_left_to_right[i], acc, tol);
  return acc;
}

/// Block-diagonal sum M1 (+) M2.
inline MultiAnalyticOp direct_sum(const MultiAnalyticOp& m1, const MultiAnalyticOp& m2) {
  if (!(m1.basis == m2.basis)) throw Error(ErrorKind::DimMismatch, "direct sum on different truncations");
  MultiAnalyticOp out(m1.basis, direct_sum(m1.dom, m2.dom), direct_sum(m1.cod, m2.cod));
  for (const Word& w : m1.basis.words()) {
    const bool in1 = m1.coeffs.count(w) > 0, in2 = m2.coeffs.count(w) > 0;
    if (in1 || in2) out.set(w, block_diag(m1.coeff(w), m2.coeff(w)));
  }
  return out;
}

inline MultiAnalyticOp direct_sum(const std::vector<MultiAnalyticOp>& parts) {
  MultiAnalyticOp acc = parts.at(0);
  for (std::size_t i = 1; i < parts.size(); ++i) acc = direct_sum(acc, parts[i]);
  return acc;
}

/// Row [M1 M2] from dom1 (+) dom2 into the common codomain.
inline MultiAnalyticOp row_concat(const MultiAnalyticOp& m1, const MultiAnalyticOp& m2, double tol = 1e-9) {
  if (!(m1.basis == m2.basis)) throw Error(ErrorKind::DimMismatch, "row concat on different truncations");
  if (containment_residual(m2.cod, m1.cod) > tol || containment_residual(m1.cod, m2.cod) > tol)
    throw Error(ErrorKind::DimMismatch, "row concat needs a common codomain");
  const CMatrix t = transfer(m2.cod, m1.cod);
  MultiAnalyticOp out(m1.basis, direct_sum(m1.dom, m2.dom), m1.cod);
  for (const Word& w : m1.basis.words()) {
    const bool in1 = m1.coeffs.count(w) > 0, in2 = m2.coeffs.count(w) > 0;
    if (in1 || in2) out.set(w, hstack({m1.coeff(w), t * m2.coeff(w)}));
  }
  return out;
}

/// Re-expresses the codomain in `target`; `leak` receives the largest
/// component of any coefficient outside `target`.
inline MultiAnalyticOp compress_codomain(const MultiAnalyticOp& m, const Subspace& target, double* leak = nullptr) {
  if (target.ambient_dim != m.cod.ambient_dim)
    throw Error(ErrorKind::DimMismatch, "compress_codomain: ambient dimensions differ");
  MultiAnalyticOp out(m.basis, m.dom, target);
  const CMatrix t = transfer(m.cod, target);
  double worst = 0.0;
  for (const auto& [w, x] : m.coeffs) {
    const CMatrix amb = m.cod.basis * x;
    const CMatrix kept = t * x;
    worst = std::max(worst, op_norm(amb - target.basis * kept));
    out.set(w, kept);
  }
  if (leak) *leak = worst;
  return out;
}

/// Max over words of length <= up_to of the operator-norm distance between
/// the ambient coefficients.
inline double coeff_diff(const MultiAnalyticOp& m1, const MultiAnalyticOp& m2, int up_to) {
  if (m1.d() != m2.d()) throw Error(ErrorKind::DimMismatch, "coeff_diff: different alphabets");
  if (m1.dom.ambient_dim != m2.dom.ambient_dim || m1.cod.ambient_dim != m2.cod.ambient_dim)
    throw Error(ErrorKind::DimMismatch, "coeff_diff: ambient shapes differ");
  const FockBasis b(m1.d(), std::min({up_to, m1.N(), m2.N()}));
  double worst = 0.0;
  for (const Word& w : b.words()) {
    if (!m1.coeffs.count(w) && !m2.coeffs.count(w)) continue;
    worst = std::max(worst, op_norm(m1.ambient_coeff(w) - m2.ambient_coeff(w)));
  }
  return worst;
}

/// Operator norm of the realized truncation, through the Gram matrix on the
/// smaller side.
inline double realized_norm(const MultiAnalyticOp& m) {
  if (m.dom.rank() == 0 || m.cod.rank() == 0) return 0.0;
  const SparseC t = realize(m);
  const SparseC th = SparseC(t.adjoint());
  CMatrix g = t.rows() <= t.cols() ? CMatrix(t * th) : CMatrix(th * t);
  g = 0.5 * (g + g.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(g, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
}

/// L (x) I_k for a sparse Fock-space operator L, word index outermost.
inline SparseC kron_identity(const SparseC& l, Index k) {
  std::vector<Eigen::Triplet<cplx>> trip;
  for (Index c = 0; c < l.outerSize(); ++c)
    for (SparseC::InnerIterator it(l, c); it; ++it)
      for (Index i = 0; i < k; ++i) trip.emplace_back(it.row() * k + i, it.col() * k + i, it.value());
  SparseC out(l.rows() * k, l.cols() * k);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

/// Largest entry of realize(M)(L_i (x) I) - (L_i (x) I)realize(M) over all i.
inline double intertwining_residual(const MultiAnalyticOp& m) {
  const SparseC t = realize(m);
  double worst = 0.0;
  for (int i = 1; i <= m.d(); ++i) {
    const SparseC l = creation(m.basis, Side::Left, i);
    const SparseC diff = SparseC(t * kron_identity(l, m.dom.rank())) - SparseC(kron_identity(l, m.cod.rank()) * t);
    for (Index c = 0; c < diff.outerSize(); ++c)
      for (SparseC::InnerIterator it(diff, c); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

}  // namespace liftchar
