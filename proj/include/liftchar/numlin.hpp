#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace liftchar {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using SparseC = Eigen::SparseMatrix<cplx>;
using Index = Eigen::Index;

inline constexpr double kRankTol = 1e-10;

enum class ErrorKind {
  NotHermitian,
  NotPSD,
  NotSquare,
  IndexOutOfRange,
  NotContraction,
  NotUnitary,
  DimMismatch,
  Mismatch,
  ResidualTooLarge,
  OracleMismatch,
  SubspaceLeak,
  NotPurelyContractive,
  UnitaryExtensionFailure,
  VerificationFailure,
  ParseError,
  ValidationError,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::NotSquare: return "NotSquare";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::NotContraction: return "NotContraction";
    case ErrorKind::NotUnitary: return "NotUnitary";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::Mismatch: return "Mismatch";
    case ErrorKind::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorKind::OracleMismatch: return "OracleMismatch";
    case ErrorKind::SubspaceLeak: return "SubspaceLeak";
    case ErrorKind::NotPurelyContractive: return "NotPurelyContractive";
    case ErrorKind::UnitaryExtensionFailure: return "UnitaryExtensionFailure";
    case ErrorKind::VerificationFailure: return "VerificationFailure";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}
  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

// ---------------------------------------------------------------------------
// Small dense helpers

inline double op_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

inline CMatrix identity(Index n) { return CMatrix::Identity(n, n); }

inline CMatrix block_diag(const CMatrix& a, const CMatrix& b) {
  CMatrix r = CMatrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  r.topLeftCorner(a.rows(), a.cols()) = a;
  r.bottomRightCorner(b.rows(), b.cols()) = b;
  return r;
}

inline CMatrix block_diag(const std::vector<CMatrix>& blocks) {
  Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  CMatrix r = CMatrix::Zero(rows, cols);
  Index r0 = 0, c0 = 0;
  for (const auto& b : blocks) {
    r.block(r0, c0, b.rows(), b.cols()) = b;
    r0 += b.rows();
    c0 += b.cols();
  }
  return r;
}

inline CMatrix hstack(const std::vector<CMatrix>& blocks) {
  if (blocks.empty()) return CMatrix(0, 0);
  const Index rows = blocks.front().rows();
  Index cols = 0;
  for (const auto& b : blocks) {
    if (b.rows() != rows) throw Error(ErrorKind::DimMismatch, "hstack row count");
    cols += b.cols();
  }
  CMatrix r(rows, cols);
  Index c0 = 0;
  for (const auto& b : blocks) {
    r.middleCols(c0, b.cols()) = b;
    c0 += b.cols();
  }
  return r;
}

inline CMatrix vstack(const std::vector<CMatrix>& blocks) {
  if (blocks.empty()) return CMatrix(0, 0);
  const Index cols = blocks.front().cols();
  Index rows = 0;
  for (const auto& b : blocks) {
    if (b.cols() != cols) throw Error(ErrorKind::DimMismatch, "vstack column count");
    rows += b.rows();
  }
  CMatrix r(rows, cols);
  Index r0 = 0;
  for (const auto& b : blocks) {
    r.middleRows(r0, b.rows()) = b;
    r0 += b.rows();
  }
  return r;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

inline bool all_finite(const CMatrix& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

/// Rotates each column by a unit phase so that its first entry of
/// magnitude above 1e-10 is real and positive.
inline void normalize_column_phases(CMatrix& basis) {
  for (Index j = 0; j < basis.cols(); ++j) {
    for (Index i = 0; i < basis.rows(); ++i) {
      const double a = std::abs(basis(i, j));
      if (a > 1e-10) {
        basis.col(j) *= std::conj(basis(i, j)) / a;
        basis(i, j) = cplx(basis(i, j).real(), 0.0);
        break;
      }
    }
  }
}

namespace detail {

inline double hermitian_scale(const CMatrix& m) { return std::max(op_norm(m), 1.0); }

inline void require_square(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols())
    throw Error(ErrorKind::NotSquare, std::string(what) + " requires a square matrix");
}

inline void require_hermitian(const CMatrix& m, double tol) {
  const double asym = op_norm(m - m.adjoint());
  if (asym > tol * hermitian_scale(m))
    throw Error(ErrorKind::NotHermitian,
                "||M - M*|| = " + std::to_string(asym) + " exceeds tolerance");
}

}  // namespace detail

/// PSD square root via the Hermitian eigendecomposition.  Eigenvalues of
/// magnitude at most tol*max(||M||,1) are set to zero; anything more negative
/// is rejected.
inline CMatrix hermitian_sqrt(const CMatrix& m, double tol = kRankTol) {
  detail::require_square(m, "hermitian_sqrt");
  if (m.size() == 0) return m;
  detail::require_hermitian(m, tol);
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const double scale = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
  Eigen::VectorXd roots(h.rows());
  for (Index i = 0; i < h.rows(); ++i) {
    const double lam = es.eigenvalues()(i);
    if (lam < -tol * scale)
      throw Error(ErrorKind::NotPSD, "eigenvalue " + std::to_string(lam) + " is negative");
    roots(i) = lam <= tol * scale ? 0.0 : std::sqrt(lam);
  }
  const CMatrix& v = es.eigenvectors();
  CMatrix r = v * roots.cast<cplx>().asDiagonal() * v.adjoint();
  return 0.5 * (r + r.adjoint());
}

/// Moore-Penrose inverse; singular values at or below rank_tol*sigma_max are
/// treated as zero.
inline CMatrix pinv(const CMatrix& m, double rank_tol = kRankTol) {
  if (m.size() == 0) return CMatrix::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cut = rank_tol * s(0);
  Eigen::VectorXcd inv(s.size());
  for (Index i = 0; i < s.size(); ++i)
    inv(i) = (s(i) > cut && s(i) > 0.0) ? cplx(1.0 / s(i), 0.0) : cplx(0.0, 0.0);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

/// Residual max(||M*M - I||, ||MM* - I||).
inline double is_unitary(const CMatrix& m) {
  detail::require_square(m, "is_unitary");
  const CMatrix id = identity(m.rows());
  return std::max(op_norm(m.adjoint() * m - id), op_norm(m * m.adjoint() - id));
}

/// Polar factor U V* of the SVD M = U S V*.
inline CMatrix polar_unitary(const CMatrix& m) {
  if (m.size() == 0) return m;
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

// ---------------------------------------------------------------------------
// Subspaces

/// A subspace of C^ambient_dim given by an orthonormal column basis.
struct Subspace {
  Index ambient_dim = 0;
  CMatrix basis = CMatrix(0, 0);

  Subspace() = default;
  Subspace(Index ambient, CMatrix b) : ambient_dim(ambient), basis(std::move(b)) {
    if (basis.rows() != ambient_dim)
      throw Error(ErrorKind::DimMismatch, "subspace basis rows != ambient dimension");
  }

  Index rank() const { return basis.cols(); }
  CMatrix projector() const { return basis * basis.adjoint(); }

  static Subspace zero(Index n) { return Subspace(n, CMatrix::Zero(n, 0)); }
  static Subspace full(Index n) { return Subspace(n, identity(n)); }
};

inline Subspace direct_sum(const Subspace& a, const Subspace& b) {
  return Subspace(a.ambient_dim + b.ambient_dim, block_diag(a.basis, b.basis));
}

inline Subspace direct_sum(const std::vector<Subspace>& parts) {
  Index amb = 0;
  std::vector<CMatrix> blocks;
  for (const auto& p : parts) {
    amb += p.ambient_dim;
    blocks.push_back(p.basis);
  }
  return Subspace(amb, block_diag(blocks));
}

/// Orthonormal eigenbasis of the eigenvalues of a Hermitian PSD matrix above
/// rank_tol*lambda_max, sorted by descending eigenvalue.
inline Subspace range_subspace(const CMatrix& m, double rank_tol = kRankTol) {
  detail::require_square(m, "range_subspace");
  const Index n = m.rows();
  if (n == 0) return Subspace::zero(0);
  detail::require_hermitian(m, rank_tol);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()));
  const auto& ev = es.eigenvalues();
  const double lmax = ev.maxCoeff();
  const double cut = std::max(rank_tol * lmax, 1e-14);
  std::vector<Index> keep;
  for (Index i = n - 1; i >= 0; --i)
    if (ev(i) > cut) keep.push_back(i);
  CMatrix b(n, static_cast<Index>(keep.size()));
  for (Index c = 0; c < b.cols(); ++c) b.col(c) = es.eigenvectors().col(keep[c]);
  normalize_column_phases(b);
  return Subspace(n, b);
}

/// Orthonormal basis of the column space of an arbitrary matrix.
inline Subspace column_span(const CMatrix& m, double rank_tol = kRankTol) {
  const Index n = m.rows();
  if (m.cols() == 0 || n == 0) return Subspace::zero(n);
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double cut = std::max(rank_tol * s(0), 1e-14);
  Index k = 0;
  while (k < s.size() && s(k) > cut) ++k;
  CMatrix b = svd.matrixU().leftCols(k);
  normalize_column_phases(b);
  return Subspace(n, b);
}

/// Orthonormal basis of {x : ||Mx|| small}, using singular values at or
/// below the absolute threshold `tol`.
inline Subspace null_space(const CMatrix& m, double tol) {
  const Index n = m.cols();
  if (n == 0) return Subspace::zero(0);
  if (m.rows() == 0) return Subspace::full(n);
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  Index r = 0;
  while (r < s.size() && s(r) > tol) ++r;
  CMatrix b = svd.matrixV().rightCols(n - r);
  normalize_column_phases(b);
  return Subspace(n, b);
}

inline Subspace orthogonal_complement(const Subspace& s) {
  return range_subspace(identity(s.ambient_dim) - s.projector());
}

/// ||(I - P_outer) inner.basis||: zero iff inner is contained in outer.
inline double containment_residual(const Subspace& inner, const Subspace& outer) {
  if (inner.ambient_dim != outer.ambient_dim)
    throw Error(ErrorKind::DimMismatch, "subspaces live in different ambient spaces");
  if (inner.rank() == 0) return 0.0;
  return op_norm(inner.basis - outer.basis * (outer.basis.adjoint() * inner.basis));
}

// ---------------------------------------------------------------------------
// Operators between subspaces

/// A linear map between two subspaces, stored in the coordinates of their
/// orthonormal bases.
struct SubOperator {
  Subspace domain;
  Subspace codomain;
  CMatrix matrix;

  SubOperator() = default;
  SubOperator(Subspace dom, Subspace cod, CMatrix m)
      : domain(std::move(dom)), codomain(std::move(cod)), matrix(std::move(m)) {
    if (matrix.rows() != codomain.rank() || matrix.cols() != domain.rank())
      throw Error(ErrorKind::DimMismatch,
                  "SubOperator matrix is " + std::to_string(matrix.rows()) + "x" +
                      std::to_string(matrix.cols()) + " but bases have ranks " +
                      std::to_string(codomain.rank()) + "," + std::to_string(domain.rank()));
  }

  /// The operator as a matrix on the ambient spaces (zero off the domain).
  CMatrix ambient() const { return codomain.basis * matrix * domain.basis.adjoint(); }
  SubOperator adjoint() const { return SubOperator(codomain, domain, matrix.adjoint()); }
  double norm() const { return op_norm(matrix); }

  static SubOperator from_ambient(const Subspace& dom, const Subspace& cod, const CMatrix& amb) {
    return SubOperator(dom, cod, cod.basis.adjoint() * amb * dom.basis);
  }
  static SubOperator identity_on(const Subspace& s) {
    return SubOperator(s, s, identity(s.rank()));
  }
};

/// Coordinates change from `from` into `to`; exact when `from` lies in `to`.
inline CMatrix transfer(const Subspace& from, const Subspace& to) {
  return to.basis.adjoint() * from.basis;
}

inline SubOperator compose(const SubOperator& outer, const SubOperator& inner,
                           double tol = 1e-9) {
  const double leak = containment_residual(inner.codomain, outer.domain);
  if (leak > tol)
    throw Error(ErrorKind::DimMismatch,
                "codomain not contained in domain (residual " + std::to_string(leak) + ")");
  return SubOperator(inner.domain, outer.codomain,
                     outer.matrix * transfer(inner.codomain, outer.domain) * inner.matrix);
}

inline SubOperator block_diag(const SubOperator& a, const SubOperator& b) {
  return SubOperator(direct_sum(a.domain, b.domain), direct_sum(a.codomain, b.codomain),
                     block_diag(a.matrix, b.matrix));
}

}  // namespace liftchar
