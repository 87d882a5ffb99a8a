#pragma once

#include <cstdint>
#include <random>

#include "liftchar/charfact.hpp"
#include "liftchar/lifting.hpp"
#include "liftchar/rowcon.hpp"

namespace liftchar {

using Rng = std::mt19937_64;

inline CMatrix random_gaussian(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> nd(0.0, 1.0);
  CMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) {
      const double re = nd(rng);
      const double im = nd(rng);
      m(i, j) = cplx(re, im);
    }
  return m;
}

inline double random_eta(Rng& rng) { return std::uniform_real_distribution<double>(0.05, 0.5)(rng); }

/// G / (||G|| + eta): a strict contraction for every draw.
inline CMatrix random_contraction(Rng& rng, Index rows, Index cols) {
  const CMatrix g = random_gaussian(rng, rows, cols);
  const double eta = random_eta(rng);
  if (g.size() == 0) return g;
  return g / (op_norm(g) + eta);
}

inline RowContraction random_row_contraction(Rng& rng, int d, Index dim) {
  const CMatrix row = random_contraction(rng, dim, d * dim);
  return RowContraction(detail::split_row(row, d));
}

/// Haar-like unitary from the QR factorization of a complex Gaussian matrix.
inline CMatrix random_unitary(Rng& rng, Index n) {
  if (n == 0) return CMatrix(0, 0);
  const CMatrix g = random_gaussian(rng, n, n);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < n; ++i) {
    const double a = std::abs(r(i, i));
    if (a > 0) q.col(i) *= r(i, i) / a;
  }
  return q;
}

struct RandomShape {
  int d = 1;
  Index nC = 1, nA = 1, nAp = 1;
};

inline RandomShape random_shape(Rng& rng, int d_max, int dim_max) {
  RandomShape s;
  s.d = std::uniform_int_distribution<int>(1, std::max(d_max, 1))(rng);
  std::uniform_int_distribution<int> dim(1, std::max(dim_max, 1));
  s.nC = dim(rng);
  s.nA = dim(rng);
  s.nAp = dim(rng);
  return s;
}

struct RandomIterated {
  RandomShape shape;
  Lifting first;
  Lifting second;
};

/// E over C by A and E' over E by A' with random strict contractions and
/// random parametrizing contractions gamma, gamma'.
inline RandomIterated random_iterated(std::uint64_t seed, int d_max, int dim_max) {
  Rng rng(seed);
  RandomIterated r;
  r.shape = random_shape(rng, d_max, dim_max);
  const auto& s = r.shape;
  const RowContraction c = random_row_contraction(rng, s.d, s.nC);
  const RowContraction a = random_row_contraction(rng, s.d, s.nA);
  const RowContraction ap = random_row_contraction(rng, s.d, s.nAp);
  const DefectData dc = defect(c), dsa = star_defect(a);
  const SubOperator g(dsa.space, dc.space, random_contraction(rng, dc.space.rank(), dsa.space.rank()));
  r.first = make_lifting(c, a, g);
  const DefectData de = defect(r.first.E), dsap = star_defect(ap);
  const SubOperator gp(dsap.space, de.space, random_contraction(rng, de.space.rank(), dsap.space.rank()));
  r.second = make_lifting(r.first.E, ap, gp);
  return r;
}

struct RandomConverse {
  RandomShape shape;
  ConverseInput input;
  int attempts = 0;
};

/// Random data for the converse construction with margins: the vacuum
/// coefficient has norm <= 1 - 1e-3 and P, S* have smallest singular value
/// >= 0.05.
inline RandomConverse random_converse(std::uint64_t seed, int d_max, int dim_max, int N = 2) {
  Rng rng(seed);
  RandomConverse out;
  for (int attempt = 1; attempt <= 200; ++attempt) {
    out.attempts = attempt;
    out.shape = random_shape(rng, d_max, dim_max);
    const auto& s = out.shape;
    ConverseInput in;
    in.C = random_row_contraction(rng, s.d, s.nC);
    in.A = random_row_contraction(rng, s.d, s.nA);
    in.A_prime = random_row_contraction(rng, s.d, s.nAp);
    const Index kc = defect(in.C).space.rank();
    const Index ka = defect(in.A).space.rank();
    const Index ksa = star_defect(in.A).space.rank();
    const Index ksap = star_defect(in.A_prime).space.rank();
    const Index fs_lo = std::max<Index>(0, ksap - ka);
    in.f_star = std::uniform_int_distribution<Index>(fs_lo, ksap)(rng);
    in.f = ka + in.f_star - ksap;
    in.U = random_unitary(rng, ka + in.f_star);
    const double scale = std::uniform_real_distribution<double>(0.3, 0.9)(rng);
    const CMatrix lam = random_gaussian(rng, kc, ksa + in.f_star);
    in.lambda = lam.size() ? CMatrix(lam * (scale / op_norm(lam))) : lam;

    const CMatrix us = in.U.adjoint();
    const CMatrix p = us.topLeftCorner(in.f, ka);
    const CMatrix sst = us.bottomRightCorner(ksap, in.f_star).adjoint();
    const auto smin = [](const CMatrix& m) {
      if (m.size() == 0) return 1.0;
      Eigen::JacobiSVD<CMatrix> svd(m);
      return svd.singularValues()(svd.singularValues().size() - 1);
    };
    if (smin(p) < 0.05 || smin(sst) < 0.05) continue;
    const CMatrix vac = block_diag(char_popescu(in.A, N).op.coeff(Word{}), identity(in.f_star)) * in.U *
                        block_diag(identity(in.f), char_popescu(in.A_prime, N).op.coeff(Word{}));
    if (op_norm(vac) > 1.0 - 1e-3) continue;
    out.input = std::move(in);
    return out;
  }
  throw Error(ErrorKind::ValidationError, "could not draw converse data meeting the margins");
}

}  // namespace liftchar
