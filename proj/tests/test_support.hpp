#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <optional>

#include "catch_amalgamated.hpp"
#include "liftchar/charfact.hpp"
#include "liftchar/random.hpp"

namespace testsupport {

using namespace liftchar;

inline CMatrix scalar(double v) {
  CMatrix m(1, 1);
  m(0, 0) = v;
  return m;
}

inline CMatrix mat(Index rows, Index cols, std::initializer_list<double> v) {
  CMatrix m(rows, cols);
  auto p = v.begin();
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = *p++;
  return m;
}

/// Single-letter tuple (v) on C.
inline RowContraction scalar_tuple(double v) { return RowContraction(std::vector<CMatrix>{scalar(v)}); }

inline double maxdiff(const CMatrix& a, const CMatrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  return a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0;
}

/// Kind of the Error thrown by f, or nullopt when nothing is thrown.
template <class F>
std::optional<ErrorKind> thrown_kind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

inline const double kS2 = 1.0 / std::sqrt(2.0);
inline const double kS3 = 1.0 / std::sqrt(3.0);

/// E over C = 1/2 by A = 0 with B = 1/2, then E' over E by A' = 0 with
/// B' = [1/2, 0].
struct Sec3 {
  RowContraction C = scalar_tuple(0.5), A = scalar_tuple(0.0), Ap = scalar_tuple(0.0);
  Lifting first = lifting_from_blocks(C, A, {scalar(0.5)});
  Lifting second = lifting_from_blocks(first.E, Ap, {mat(1, 2, {0.5, 0.0})});
};

/// C = A = A' = 0, B = 1/sqrt(2), B' = [1/sqrt(2), 0].
struct Sec4 {
  RowContraction C = scalar_tuple(0.0), A = scalar_tuple(0.0), Ap = scalar_tuple(0.0);
  Lifting first = lifting_from_blocks(C, A, {scalar(kS2)});
  Lifting second = lifting_from_blocks(first.E, Ap, {mat(1, 2, {kS2, 0.0})});
};

}  // namespace testsupport
