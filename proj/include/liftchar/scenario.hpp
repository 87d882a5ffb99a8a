#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "liftchar/lifting.hpp"
#include "liftchar/ncfock.hpp"
#include "liftchar/rowcon.hpp"

namespace liftchar {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

/// One verification scenario: a lifting E of C by A and optionally a lifting
/// E' of E by A'.  Each level is given either by its B blocks or by its
/// parametrizing contraction in canonical defect coordinates.
struct Scenario {
  std::string name;
  int d = 1;
  int degree = 6;
  double tolerance = 1e-8;
  std::optional<std::uint64_t> seed;
  Lifting first;
  std::optional<Lifting> second;
  bool first_from_gamma = false;
  bool second_from_gamma = false;
};

// ---- complex / matrix serialization ----------------------------------------

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json tuple_to_json(const std::vector<CMatrix>& ms) {
  json out = json::array();
  for (const auto& m : ms) out.push_back(matrix_to_json(m));
  return out;
}

inline cplx complex_from_json(const json& j, const std::string& field) {
  if (j.is_number()) return cplx(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return cplx(j[0].get<double>(), j[1].get<double>());
  throw Error(ErrorKind::ParseError, field + ": expected a number or a [re, im] pair");
}

/// Rows of entries; an empty array is a 0 x 0 matrix.  "[[]]" style empty
/// rows give a r x 0 matrix.
inline CMatrix matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) throw Error(ErrorKind::ParseError, field + ": expected an array of rows");
  const Index rows = static_cast<Index>(j.size());
  Index cols = -1;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array()) throw Error(ErrorKind::ParseError, field + ": row " + std::to_string(i) + " is not an array");
    const Index c = static_cast<Index>(j[i].size());
    if (cols >= 0 && c != cols) throw Error(ErrorKind::ValidationError, field + ": ragged rows");
    cols = c;
  }
  CMatrix m(rows, std::max<Index>(cols, 0));
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < m.cols(); ++c)
      m(r, c) = complex_from_json(j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)],
                                  field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  if (!all_finite(m)) throw Error(ErrorKind::ValidationError, field + ": non-finite entry");
  return m;
}

inline std::vector<CMatrix> tuple_from_json(const json& j, int d, const std::string& field) {
  if (!j.is_array()) throw Error(ErrorKind::ParseError, field + ": expected a list of " + std::to_string(d) + " matrices");
  if (static_cast<int>(j.size()) != d)
    throw Error(ErrorKind::ValidationError, field + ": expected " + std::to_string(d) + " matrices, got " +
                                                std::to_string(j.size()));
  std::vector<CMatrix> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(matrix_from_json(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

/// Coefficient dump: [{"word": "12", "matrix": [[[re, im], ...], ...]}, ...]
/// in graded-lex order, ambient coordinates.  A zero-dimensional domain or
/// codomain gives an empty list.
inline json coeffs_to_json(const MultiAnalyticOp& m) {
  json out = json::array();
  if (m.dom.rank() == 0 || m.cod.rank() == 0) return out;
  for (const auto& [w, c] : m.coeffs) {
    (void)c;
    out.push_back({{"word", w.str()}, {"matrix", matrix_to_json(m.ambient_coeff(w))}});
  }
  return out;
}

inline std::vector<std::pair<Word, CMatrix>> coeffs_from_json(const json& j, int d, const std::string& field) {
  if (!j.is_array()) throw Error(ErrorKind::ParseError, field + ": expected a coefficient list");
  std::vector<std::pair<Word, CMatrix>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& e = j[i];
    if (!e.is_object() || !e.contains("word") || !e["word"].is_string() || !e.contains("matrix"))
      throw Error(ErrorKind::ParseError, field + "[" + std::to_string(i) + "]: expected {word, matrix}");
    out.emplace_back(Word::parse(e["word"].get<std::string>(), d), matrix_from_json(e["matrix"], field + ".matrix"));
  }
  return out;
}

// ---- scenario parsing --------------------------------------------------------

namespace detail {

inline const json* opt_field(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

inline RowContraction checked_tuple(const json& j, int d, const std::string& field) {
  std::vector<CMatrix> ms = tuple_from_json(j, d, field);
  try {
    return RowContraction(std::move(ms));
  } catch (const Error& e) {
    throw Error(ErrorKind::ValidationError, field + ": " + e.message());
  }
}

/// One lifting level from either "B"-style blocks or a "gamma"-style matrix.
inline Lifting build_level(const json& j, const RowContraction& c, const RowContraction& a, const char* b_key,
                           const char* g_key, bool& from_gamma) {
  const json* bj = opt_field(j, b_key);
  const json* gj = opt_field(j, g_key);
  if ((bj == nullptr) == (gj == nullptr))
    throw Error(ErrorKind::ValidationError,
                std::string("exactly one of ") + b_key + " and " + g_key + " must be given");
  from_gamma = gj != nullptr;
  try {
    if (bj) {
      const std::vector<CMatrix> b = tuple_from_json(*bj, c.d, b_key);
      for (std::size_t i = 0; i < b.size(); ++i)
        if (b[i].rows() != a.dim || b[i].cols() != c.dim)
          throw Error(ErrorKind::ValidationError, std::string(b_key) + "[" + std::to_string(i) + "]: expected " +
                                                      std::to_string(a.dim) + "x" + std::to_string(c.dim));
      return lifting_from_blocks(c, a, b, 1e-9);
    }
    const CMatrix g = matrix_from_json(*gj, g_key);
    const DefectData dc = defect(c), dsa = star_defect(a);
    if (g.rows() != dc.space.rank() || g.cols() != dsa.space.rank())
      throw Error(ErrorKind::ValidationError, std::string(g_key) + ": expected " + std::to_string(dc.space.rank()) +
                                                  "x" + std::to_string(dsa.space.rank()) + " in defect coordinates");
    if (op_norm(g) > 1.0 + 1e-10)
      throw Error(ErrorKind::NotContraction, "gamma not contractive (norm " + std::to_string(op_norm(g)) + ")");
    return make_lifting(c, a, SubOperator(dsa.space, dc.space, g), 1e-10);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ParseError || e.kind() == ErrorKind::ValidationError) throw;
    std::string msg = e.message();
    if (e.kind() == ErrorKind::NotContraction && msg.rfind("gamma not contractive", 0) != 0)
      msg = "gamma not contractive (" + msg + ")";
    throw Error(ErrorKind::ValidationError, std::string(from_gamma ? g_key : b_key) + ": " + msg);
  }
}

}  // namespace detail

inline Scenario parse_scenario_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "scenario must be a JSON object");
  const json* schema = detail::opt_field(j, "schema");
  if (!schema || !schema->is_number_integer() || schema->get<int>() != kSchemaVersion)
    throw Error(ErrorKind::ValidationError, "schema: expected 1");
  Scenario s;
  if (const json* n = detail::opt_field(j, "name")) {
    if (!n->is_string()) throw Error(ErrorKind::ParseError, "name: expected a string");
    s.name = n->get<std::string>();
  }
  const json* dj = detail::opt_field(j, "d");
  if (!dj || !dj->is_number_integer()) throw Error(ErrorKind::ValidationError, "d: expected an integer");
  s.d = dj->get<int>();
  if (s.d < 1 || s.d > 9) throw Error(ErrorKind::ValidationError, "d: must lie in 1..9");
  if (const json* nj = detail::opt_field(j, "degree")) {
    if (!nj->is_number_integer() || nj->get<int>() < 1) throw Error(ErrorKind::ValidationError, "degree: expected a positive integer");
    s.degree = nj->get<int>();
  }
  if (const json* tj = detail::opt_field(j, "tolerance")) {
    if (!tj->is_number() || !(tj->get<double>() > 0)) throw Error(ErrorKind::ValidationError, "tolerance: expected a positive number");
    s.tolerance = tj->get<double>();
  }
  if (const json* sj = detail::opt_field(j, "seed")) {
    if (!sj->is_number_unsigned()) throw Error(ErrorKind::ValidationError, "seed: expected a non-negative integer");
    s.seed = sj->get<std::uint64_t>();
  }
  for (const char* key : {"C", "A"})
    if (!detail::opt_field(j, key)) throw Error(ErrorKind::ValidationError, std::string(key) + ": missing");
  const RowContraction c = detail::checked_tuple(j["C"], s.d, "C");
  const RowContraction a = detail::checked_tuple(j["A"], s.d, "A");
  s.first = detail::build_level(j, c, a, "B", "gamma", s.first_from_gamma);
  if (const json* apj = detail::opt_field(j, "A_prime")) {
    const RowContraction ap = detail::checked_tuple(*apj, s.d, "A_prime");
    s.second = detail::build_level(j, s.first.E, ap, "B_prime", "gamma_prime", s.second_from_gamma);
  } else if (detail::opt_field(j, "B_prime") || detail::opt_field(j, "gamma_prime")) {
    throw Error(ErrorKind::ValidationError, "A_prime: missing while a second lifting level is given");
  }
  return s;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Scenario parse_scenario_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed JSON: ") + e.what());
  }
  return parse_scenario_json(j);
}

inline Scenario parse_scenario(const std::string& path) {
  Scenario s = parse_scenario_text(read_file(path));
  if (s.name.empty()) s.name = std::filesystem::path(path).stem().string();
  return s;
}

inline json scenario_to_json(const Scenario& s) {
  json j;
  j["schema"] = kSchemaVersion;
  j["name"] = s.name;
  j["d"] = s.d;
  j["degree"] = s.degree;
  j["tolerance"] = s.tolerance;
  if (s.seed) j["seed"] = *s.seed;
  j["C"] = tuple_to_json(s.first.C.ops);
  j["A"] = tuple_to_json(s.first.A.ops);
  j["B"] = tuple_to_json(s.first.B);
  if (s.second) {
    j["A_prime"] = tuple_to_json(s.second->A.ops);
    j["B_prime"] = tuple_to_json(s.second->B);
  }
  return j;
}

/// Writes through a sibling temporary file and a rename, so a reader never
/// sees a partially written report.
inline void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::ParseError, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw Error(ErrorKind::ParseError, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::ParseError, "cannot rename into " + path + ": " + ec.message());
  }
}

// ---- shipped paper scenarios ---------------------------------------------------

/// Scalar liftings C = 1/2, A = A' = 0, B = 1/2, B' = [1/2, 0].
inline const char* kSec3Scenario = R"({
  "schema": 1,
  "name": "sec3",
  "d": 1,
  "degree": 2,
  "tolerance": 1e-10,
  "C": [[[0.5]]],
  "A": [[[0]]],
  "B": [[[0.5]]],
  "A_prime": [[[0]]],
  "B_prime": [[[0.5, 0]]]
}
)";

/// C = A = A' = 0, B = 1/sqrt(2), B' = [1/sqrt(2), 0].
inline const char* kSec4Scenario = R"({
  "schema": 1,
  "name": "sec4",
  "d": 1,
  "degree": 2,
  "tolerance": 1e-10,
  "C": [[[0]]],
  "A": [[[0]]],
  "B": [[[0.7071067811865476]]],
  "A_prime": [[[0]]],
  "B_prime": [[[0.7071067811865476, 0]]]
}
)";

}  // namespace liftchar
