#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "liftchar/charfact.hpp"
#include "liftchar/random.hpp"
#include "liftchar/scenario.hpp"

namespace liftchar {

struct CheckResult {
  std::string name;
  double residual = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::string detail;
};

struct RunReport {
  std::string scenario;
  std::string selection;
  int degree = 0;
  double tolerance = 0.0;
  double wall_time = 0.0;
  std::vector<CheckResult> checks;
  std::vector<std::string> notes;
  json sections = json::object();

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }
};

enum class CheckSet { All, Factorization, Minimal, Lemma21, Sigmas };

inline CheckSet parse_check_set(const std::string& s) {
  if (s == "all") return CheckSet::All;
  if (s == "factorization") return CheckSet::Factorization;
  if (s == "minimal") return CheckSet::Minimal;
  if (s == "lemma21") return CheckSet::Lemma21;
  if (s == "sigmas") return CheckSet::Sigmas;
  throw Error(ErrorKind::ValidationError, "--check: unknown selection '" + s + "'");
}

// ---- formatting ----------------------------------------------------------------

inline std::string fmt_sci(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

inline std::string fmt_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

inline std::string fmt_complex(cplx z, double eps = 1e-12) {
  const bool re0 = std::abs(z.real()) <= eps, im0 = std::abs(z.imag()) <= eps;
  if (im0) return fmt_num(re0 ? 0.0 : z.real());
  if (re0) return fmt_num(z.imag()) + "i";
  return "(" + fmt_num(z.real()) + (z.imag() < 0 ? "-" : "+") + fmt_num(std::abs(z.imag())) + "i)";
}

inline std::string monomial(const Word& w, int d) {
  if (w.empty()) return "";
  if (d == 1) return w.length() == 1 ? "z" : "z^" + std::to_string(w.length());
  return "z[" + w.str() + "]";
}

/// Human-readable symbol in ambient coordinates, e.g. "[0.57735, 0.57735 z]".
inline std::string render_symbol(const MultiAnalyticOp& m, double eps = 1e-12) {
  const Index rows = m.cod.ambient_dim, cols = m.dom.ambient_dim;
  std::map<Word, CMatrix> amb;
  for (const auto& [w, c] : m.coeffs) {
    (void)c;
    amb.emplace(w, m.ambient_coeff(w));
  }
  std::string out = "[";
  for (Index i = 0; i < rows; ++i) {
    if (i) out += "; ";
    for (Index j = 0; j < cols; ++j) {
      if (j) out += ", ";
      std::string entry;
      for (const auto& [w, c] : amb) {
        const cplx z = c(i, j);
        if (std::abs(z) <= eps) continue;
        std::string term;
        const std::string mono = monomial(w, m.d());
        if (!mono.empty() && std::abs(z - cplx(1.0, 0.0)) <= eps)
          term = mono;
        else if (!mono.empty() && std::abs(z + cplx(1.0, 0.0)) <= eps)
          term = "-" + mono;
        else
          term = fmt_complex(z, eps) + (mono.empty() ? "" : " " + mono);
        if (!entry.empty()) entry += term.front() == '-' ? " " : " + ";
        entry += term;
      }
      out += entry.empty() ? "0" : entry;
    }
  }
  return out + "]";
}

inline json check_to_json(const CheckResult& c) {
  json j = {{"name", c.name}, {"residual", c.residual}, {"tol", c.tol}, {"pass", c.pass}};
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j;
}

inline json factors_to_json(const std::vector<NamedMatrix>& fs) {
  json out = json::array();
  for (const auto& f : fs) out.push_back({{"name", f.name}, {"matrix", matrix_to_json(f.matrix)}});
  return out;
}

// ---- check runner ----------------------------------------------------------------

namespace detail {

class CheckSink {
 public:
  explicit CheckSink(std::vector<CheckResult>& out) : out_(out) {}

  void add(const std::string& name, double residual, double tol, std::string detail = {}) {
    const bool ok = std::isfinite(residual) && residual <= tol;
    out_.push_back({name, residual, tol, ok, std::move(detail)});
  }

  /// Runs fn; a library error becomes a failing check carrying the message.
  bool guard(const std::string& name, double tol, const std::function<void()>& fn) {
    try {
      fn();
      return true;
    } catch (const Error& e) {
      out_.push_back({name, std::numeric_limits<double>::infinity(), tol, false,
                      e.what()});
      return false;
    }
  }

 private:
  std::vector<CheckResult>& out_;
};

inline void char_structure(CheckSink& sink, const std::string& label, const CharFn& c, double tol) {
  sink.add("cross_check[" + label + "]", c.cross_check_residual, tol);
  if (c.source == CharSource::Lifting) sink.add("consistency[" + label + "]", c.consistency_residual, tol);
  sink.add("norm_excess[" + label + "]", std::max(0.0, realized_norm(c.op) - 1.0), tol);
  sink.add("intertwining[" + label + "]", intertwining_residual(c.op), tol);
}

inline void sigma_checks(CheckSink& sink, const std::string& label, const Lifting& l, double tol) {
  sink.guard("sigma_E[" + label + "]", tol, [&] {
    const SigmaMap s = sigma_E(l);
    sink.add("sigma_E[" + label + "]", std::max({s.isometry_residual, s.coisometry_residual, s.relation_residual}), tol);
  });
  sink.guard("sigma_star_E[" + label + "]", tol, [&] {
    const SigmaMap s = sigma_star_E(l);
    sink.add("sigma_star_E[" + label + "]", std::max({s.isometry_residual, s.coisometry_residual, s.relation_residual}),
             tol);
  });
  sink.guard("julia_halmos[" + label + "]", tol,
             [&] { sink.add("julia_halmos[" + label + "]", julia_halmos(l.gamma).unitarity_residual, tol); });
}

}  // namespace detail

/// Runs the selected verifiers on a scenario at truncation N.
inline RunReport run_checks(const Scenario& s, CheckSet set, int N, double tol) {
  const auto t0 = std::chrono::steady_clock::now();
  RunReport r;
  r.scenario = s.name;
  r.degree = N;
  r.tolerance = tol;
  detail::CheckSink sink(r.checks);
  const bool all = set == CheckSet::All;
  const bool needs_second = set == CheckSet::Factorization || set == CheckSet::Minimal;
  if (needs_second && !s.second)
    throw Error(ErrorKind::ValidationError, "scenario has no second lifting level (A_prime)");

  std::optional<IteratedLifting> it;
  if (s.second) {
    sink.guard("iterate", tol, [&] {
      it = iterate(s.first, *s.second, 1e-9);
      sink.add("iterate", it->assembly_residual, tol);
    });
  }

  if (all || set == CheckSet::Lemma21) {
    sink.guard("lemma21[A]", tol, [&] { sink.add("lemma21[A]", lemma_maji_residual(s.first.A, N), tol); });
    if (s.second)
      sink.guard("lemma21[A_prime]", tol, [&] { sink.add("lemma21[A_prime]", lemma_maji_residual(s.second->A, N), tol); });
    if (it) sink.guard("lemma21[A_hat]", tol, [&] { sink.add("lemma21[A_hat]", lemma_maji_residual(it->A_hat(), N), tol); });
  }

  if (all || set == CheckSet::Sigmas) {
    detail::sigma_checks(sink, "E", s.first, tol);
    if (s.second) detail::sigma_checks(sink, "E_prime", *s.second, tol);
    if (it) {
      detail::sigma_checks(sink, "A_hat", it->hat, tol);
      detail::sigma_checks(sink, "E_prime_over_C", it->composite, tol);
    }
  }

  if (all) {
    const auto popescu = [&](const std::string& label, const RowContraction& a) {
      sink.guard("char[" + label + "]", tol, [&] { detail::char_structure(sink, label, char_popescu(a, N), tol); });
    };
    const auto lifting = [&](const std::string& label, const Lifting& l) {
      sink.guard("char[" + label + "]", tol, [&] {
        const CharFn c = char_lifting(l, N);
        detail::char_structure(sink, label, c, tol);
        r.notes.push_back("theta_" + label.substr(2) + " = " + render_symbol(c.op));
      });
    };
    popescu("M_A", s.first.A);
    lifting("M_C_E", s.first);
    if (s.second) {
      popescu("M_A_prime", s.second->A);
      lifting("M_E_E_prime", *s.second);
    }
    if (it) {
      popescu("M_A_hat", it->A_hat());
      lifting("M_C_E_prime", it->composite);
    }
  }

  if (it && (all || set == CheckSet::Factorization)) {
    sink.guard("factorization", tol, [&] {
      const FactorizationReport f = verify_factorization(*it, N, tol);
      sink.add("factorization", f.residual, tol);
      sink.add("factorization[C_columns]", f.residual_C, tol);
      sink.add("factorization[A_hat_columns]", f.residual_Ahat, tol);
      sink.add("factorization[range_leak]", f.leak, tol);
      r.sections["factorization"] = {{"residual", f.residual},
                                     {"residual_C", f.residual_C},
                                     {"residual_A_hat", f.residual_Ahat},
                                     {"leak", f.leak},
                                     {"unitarity", f.unitarity},
                                     {"pass", f.pass},
                                     {"factors", factors_to_json(f.factors)}};
    });
  }

  if (it && (all || set == CheckSet::Minimal)) {
    sink.guard("minimal_product", tol, [&] {
      const FactorizationReport m = verify_minimal_product(s.first, *s.second, N, tol);
      sink.add("minimal_product", m.residual, tol);
      sink.add("minimal_product[range_leak]", m.leak, tol);
      sink.add("minimal_product[tilde_E_minimal]", m.minimal ? 0.0 : 1.0, 0.0);
      r.notes.push_back("theta_C_Etilde = " + render_symbol(m.lhs));
      r.sections["minimal"] = {{"residual", m.residual},
                               {"leak", m.leak},
                               {"tilde_E_minimal", m.minimal},
                               {"pass", m.pass},
                               {"theta_C_Etilde", coeffs_to_json(m.lhs)},
                               {"factors", factors_to_json(m.factors)}};
    });
  }

  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline const char* check_set_name(CheckSet c) {
  switch (c) {
    case CheckSet::All: return "all";
    case CheckSet::Factorization: return "factorization";
    case CheckSet::Minimal: return "minimal";
    case CheckSet::Lemma21: return "lemma21";
    case CheckSet::Sigmas: return "sigmas";
  }
  return "all";
}

inline json report_to_json(const RunReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) checks.push_back(check_to_json(c));
  return {{"schema", kSchemaVersion},
          {"kind", "verify"},
          {"version", kVersion},
          {"scenario", r.scenario},
          {"check", r.selection},
          {"degree", r.degree},
          {"tolerance", r.tolerance},
          {"wall_time_s", r.wall_time},
          {"checks", checks},
          {"notes", r.notes},
          {"sections", r.sections},
          {"pass", r.pass()}};
}

inline std::string report_to_text(const RunReport& r) {
  std::string out = "scenario " + r.scenario + "  check=" + r.selection + "  N=" + std::to_string(r.degree) +
                    "  tol=" + fmt_sci(r.tolerance) + "\n";
  std::size_t width = 10;
  for (const auto& c : r.checks) width = std::max(width, c.name.size());
  for (const auto& c : r.checks) {
    out += std::string("  ") + (c.pass ? "PASS" : "FAIL") + "  " + c.name + std::string(width - c.name.size() + 2, ' ') +
           fmt_sci(c.residual) + "  (tol " + fmt_sci(c.tol) + ")";
    if (!c.detail.empty()) out += "  " + c.detail;
    out += "\n";
  }
  for (const auto& n : r.notes) out += "  " + n + "\n";
  std::size_t passed = 0;
  for (const auto& c : r.checks) passed += c.pass ? 1 : 0;
  out += std::string("result: ") + (r.pass() ? "PASS" : "FAIL") + " (" + std::to_string(passed) + "/" +
         std::to_string(r.checks.size()) + " checks)\n";
  return out;
}

// ---- characteristic function dump ----------------------------------------------

/// Coefficients of M_A, M_{A'}, M_{C,E}, M_{E,E'} and M_{C,E'} (those that
/// exist for the scenario).
inline json charfn_dump(const Scenario& s, int N) {
  json fns = json::array();
  const auto push = [&](const char* name, const MultiAnalyticOp& m) {
    fns.push_back({{"name", name},
                   {"domain_dim", m.dom.ambient_dim},
                   {"codomain_dim", m.cod.ambient_dim},
                   {"domain_rank", m.dom.rank()},
                   {"codomain_rank", m.cod.rank()},
                   {"symbol", render_symbol(m)},
                   {"coefficients", coeffs_to_json(m)}});
  };
  push("M_A", char_popescu(s.first.A, N).op);
  if (s.second) push("M_A_prime", char_popescu(s.second->A, N).op);
  push("M_C_E", char_lifting(s.first, N).op);
  if (s.second) {
    push("M_E_E_prime", char_lifting(*s.second, N).op);
    const IteratedLifting it = iterate(s.first, *s.second, 1e-9);
    push("M_C_E_prime", char_lifting(it.composite, N).op);
  }
  return {{"schema", kSchemaVersion}, {"kind", "charfn"}, {"version", kVersion},
          {"scenario", s.name},       {"degree", N},      {"functions", fns}};
}

// ---- randomized suite ----------------------------------------------------------

struct SuiteOptions {
  int seeds = 100;
  std::uint64_t seed_base = 0;
  int d_max = 2;
  int dim_max = 2;
  int degree = 5;
  double tol = 1e-8;
  unsigned threads = 0;  ///< 0: LIFTCHAR_THREADS or hardware concurrency
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  RandomShape shape;
  std::vector<CheckResult> checks;
  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }
};

struct SuiteSummaryRow {
  std::string check;
  double max_residual = 0.0;
  double tol = 0.0;
  int failures = 0;
  int count = 0;
};

struct SuiteResult {
  SuiteOptions options;
  std::vector<SeedOutcome> outcomes;  ///< sorted by seed
  std::vector<SuiteSummaryRow> summary;
  bool pass() const {
    return std::all_of(outcomes.begin(), outcomes.end(), [](const SeedOutcome& o) { return o.pass(); });
  }
};

inline unsigned thread_cap(unsigned requested) {
  unsigned n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("LIFTCHAR_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v > 0) n = static_cast<unsigned>(v);
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// All verifiers on one seeded random iterated lifting, plus the converse
/// construction on seeded random data.
inline SeedOutcome run_seed(std::uint64_t seed, const SuiteOptions& o) {
  SeedOutcome out;
  out.seed = seed;
  detail::CheckSink sink(out.checks);
  sink.guard("generate", o.tol, [&] {
    const RandomIterated ri = random_iterated(seed, o.d_max, o.dim_max);
    out.shape = ri.shape;
    Scenario s;
    s.name = "seed-" + std::to_string(seed);
    s.d = ri.shape.d;
    s.degree = o.degree;
    s.tolerance = o.tol;
    s.seed = seed;
    s.first = ri.first;
    s.second = ri.second;
    RunReport r = run_checks(s, CheckSet::All, o.degree, o.tol);
    for (auto& c : r.checks) out.checks.push_back(std::move(c));
  });
  sink.guard("converse", o.tol, [&] {
    const RandomConverse rc = random_converse(seed, o.d_max, o.dim_max);
    const ConverseResult cr = converse_construct(rc.input, o.degree, o.tol);
    sink.add("converse", cr.residual, o.tol);
    sink.add("converse[decomposition]", cr.decomposition_residual, o.tol);
  });
  return out;
}

inline std::string base_check_name(const std::string& name) {
  const auto p = name.find('[');
  return p == std::string::npos ? name : name.substr(0, p);
}

inline SuiteResult run_random_suite(const SuiteOptions& o) {
  SuiteResult res;
  res.options = o;
  const std::size_t n = static_cast<std::size_t>(std::max(o.seeds, 0));
  res.outcomes.resize(n);
  const unsigned nthreads = std::min<unsigned>(thread_cap(o.threads), static_cast<unsigned>(std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) res.outcomes[i] = run_seed(o.seed_base + i, o);
  };
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::map<std::string, SuiteSummaryRow> rows;
  for (const auto& oc : res.outcomes)
    for (const auto& c : oc.checks) {
      SuiteSummaryRow& row = rows[base_check_name(c.name)];
      row.check = base_check_name(c.name);
      row.max_residual = std::max(row.max_residual, c.residual);
      row.tol = c.tol;
      row.count += 1;
      row.failures += c.pass ? 0 : 1;
    }
  for (auto& [k, v] : rows) res.summary.push_back(v);
  return res;
}

inline json suite_to_json(const SuiteResult& r) {
  json summary = json::array();
  for (const auto& row : r.summary)
    summary.push_back({{"check", row.check},
                       {"max_residual", row.max_residual},
                       {"tol", row.tol},
                       {"count", row.count},
                       {"failures", row.failures}});
  json failures = json::array();
  json seeds = json::array();
  for (const auto& oc : r.outcomes) {
    seeds.push_back({{"seed", oc.seed},
                     {"d", oc.shape.d},
                     {"dims", {oc.shape.nC, oc.shape.nA, oc.shape.nAp}},
                     {"pass", oc.pass()}});
    for (const auto& c : oc.checks)
      if (!c.pass) {
        json f = check_to_json(c);
        f["seed"] = oc.seed;
        failures.push_back(std::move(f));
      }
  }
  const SuiteOptions& o = r.options;
  return {{"schema", kSchemaVersion},
          {"kind", "random-suite"},
          {"version", kVersion},
          {"seeds", o.seeds},
          {"seed_base", o.seed_base},
          {"d_max", o.d_max},
          {"dim_max", o.dim_max},
          {"degree", o.degree},
          {"tolerance", o.tol},
          {"summary", summary},
          {"instances", seeds},
          {"failures", failures},
          {"pass", r.pass()}};
}

inline std::string suite_to_text(const SuiteResult& r) {
  const SuiteOptions& o = r.options;
  std::string out = "random-suite seeds=" + std::to_string(o.seeds) + " seed_base=" + std::to_string(o.seed_base) +
                    " d_max=" + std::to_string(o.d_max) + " dim_max=" + std::to_string(o.dim_max) +
                    " N=" + std::to_string(o.degree) + " tol=" + fmt_sci(o.tol) + "\n";
  std::size_t width = 10;
  for (const auto& row : r.summary) width = std::max(width, row.check.size());
  out += "  check" + std::string(width - 3, ' ') + "max_residual  failures/count\n";
  for (const auto& row : r.summary)
    out += "  " + row.check + std::string(width - row.check.size() + 2, ' ') + fmt_sci(row.max_residual) + "     " +
           std::to_string(row.failures) + "/" + std::to_string(row.count) + "\n";
  for (const auto& oc : r.outcomes)
    for (const auto& c : oc.checks)
      if (!c.pass)
        out += "  FAIL seed=" + std::to_string(oc.seed) + " " + c.name + " residual=" + fmt_sci(c.residual) +
               (c.detail.empty() ? "" : " " + c.detail) + "\n    replay: liftchar random-suite --seeds 1 --seed-base " +
               std::to_string(oc.seed) + " --d-max " + std::to_string(o.d_max) + " --dim-max " +
               std::to_string(o.dim_max) + " --degree " + std::to_string(o.degree) + "\n";
  out += std::string("result: ") + (r.pass() ? "PASS" : "FAIL") + "\n";
  return out;
}

// ---- paper examples -------------------------------------------------------------

using ExpectedCoeffs = std::vector<std::pair<std::string, CMatrix>>;

/// Largest entry deviation between the ambient coefficients of m and the
/// expected list, over every word up to the truncation degree.
inline double coeff_mismatch(const MultiAnalyticOp& m, const ExpectedCoeffs& expected) {
  std::map<Word, CMatrix> want;
  for (const auto& [w, c] : expected) want.emplace(Word::parse(w, m.d()), c);
  double worst = 0.0;
  const Index rows = m.cod.ambient_dim, cols = m.dom.ambient_dim;
  for (const Word& w : m.basis.words()) {
    const CMatrix got = m.ambient_coeff(w);
    const auto it = want.find(w);
    const CMatrix ref = it == want.end() ? CMatrix(CMatrix::Zero(rows, cols)) : it->second;
    if (ref.rows() != got.rows() || ref.cols() != got.cols()) return std::numeric_limits<double>::infinity();
    if (got.size()) worst = std::max(worst, (got - ref).cwiseAbs().maxCoeff());
  }
  return worst;
}

inline CMatrix real_matrix(Index rows, Index cols, std::initializer_list<double> v) {
  CMatrix m(rows, cols);
  auto p = v.begin();
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = *p++;
  return m;
}

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
  return a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0;
}

inline RunReport run_sec3_example(double tol = 1e-10) {
  RunReport r;
  r.scenario = "sec3";
  r.selection = "paper";
  r.degree = 2;
  r.tolerance = tol;
  detail::CheckSink sink(r.checks);
  const double s3 = 1.0 / std::sqrt(3.0);
  sink.guard("sec3", tol, [&] {
    const Scenario s = parse_scenario_text(kSec3Scenario);
    const IteratedLifting it = iterate(s.first, *s.second);
    const CharFn m = char_lifting(it.composite, 2);
    sink.add("theta_C_Eprime", coeff_mismatch(m.op, {{"", real_matrix(1, 3, {s3, 0, 0})}, {"1", real_matrix(1, 3, {0, s3, s3})}}), tol);
    r.notes.push_back("theta_C_Eprime = " + render_symbol(m.op));
    sink.add("gamma_hat", max_abs_diff(it.gamma_hat().ambient(), real_matrix(1, 2, {s3, s3})), tol);
    const OperatorDefects gd = operator_defects(it.gamma_hat());
    sink.add("D_star_gamma_hat", max_abs_diff(gd.Dstar, real_matrix(1, 1, {s3})), tol);
    sink.add("sigma_Eprime", max_abs_diff(sigma_E(it.composite).sigma.ambient(), identity(3)), tol);
    sink.add("sigma_Ahat", max_abs_diff(sigma_E(it.hat).sigma.ambient(), identity(2)), tol);
    sink.add("sigma_star_Ahat", max_abs_diff(sigma_star_E(it.hat).sigma.ambient(), identity(2)), tol);
    const CharFn ma = char_popescu(s.first.A, 2), map = char_popescu(s.second->A, 2);
    sink.add("theta_A", coeff_mismatch(ma.op, {{"1", real_matrix(1, 1, {1})}}), tol);
    sink.add("theta_Aprime", coeff_mismatch(map.op, {{"1", real_matrix(1, 1, {1})}}), tol);
    const FactorizationReport f = verify_factorization(it, 2, tol);
    sink.add("factorization", f.residual, tol);
    sink.add("factorization[C_columns]", f.residual_C, tol);
    sink.add("factorization[A_hat_columns]", f.residual_Ahat, tol);
    sink.add("factorization[range_leak]", f.leak, tol);

    ConverseInput ci;
    ci.C = s.first.C;
    ci.A = s.first.A;
    ci.A_prime = s.second->A;
    ci.lambda = real_matrix(1, 2, {s3, s3});
    ci.U = identity(2);
    ci.f = 1;
    ci.f_star = 1;
    const ConverseResult cr = converse_construct(ci, 2, 1e-8);
    sink.add("converse", cr.residual, tol);
    sink.add("converse[E_prime]", max_entry_diff(cr.E_prime.E, s.second->E), tol);
    sink.add("converse[symbol]", coeff_mismatch(char_lifting(cr.E_prime, 2).op,
                                                {{"", real_matrix(1, 3, {s3, 0, 0})}, {"1", real_matrix(1, 3, {0, s3, s3})}}),
             tol);
  });
  return r;
}

inline RunReport run_sec4_example(double tol = 1e-10) {
  RunReport r;
  r.scenario = "sec4";
  r.selection = "paper";
  r.degree = 2;
  r.tolerance = tol;
  detail::CheckSink sink(r.checks);
  const double s2 = 1.0 / std::sqrt(2.0);
  sink.guard("sec4", tol, [&] {
    const Scenario s = parse_scenario_text(kSec4Scenario);
    const Lifting& first = s.first;
    const Lifting& second = *s.second;
    sink.add("gamma", max_abs_diff(first.gamma.ambient(), real_matrix(1, 1, {s2})), tol);
    sink.add("gamma_prime", max_abs_diff(second.gamma.ambient(), real_matrix(2, 1, {1, 0})), tol);
    const CharFn mce = char_lifting(first, 2), meep = char_lifting(second, 2);
    sink.add("theta_C_E", coeff_mismatch(mce.op, {{"", real_matrix(1, 2, {s2, 0})}, {"1", real_matrix(1, 2, {0, s2})}}), tol);
    sink.add("theta_E_Eprime",
             coeff_mismatch(meep.op, {{"", real_matrix(2, 3, {0, 0, 0, 0, 1, 0})}, {"1", real_matrix(2, 3, {0, 0, 1, 0, 0, 0})}}),
             tol);
    const MultiAnalyticOp prod = product(mce.op, meep.op);
    sink.add("theta_C_E_times_theta_E_Eprime", coeff_mismatch(prod, {{"1", real_matrix(1, 3, {0, s2, s2})}}), tol);
    const IteratedLifting it = iterate(first, second);
    sink.add("theta_C_Eprime",
             coeff_mismatch(char_lifting(it.composite, 2).op, {{"1", real_matrix(1, 3, {0, s2, s2})}}), tol);
    sink.add("gamma_hat", max_abs_diff(it.gamma_hat().ambient(), real_matrix(1, 2, {s2, s2})), tol);
    sink.add("E_minimal_over_C", is_minimal_lifting(first).minimal ? 0.0 : 1.0, 0.0);
    sink.add("Eprime_minimal_over_E", is_minimal_lifting(second).minimal ? 0.0 : 1.0, 0.0);
    sink.add("Eprime_not_minimal_over_C", is_minimal_lifting(it.composite).minimal ? 1.0 : 0.0, 0.0);

    const MinimalPart mp = minimal_part(first, second);
    const CMatrix paper_orbit = real_matrix(3, 2, {1, 0, 0, s2, 0, s2});
    sink.add("orbit_span", max_abs_diff(mp.H_tilde.projector(), paper_orbit * paper_orbit.adjoint()), tol);
    sink.add("E_tilde", max_abs_diff(mp.E_tilde[0], real_matrix(2, 2, {0, 0, 1, 0})), tol);
    sink.add("gamma_tilde", max_abs_diff(mp.tilde.gamma.ambient(), real_matrix(1, 1, {1})), tol);

    const FactorizationReport m = verify_minimal_product(first, second, 2, tol);
    sink.add("theta_C_Etilde", coeff_mismatch(m.lhs, {{"1", real_matrix(1, 2, {0, 1})}}), tol);
    r.notes.push_back("theta_C_Etilde = " + render_symbol(m.lhs));
    sink.add("minimal_product", m.residual, tol);
    sink.add("minimal_product[range_leak]", m.leak, tol);
    sink.add("minimal_product[tilde_E_minimal]", m.minimal ? 0.0 : 1.0, 0.0);

    // sigma^{-1} against P on D_Etilde (+) D_gamma; the H_perp basis vector is
    // aligned with the one in P before comparing.
    CMatrix sinv, hperp;
    for (const auto& f : m.factors) {
      if (f.name == "sigma_inverse") sinv = f.matrix;
      if (f.name == "basis_H_perp") hperp = f.matrix;
    }
    const CMatrix P = real_matrix(3, 3, {1, 0, 0, 0, s2, -s2, 0, s2, s2});
    double sres = std::numeric_limits<double>::infinity();
    if (sinv.rows() == 3 && sinv.cols() == 3 && hperp.rows() == 3 && hperp.cols() == 1) {
      const cplx phase = (P.col(2).adjoint() * hperp)(0, 0);
      CMatrix aligned = sinv;
      aligned.col(2) *= phase;
      sres = max_abs_diff(aligned.rightCols(2), P.rightCols(2));
      r.notes.push_back("H_perp basis phase relative to P: " + fmt_complex(phase));
    }
    sink.add("sigma_inverse_equals_P", sres, tol);
  });
  return r;
}

}  // namespace liftchar
