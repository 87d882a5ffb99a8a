#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "liftchar/report.hpp"

namespace {

using namespace liftchar;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitInvalid = 2;

bool is_input_error(ErrorKind k) { return k == ErrorKind::ParseError || k == ErrorKind::ValidationError; }

int cmd_verify(const std::string& path, std::optional<int> degree, std::optional<double> tol, const std::string& check,
               const std::string& out) {
  const CheckSet set = parse_check_set(check);
  const Scenario s = parse_scenario(path);
  const int N = degree.value_or(s.degree);
  const double t = tol.value_or(s.tolerance);
  if (N < 1) throw Error(ErrorKind::ValidationError, "--degree: must be positive");
  RunReport r = run_checks(s, set, N, t);
  r.selection = check_set_name(set);
  std::cout << report_to_text(r);
  if (!out.empty()) write_atomic(out, report_to_json(r).dump(2) + "\n");
  return r.pass() ? kExitPass : kExitFail;
}

int cmd_charfn(const std::string& path, std::optional<int> degree, const std::string& out) {
  const Scenario s = parse_scenario(path);
  const int N = degree.value_or(s.degree);
  if (N < 1) throw Error(ErrorKind::ValidationError, "--degree: must be positive");
  const json dump = charfn_dump(s, N);
  if (out.empty()) {
    std::cout << dump.dump(2) << "\n";
  } else {
    write_atomic(out, dump.dump(2) + "\n");
    for (const auto& f : dump["functions"]) std::cout << f["name"].get<std::string>() << " = " << f["symbol"].get<std::string>() << "\n";
  }
  return kExitPass;
}

int cmd_random_suite(const SuiteOptions& o, const std::string& out) {
  if (o.seeds < 0 || o.d_max < 1 || o.d_max > 9 || o.dim_max < 1 || o.degree < 1 || !(o.tol > 0))
    throw Error(ErrorKind::ValidationError, "random-suite: invalid option value");
  const auto t0 = std::chrono::steady_clock::now();
  const SuiteResult r = run_random_suite(o);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << suite_to_text(r);
  if (!out.empty()) write_atomic(out, suite_to_json(r).dump(2) + "\n");
  std::fprintf(stderr, "elapsed %.3f s\n", secs);
  return r.pass() ? kExitPass : kExitFail;
}

int cmd_paper_examples(double tol, const std::string& out) {
  RunReport r3 = run_sec3_example(tol);
  RunReport r4 = run_sec4_example(tol);
  std::cout << report_to_text(r3) << report_to_text(r4);
  if (!out.empty()) {
    const json j = {{"schema", kSchemaVersion},
                    {"kind", "paper-examples"},
                    {"version", kVersion},
                    {"reports", {report_to_json(r3), report_to_json(r4)}},
                    {"pass", r3.pass() && r4.pass()}};
    write_atomic(out, j.dump(2) + "\n");
  }
  return r3.pass() && r4.pass() ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Characteristic functions of iterated liftings of row contractions"};
  app.require_subcommand(1);

  std::string path, out, check = "all";
  std::optional<int> degree;
  std::optional<double> tol;
  auto* verify = app.add_subcommand("verify", "Run verifiers on a scenario file");
  verify->add_option("scenario", path, "Scenario JSON file")->required();
  verify->add_option("--degree", degree, "Fock truncation degree N");
  verify->add_option("--tol", tol, "Verification tolerance");
  verify->add_option("--check", check, "all|factorization|minimal|lemma21|sigmas");
  verify->add_option("--out", out, "Write the JSON report here");

  SuiteOptions so;
  auto* suite = app.add_subcommand("random-suite", "Verify seeded random iterated liftings");
  suite->add_option("--seeds", so.seeds, "Number of seeds");
  suite->add_option("--seed-base", so.seed_base, "First seed");
  suite->add_option("--d-max", so.d_max, "Largest number of letters");
  suite->add_option("--dim-max", so.dim_max, "Largest space dimension per layer");
  suite->add_option("--degree", so.degree, "Fock truncation degree N");
  suite->add_option("--tol", so.tol, "Verification tolerance");
  suite->add_option("--out", out, "Write the JSON report here");

  auto* charfn = app.add_subcommand("charfn", "Dump characteristic-function coefficients");
  charfn->add_option("scenario", path, "Scenario JSON file")->required();
  charfn->add_option("--degree", degree, "Fock truncation degree N");
  charfn->add_option("--out", out, "Write the dump here");

  double paper_tol = 1e-10;
  auto* paper = app.add_subcommand("paper-examples", "Reproduce the two worked examples");
  paper->add_option("--tol", paper_tol, "Reproduction tolerance");
  paper->add_option("--out", out, "Write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*verify) return cmd_verify(path, degree, tol, check, out);
    if (*suite) return cmd_random_suite(so, out);
    if (*charfn) return cmd_charfn(path, degree, out);
    if (*paper) return cmd_paper_examples(paper_tol, out);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return is_input_error(e.kind()) ? kExitInvalid : kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitInvalid;
}
