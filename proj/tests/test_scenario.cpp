#include <filesystem>
#include <string>

#include "liftchar/report.hpp"
#include "test_support.hpp"

using namespace testsupport;

namespace {

const std::string kSource = LIFTCHAR_SOURCE_DIR;

std::string base_scalar(const std::string& extra) {
  return R"({"schema": 1, "d": 1, "C": [[[0.5]]], "A": [[[0]]], "B": [[[0.5]]])" + extra + "}";
}

std::optional<ErrorKind> parse_kind(const std::string& text) {
  return thrown_kind([&] { parse_scenario_text(text); });
}

std::string message_of(const std::string& text) {
  try {
    parse_scenario_text(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

const json& function_named(const json& dump, const std::string& name) {
  for (const auto& f : dump["functions"])
    if (f["name"] == name) return f;
  FAIL("no function " << name);
  return dump;
}

CMatrix coefficient(const json& f, const std::string& word, int d) {
  for (const auto& [w, m] : coeffs_from_json(f["coefficients"], d, "coefficients"))
    if (w == Word::parse(word, d)) return m;
  return CMatrix();
}

}  // namespace

TEST_CASE("shipped scenarios match the embedded copies", "[scenario]") {
  CHECK(json::parse(read_file(kSource + "/scenarios/sec3.json")) == json::parse(kSec3Scenario));
  CHECK(json::parse(read_file(kSource + "/scenarios/sec4.json")) == json::parse(kSec4Scenario));
}

TEST_CASE("parsing the shipped scenarios", "[scenario]") {
  const Scenario s3 = parse_scenario(kSource + "/scenarios/sec3.json");
  REQUIRE(s3.second);
  CHECK(s3.name == "sec3");
  CHECK(s3.degree == 2);
  CHECK(s3.tolerance == 1e-10);
  CHECK(maxdiff(s3.second->E[0], mat(3, 3, {0.5, 0, 0, 0.5, 0, 0, 0.5, 0, 0})) < 1e-15);

  const Scenario s4 = parse_scenario(kSource + "/scenarios/sec4.json");
  REQUIRE(s4.second);
  CHECK(maxdiff(s4.second->E[0], mat(3, 3, {0, 0, 0, kS2, 0, 0, kS2, 0, 0})) < 1e-15);
  CHECK(maxdiff(s4.first.gamma.ambient(), scalar(kS2)) < 1e-12);
}

TEST_CASE("gamma inputs are checked for contractivity", "[scenario]") {
  const std::string text = read_file(kSource + "/tests/data/gamma_too_large.json");
  CHECK(parse_kind(text) == ErrorKind::ValidationError);
  CHECK(message_of(text).find("gamma not contractive") != std::string::npos);
  CHECK(thrown_kind([&] { parse_scenario(kSource + "/tests/data/corrupt_bprime.json"); }) == ErrorKind::ValidationError);
}

TEST_CASE("gamma and block inputs describe the same lifting", "[scenario]") {
  const Scenario g = parse_scenario_text(
      R"({"schema": 1, "d": 1, "C": [[[0]]], "A": [[[0]]], "gamma": [[0.7071067811865476]]})");
  CHECK(g.first_from_gamma);
  const Scenario b = parse_scenario(kSource + "/scenarios/sec4.json");
  CHECK(maxdiff(g.first.E[0], b.first.E[0]) < 1e-15);
}

TEST_CASE("malformed and invalid scenarios", "[scenario]") {
  CHECK(parse_kind("{\"schema\": 1, ") == ErrorKind::ParseError);
  CHECK(parse_kind("[1, 2]") == ErrorKind::ParseError);
  CHECK(thrown_kind([] { parse_scenario("/nonexistent/file.json"); }) == ErrorKind::ParseError);
  CHECK(parse_kind(R"({"schema": 2, "d": 1, "C": [[[0.5]]], "A": [[[0]]], "B": [[[0.5]]]})") == ErrorKind::ValidationError);
  CHECK(parse_kind(R"({"d": 1, "C": [[[0.5]]], "A": [[[0]]], "B": [[[0.5]]]})") == ErrorKind::ValidationError);
  CHECK(parse_kind(R"({"schema": 1, "d": 1, "C": [[[0.5, 0], [0]]], "A": [[[0]]], "B": [[[0.5]]]})") ==
        ErrorKind::ValidationError);
  CHECK(parse_kind(R"({"schema": 1, "d": 2, "C": [[[0.5]]], "A": [[[0]]], "B": [[[0.5]]]})") == ErrorKind::ValidationError);
  CHECK(parse_kind(R"({"schema": 1, "d": 1, "C": [[[0.5]]], "A": [[[0]]]})") == ErrorKind::ValidationError);
  CHECK(parse_kind(R"({"schema": 1, "d": 1, "C": [[[0.5]]], "A": [[[0]]], "B": [[[0.5]]], "gamma": [[0.1]]})") ==
        ErrorKind::ValidationError);
  CHECK(parse_kind(base_scalar(R"(, "B_prime": [[[0.5, 0]]])")) == ErrorKind::ValidationError);
  CHECK(parse_kind(R"({"schema": 1, "d": 1, "C": [[[2.0]]], "A": [[[0]]], "B": [[[0]]]})") == ErrorKind::ValidationError);
  CHECK(parse_kind(base_scalar(R"(, "degree": 0)")) == ErrorKind::ValidationError);
  CHECK(parse_kind(R"({"schema": 1, "d": 1, "C": [[["x"]]], "A": [[[0]]], "B": [[[0.5]]]})") == ErrorKind::ParseError);
}

TEST_CASE("complex entries accept plain numbers and pairs", "[scenario]") {
  const Scenario a = parse_scenario_text(base_scalar(""));
  const Scenario b = parse_scenario_text(R"({"schema": 1, "d": 1, "C": [[[[0.5, 0]]]], "A": [[[[0, 0]]]], "B": [[[[0.5, 0.0]]]]})");
  CHECK(maxdiff(a.first.E[0], b.first.E[0]) == 0.0);
  CHECK(complex_from_json(json::parse("[1, -2]"), "z") == cplx(1, -2));
  CHECK(complex_from_json(json::parse("3.5"), "z") == cplx(3.5, 0));
  CHECK(thrown_kind([] { complex_from_json(json::parse("[1, 2, 3]"), "z"); }) == ErrorKind::ParseError);
}

TEST_CASE("scenario serialization round-trips", "[scenario]") {
  const Scenario s = parse_scenario(kSource + "/tests/data/two_letters.json");
  const Scenario back = parse_scenario_text(scenario_to_json(s).dump());
  REQUIRE(back.second);
  CHECK(back.d == 2);
  for (int i = 0; i < 2; ++i) CHECK(maxdiff(back.second->E[i], s.second->E[i]) < 1e-15);
}

TEST_CASE("two-letter complex scenario verifies", "[scenario]") {
  const Scenario s = parse_scenario(kSource + "/tests/data/two_letters.json");
  CHECK(s.d == 2);
  const RunReport r = run_checks(s, CheckSet::All, 3, 1e-8);
  for (const auto& c : r.checks) INFO(c.name << " " << c.residual << " " << c.detail);
  CHECK(r.pass());
  CHECK(r.checks.size() > 20);
}

TEST_CASE("check selection", "[scenario]") {
  const Scenario s4 = parse_scenario(kSource + "/scenarios/sec4.json");
  const RunReport m = run_checks(s4, CheckSet::Minimal, 2, 1e-10);
  CHECK(m.pass());
  CHECK(m.sections.contains("minimal"));
  CHECK_FALSE(m.sections.contains("factorization"));
  const RunReport l = run_checks(s4, CheckSet::Lemma21, 2, 1e-10);
  for (const auto& c : l.checks) CHECK((c.name.rfind("lemma21", 0) == 0 || c.name == "iterate"));

  const Scenario one = parse_scenario_text(base_scalar(""));
  CHECK(thrown_kind([&] { run_checks(one, CheckSet::Factorization, 2, 1e-8); }) == ErrorKind::ValidationError);
  CHECK(run_checks(one, CheckSet::All, 3, 1e-8).pass());
  CHECK(parse_check_set("sigmas") == CheckSet::Sigmas);
  CHECK(thrown_kind([] { parse_check_set("everything"); }) == ErrorKind::ValidationError);
}

TEST_CASE("a failing check is reported, not thrown", "[scenario]") {
  const Scenario s3 = parse_scenario(kSource + "/scenarios/sec3.json");
  const RunReport r = run_checks(s3, CheckSet::Factorization, 2, -1.0);
  REQUIRE_FALSE(r.checks.empty());
  for (const auto& c : r.checks) CHECK_FALSE(c.pass);
  CHECK_FALSE(r.pass());
  const json j = report_to_json(r);
  CHECK(j["schema"] == 1);
  CHECK(j["pass"] == false);
  CHECK(report_to_text(r).find("result: FAIL") != std::string::npos);
}

TEST_CASE("characteristic-function dumps", "[scenario]") {
  const json d3 = charfn_dump(parse_scenario(kSource + "/scenarios/sec3.json"), 2);
  CHECK(d3["schema"] == 1);
  const json& m3 = function_named(d3, "M_C_E_prime");
  CHECK(maxdiff(coefficient(m3, "", 1), mat(1, 3, {kS3, 0, 0})) < 1e-12);
  CHECK(maxdiff(coefficient(m3, "1", 1), mat(1, 3, {0, kS3, kS3})) < 1e-12);
  CHECK(m3["symbol"] == "[0.57735, 0.57735 z, 0.57735 z]");

  const json d4 = charfn_dump(parse_scenario(kSource + "/scenarios/sec4.json"), 2);
  const json& m4 = function_named(d4, "M_C_E");
  CHECK(maxdiff(coefficient(m4, "", 1), mat(1, 2, {kS2, 0})) < 1e-12);
  CHECK(maxdiff(coefficient(m4, "1", 1), mat(1, 2, {0, kS2})) < 1e-12);

  const json di = charfn_dump(parse_scenario(kSource + "/tests/data/isometric_a.json"), 3);
  const json& ma = function_named(di, "M_A");
  CHECK(ma["domain_rank"] == 0);
  CHECK(ma["coefficients"].empty());
  CHECK(di["functions"].size() == 2);
}

TEST_CASE("atomic report writes", "[scenario]") {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "liftchar_test_atomic";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "out.json").string();
  write_atomic(path, "first\n");
  write_atomic(path, "second\n");
  CHECK(read_file(path) == "second\n");
  for (const auto& e : std::filesystem::directory_iterator(dir)) CHECK(e.path().filename() == "out.json");
  CHECK(thrown_kind([&] { write_atomic((dir / "missing" / "x.json").string(), "x"); }) == ErrorKind::ParseError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("random suite is deterministic and independent of thread count", "[scenario]") {
  SuiteOptions o;
  o.seeds = 4;
  o.degree = 3;
  o.threads = 1;
  const std::string a = suite_to_json(run_random_suite(o)).dump();
  o.threads = 3;
  const SuiteResult r = run_random_suite(o);
  CHECK(suite_to_json(r).dump() == a);
  CHECK(r.pass());
  CHECK(r.outcomes.size() == 4);
  CHECK(r.outcomes[2].seed == 2);
  CHECK(a.find("wall") == std::string::npos);
}

TEST_CASE("symbol rendering", "[scenario]") {
  CHECK(monomial(Word{}, 1).empty());
  CHECK(monomial(Word{1}, 1) == "z");
  CHECK(monomial(Word{1, 1, 1}, 1) == "z^3");
  CHECK(monomial(Word{1, 2}, 2) == "z[12]");
}
