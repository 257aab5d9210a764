#include <doctest.h>

#include <chrono>
#include <set>

#include <json.hpp>

#include "condcap/error.hpp"
#include "condcap/harness.hpp"

using namespace condcap;

TEST_CASE("registry integrity") {
  const auto& rows = reference_rows();
  CHECK(rows.size() == 42);
  std::set<std::string> ids;
  for (const auto& r : rows) {
    ids.insert(r.id);
    CHECK(r.expected > 0);
    CHECK(std::stod(r.expected_text) == r.expected);
    CHECK_NOTHROW(validate(r.spec));
  }
  CHECK(ids.size() == 42);
  CHECK(table_rows(1).size() == 12);
  CHECK(table_rows(2).size() == 6);
  CHECK(table_rows(3).size() == 12);
  CHECK(table_rows(4).size() == 12);
  CHECK(reference_row("B1").source == "Table 1");
  CHECK(reference_row("C4").source == "Table 2");
  CHECK(reference_row("E6").source == "Table 3");
  CHECK(reference_row("G2").source == "Table 4");
  CHECK(registry_checksum() == pinned_registry_checksum());
  CHECK_THROWS_AS(reference_row("H1"), Error);
}

TEST_CASE("tabulated values") {
  CHECK(reference_row("E1").expected_text == "1.56994325474948999");
  CHECK(reference_row("E6").expected_text == "2.35241226225174034");
  CHECK(reference_row("F1").expected_text == "5.6327570222823258486");
  CHECK(reference_row("F4").expected_text == "28.5499438953187884");
  CHECK(reference_row("G2").expected_text == "16.076240045355723868");
  CHECK(reference_row("G6").expected_text == "21.116597096285347718");
  CHECK(reference_row("A1").expected_text == "9.72079120617096926");
  CHECK(reference_row("D1").expected_text == "6.298067056123278293");
}

TEST_CASE("compute dispatches and enforces scope") {
  CHECK(compute(reference_row("E1").spec, Method::Theta).value ==
        doctest::Approx(1.56994325474948999).epsilon(1e-10));
  CHECK(compute(reference_row("G2").spec, Method::SC).value == doctest::Approx(16.076240045355723868).epsilon(1e-6));

  const auto t0 = std::chrono::steady_clock::now();
  for (auto [id, m] : {std::pair{"A1", Method::Theta}, std::pair{"F1", Method::Theta}, std::pair{"E1", Method::SC},
                       std::pair{"B1", Method::SC}, std::pair{"D1", Method::SC}}) {
    CAPTURE(id);
    CHECK_FALSE(in_scope(reference_row(id).spec, m));
    try {
      compute(reference_row(id).spec, m);
      FAIL("expected METHOD_SCOPE");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MethodScope);
    }
  }
  // Rejected before any solver work.
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 0.5);
  for (const auto& r : reference_rows()) {
    CHECK(in_scope(r.spec, Method::BIE));
    CHECK(in_scope(r.spec, Method::FD));
  }
}

TEST_CASE("compute options reach the solvers") {
  ComputeOptions opt;
  opt.level = 1;
  const CapacityResult r = compute(reference_row("F1").spec, Method::BIE, opt);
  CHECK(r.get("level") == "1");
  opt.level = -1;
  opt.tol = 1e-7;
  const CapacityResult t = compute(reference_row("F1").spec, Method::BIE, opt);
  CHECK(t.rel_err_estimate <= 1e-7);
  ComputeOptions fd;
  fd.h = 0.5;
  CHECK(compute(reference_row("F1").spec, Method::FD, fd).get("h") == "0.5");
}

TEST_CASE("table 3 with theta and table 4 with SC") {
  const TableReport t3 = run_table(select_rows("3", "E"), {Method::Theta});
  CHECK(t3.rows.size() == 6);
  CHECK(t3.passed() == 6);
  CHECK(t3.all_pass());
  const TableReport t4 = run_table("4", {Method::SC});
  CHECK(t4.rows.size() == 12);
  CHECK(t4.passed() == 12);
}

TEST_CASE("failing rows and solver errors are reported, not thrown") {
  Tolerances tight;
  tight.bie = 1e-30;
  const TableReport r = run_table(select_rows("4", "F"), {Method::BIE}, tight);
  CHECK_FALSE(r.all_pass());
  CHECK(r.passed() == 0);
  const TableReport s = run_table(select_rows("1", "A"), {Method::Theta});
  CHECK(s.passed() == 0);
  for (const auto& o : s.rows) CHECK(o.error.rfind("METHOD_SCOPE", 0) == 0);
  CHECK_THROWS_AS(select_rows("5"), Error);
}

TEST_CASE("reports are ordered and deterministic") {
  const auto rows = select_rows("all", "EFG");
  const TableReport a = run_table(rows, {Method::Theta, Method::SC}, {}, {}, 1);
  const TableReport b = run_table(rows, {Method::Theta, Method::SC}, {}, {}, 1);
  const TableReport c = run_table(rows, {Method::Theta, Method::SC}, {}, {}, 3);
  CHECK(report_json(a) == report_json(b));
  CHECK(report_csv(a) == report_csv(b));
  CHECK(report_json(a) == report_json(c));
  for (std::size_t i = 1; i < a.rows.size(); ++i) CHECK(a.rows[i - 1].id <= a.rows[i].id);

  const auto j = nlohmann::json::parse(report_json(a));
  CHECK(j["rows"].size() == rows.size() * 2);
  CHECK(j["total"] == rows.size() * 2);
  CHECK(j["rows"][0]["id"] == "E1");
  CHECK(j["rows"][0]["method"] == "theta");
  CHECK(j["rows"][1]["error"].get<std::string>().rfind("METHOD_SCOPE", 0) == 0);
  // Values carry 17 significant digits.
  CHECK(report_json(a).find("1.5699432547494") != std::string::npos);

  const std::string csv = report_csv(a);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(rows.size() * 2 + 1));
  const std::string txt = report_text(a);
  CHECK(txt.find("pass") != std::string::npos);
}

TEST_CASE("cross validation") {
  const CrossReport e = cross_validate(family_rows("E"), Method::Theta, Method::BIE);
  CHECK(e.rows.size() == 6);
  CHECK(e.pass);
  CHECK(e.max_rel_diff <= 5e-4);
  for (const auto& r : e.rows) CHECK_FALSE(r.same_side_miss);

  const CrossReport fd = cross_validate(family_rows("FG"), Method::SC, Method::FD);
  CHECK(fd.tolerance == 3e-2);
  CHECK(fd.pass);

  CHECK(nlohmann::json::parse(report_json(e))["pass"] == true);
  try {
    cross_validate(family_rows("EF"), Method::Theta, Method::BIE);
    FAIL("expected METHOD_SCOPE");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::MethodScope);
  }
}

TEST_CASE("method lists") {
  const auto m = parse_methods("theta,SC,bie");
  REQUIRE(m.size() == 3);
  CHECK(m[1] == Method::SC);
  CHECK_THROWS_AS(parse_methods("theta,fem"), Error);
  CHECK_THROWS_AS(parse_methods(""), Error);
}

TEST_CASE("single results serialize") {
  const CapacityResult r = compute(reference_row("E2").spec, Method::Theta);
  const auto j = nlohmann::json::parse(result_json(r));
  CHECK(j["method"] == "theta");
  CHECK(j["value"].get<double>() == r.value);
  CHECK(j["diagnostics"].contains("tau_im"));
  CHECK_FALSE(j["diagnostics"].contains("seconds"));
  CHECK(result_csv(r).rfind("method,value", 0) == 0);
  CHECK(result_text(r).find("capacity") != std::string::npos);
}
