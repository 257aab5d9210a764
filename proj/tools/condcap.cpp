#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "condcap/bie.hpp"
#include "condcap/error.hpp"
#include "condcap/harness.hpp"
#include "condcap/registry.hpp"

using namespace condcap;

namespace {

CondenserSpec load_spec(const std::string& file, const std::string& row) {
  if (!row.empty()) return reference_row(row).spec;
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::ParseError, "cannot read " + file);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

template <class R>
void emit(const R& report, const std::string& out) {
  if (out == "json")
    std::cout << report_json(report);
  else if (out == "csv")
    std::cout << report_csv(report);
  else
    std::cout << report_text(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capacities of planar condensers"};
  app.require_subcommand(1);

  Tolerances tol;
  ComputeOptions copt;
  int threads = 0;
  std::string out = "text";
  const std::vector<std::string> outs{"json", "csv", "text"};
  const std::vector<std::string> method_names{"theta", "sc", "bie", "fd"};

  auto add_tolerance_flags = [&](CLI::App* sub) {
    sub->add_option("--tol-theta", tol.theta, "Pass threshold for the theta method")->capture_default_str();
    sub->add_option("--tol-sc", tol.sc, "Pass threshold for the SC method")->capture_default_str();
    sub->add_option("--tol-bie", tol.bie, "Pass threshold for the BIE method")->capture_default_str();
    sub->add_option("--tol-fd", tol.fd, "Pass threshold for the FD oracle")->capture_default_str();
    sub->add_option("--threads", threads, "Worker pool size (default CONDCAP_THREADS or all cores)");
  };

  auto* compute_cmd = app.add_subcommand("compute", "Capacity of one condenser");
  compute_cmd->set_help_flag("--help", "Print this help message and exit");
  std::string spec_file, row_id, method = "bie";
  auto* spec_opt = compute_cmd->add_option("--spec", spec_file, "Condenser spec (JSON)");
  compute_cmd->add_option("--row", row_id, "Reference row id instead of a spec file, e.g. E1")->excludes(spec_opt);
  compute_cmd->add_option("--method", method, "theta|sc|bie|fd")->required()->check(CLI::IsMember(method_names));
  compute_cmd->add_option("--tol", copt.tol, "BIE refinement target (relative)");
  compute_cmd->add_option("--level", copt.level, "Fixed BIE refinement level");
  compute_cmd->add_option("--h", copt.h, "FD grid step");
  compute_cmd->add_option("--out", out, "json|csv|text")->check(CLI::IsMember(outs))->capture_default_str();

  auto* table_cmd = app.add_subcommand("table", "Compare against the reference tables");
  std::string table_id = "all", methods = "bie", families;
  table_cmd->add_option("--id", table_id, "1|2|3|4|all")->capture_default_str();
  table_cmd->add_option("--method", methods, "Comma-separated methods")->capture_default_str();
  table_cmd->add_option("--rows", families, "Restrict to families, e.g. EF");
  table_cmd->add_option("--out", out, "json|csv|text")->check(CLI::IsMember(outs))->capture_default_str();
  add_tolerance_flags(table_cmd);

  auto* cross_cmd = app.add_subcommand("cross", "Cross-validate two methods on reference rows");
  std::string cross_rows = "E", ma = "theta", mb = "bie";
  double combined = 0.0;
  cross_cmd->add_option("--rows", cross_rows, "Families, e.g. E or FG")->capture_default_str();
  cross_cmd->add_option("--a", ma, "First method")->check(CLI::IsMember(method_names))->capture_default_str();
  cross_cmd->add_option("--b", mb, "Second method")->check(CLI::IsMember(method_names))->capture_default_str();
  cross_cmd->add_option("--tol", combined, "Combined tolerance (default: the larger method tolerance)");
  cross_cmd->add_option("--out", out, "json|csv|text")->check(CLI::IsMember(outs))->capture_default_str();
  add_tolerance_flags(cross_cmd);

  auto* density_cmd = app.add_subcommand("density", "BIE density samples as CSV");
  int density_level = 2;
  auto* dspec = density_cmd->add_option("--spec", spec_file, "Condenser spec (JSON)");
  density_cmd->add_option("--row", row_id, "Reference row id")->excludes(dspec);
  density_cmd->add_option("--level", density_level, "Refinement level")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (compute_cmd->parsed()) {
      if (spec_file.empty() && row_id.empty()) throw Error(ErrorCode::ParseError, "give --spec or --row");
      const CapacityResult r = compute(load_spec(spec_file, row_id), method_from_string(method), copt);
      if (out == "json")
        std::cout << result_json(r);
      else if (out == "csv")
        std::cout << result_csv(r);
      else
        std::cout << result_text(r);
      return r.converged ? 0 : 1;
    }
    if (table_cmd->parsed()) {
      const TableReport rep = run_table(select_rows(table_id, families), parse_methods(methods), tol, copt, threads);
      emit(rep, out);
      return rep.all_pass() ? 0 : 1;
    }
    if (cross_cmd->parsed()) {
      const CrossReport rep = cross_validate(family_rows(cross_rows), method_from_string(ma), method_from_string(mb),
                                             tol, copt, threads, combined);
      emit(rep, out);
      return rep.pass ? 0 : 1;
    }
    if (density_cmd->parsed()) {
      if (spec_file.empty() && row_id.empty()) throw Error(ErrorCode::ParseError, "give --spec or --row");
      write_density_csv(std::cout, build_contours(load_spec(spec_file, row_id)), density_level);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "condcap: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
