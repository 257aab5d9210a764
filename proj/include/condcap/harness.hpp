#pragma once

#include <string>
#include <vector>

#include "condcap/bie.hpp"
#include "condcap/registry.hpp"
#include "condcap/result.hpp"

namespace condcap {

// Pass thresholds on the relative error against the tabulated value.
struct Tolerances {
  double theta = 1e-10;
  double sc = 1e-6;
  double bie = 5e-4;
  double fd = 3e-2;

  double of(Method m) const;
};

struct ComputeOptions {
  double tol = 0.0;   // BIE refinement target; 0 uses the BIE tolerance
  int level = -1;     // fixed BIE level, -1 refines adaptively
  double h = 0.0;     // FD grid step, 0 picks one automatically
  int max_level = 6;
  BieOptions bie;
};

// Throws METHOD_SCOPE unless the method covers the condenser: theta needs
// two slots (family E), SC a bounded doubly connected condenser, BIE and
// FD take anything.
void check_scope(const CondenserSpec& spec, Method method);
bool in_scope(const CondenserSpec& spec, Method method);

CapacityResult compute(const CondenserSpec& spec, Method method, const ComputeOptions& opt = {});

struct RowOutcome {
  std::string id;
  std::string source;
  Method method = Method::BIE;
  double expected = 0.0;
  double value = 0.0;
  double rel_err = 0.0;  // signed, (value - expected) / expected
  double tolerance = 0.0;
  bool pass = false;
  std::string error;     // "CODE: detail" when the solver threw
  double seconds = 0.0;
  CapacityResult result;
};

struct TableReport {
  std::vector<RowOutcome> rows;  // by row id, then method in request order

  bool all_pass() const;
  int passed() const;
};

// "1" .. "4" or "all"; anything else is a PARSE_ERROR.
std::vector<ReferenceRow> select_rows(const std::string& table_id, const std::string& families = "");

TableReport run_table(const std::vector<ReferenceRow>& rows, const std::vector<Method>& methods,
                      const Tolerances& tol = {}, const ComputeOptions& opt = {}, int workers = 0);
TableReport run_table(const std::string& table_id, const std::vector<Method>& methods,
                      const Tolerances& tol = {}, const ComputeOptions& opt = {}, int workers = 0);

struct CrossRow {
  std::string id;
  double expected = 0.0;
  double a = 0.0;
  double b = 0.0;
  double rel_diff = 0.0;   // |a - b| / |b|
  // Both methods miss the table beyond their own tolerance on the same side.
  bool same_side_miss = false;
  std::string error;
};

struct CrossReport {
  Method a = Method::Theta;
  Method b = Method::BIE;
  std::vector<CrossRow> rows;
  double max_rel_diff = 0.0;
  double tolerance = 0.0;  // max of the two method tolerances unless overridden
  bool pass = false;
};

// Throws METHOD_SCOPE before computing if either method misses a row.
CrossReport cross_validate(const std::vector<ReferenceRow>& rows, Method a, Method b, const Tolerances& tol = {},
                           const ComputeOptions& opt = {}, int workers = 0, double combined_tol = 0.0);

// Reports.  JSON and CSV carry no timings, so serial runs are byte-identical.
std::string result_json(const CapacityResult& r);
std::string result_csv(const CapacityResult& r);
std::string result_text(const CapacityResult& r);
std::string report_json(const TableReport& r);
std::string report_csv(const TableReport& r);
std::string report_text(const TableReport& r);
std::string report_json(const CrossReport& r);
std::string report_csv(const CrossReport& r);
std::string report_text(const CrossReport& r);

std::vector<Method> parse_methods(const std::string& comma_list);

}  // namespace condcap
