#include "condcap/harness.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "condcap/error.hpp"
#include "condcap/fd.hpp"
#include "condcap/parallel.hpp"
#include "condcap/sc.hpp"
#include "condcap/theta.hpp"

namespace condcap {

double Tolerances::of(Method m) const {
  switch (m) {
    case Method::Theta: return theta;
    case Method::SC: return sc;
    case Method::BIE: return bie;
    case Method::FD: return fd;
  }
  return 0.0;
}

namespace {

std::string scope_problem(const CondenserSpec& spec, Method method) {
  if (method == Method::Theta) {
    if (spec.family != Family::E) return "theta method covers two-slot condensers (family E) only";
    return {};
  }
  if (method == Method::SC) {
    const ContourSet set = build_contours(spec);
    int inner = 0;
    for (const Contour& c : set.contours) {
      if (c.kind == ContourKind::Circle) return "SC method needs polygonal boundaries";
      inner += c.terminal == Terminal::Inner;
    }
    if (set.contours.size() != 2 || inner != 1) return "SC method covers doubly connected condensers only";
    if (!set.bounded) return "SC method needs a bounded condenser";
  }
  return {};
}

// Diagnostics that vary between identical runs stay out of the
// machine-readable reports.
bool volatile_key(const std::string& k) { return k.find("seconds") != std::string::npos; }

std::string q(const std::string& s) { return nlohmann::json(s).dump(); }

std::string num(double v) {
  if (!std::isfinite(v)) return "null";
  return format17(v);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string diagnostics_json(const CapacityResult& r) {
  std::string out = "{";
  bool first = true;
  for (const auto& [k, v] : r.diagnostics) {
    if (volatile_key(k)) continue;
    out += (first ? "" : ", ") + q(k) + ": " + q(v);
    first = false;
  }
  return out + "}";
}

std::string error_text(const std::exception& e) {
  if (dynamic_cast<const Error*>(&e)) return e.what();
  return std::string("ERROR: ") + e.what();
}

std::string pad(std::string s, std::size_t w, bool right = false) {
  if (s.size() >= w) return s;
  return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
}

std::string sci(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.*e", digits, v);
  return buf;
}

}  // namespace

bool in_scope(const CondenserSpec& spec, Method method) { return scope_problem(spec, method).empty(); }

void check_scope(const CondenserSpec& spec, Method method) {
  const std::string why = scope_problem(spec, method);
  if (!why.empty()) throw Error(ErrorCode::MethodScope, why);
}

CapacityResult compute(const CondenserSpec& spec, Method method, const ComputeOptions& opt) {
  check_scope(spec, method);
  try {
    switch (method) {
      case Method::Theta:
        return capacity_E({spec.x[1] - spec.x[0], spec.y[0], spec.y[1]});
      case Method::SC:
        return capacity_sc(spec);
      case Method::BIE: {
        const ContourSet set = build_contours(spec);
        if (opt.level >= 0) return capacity_bie_at_level(set, opt.level, opt.bie);
        return capacity_bie(set, opt.tol > 0 ? opt.tol : Tolerances{}.bie, opt.max_level, opt.bie);
      }
      case Method::FD:
        return capacity_fd(spec, opt.h);
    }
  } catch (const Error& e) {
    const std::string what = e.what();
    const std::size_t colon = what.find(": ");
    throw Error(e.code(), to_string(method) + " solver: " + (colon == std::string::npos ? what : what.substr(colon + 2)));
  }
  throw Error(ErrorCode::MethodScope, "unknown method");
}

bool TableReport::all_pass() const {
  for (const auto& r : rows)
    if (!r.pass) return false;
  return true;
}

int TableReport::passed() const {
  int n = 0;
  for (const auto& r : rows) n += r.pass;
  return n;
}

std::vector<ReferenceRow> select_rows(const std::string& table_id, const std::string& families) {
  std::vector<ReferenceRow> rows;
  if (table_id == "all") {
    rows = table_rows(0);
  } else if (table_id.size() == 1 && table_id[0] >= '1' && table_id[0] <= '4') {
    rows = table_rows(table_id[0] - '0');
  } else {
    throw Error(ErrorCode::ParseError, "table id must be 1, 2, 3, 4 or all");
  }
  if (families.empty()) return rows;
  std::vector<ReferenceRow> kept;
  for (auto& r : rows)
    for (char f : families)
      if (std::toupper(static_cast<unsigned char>(f)) == r.id[0]) kept.push_back(r);
  return kept;
}

TableReport run_table(const std::vector<ReferenceRow>& rows, const std::vector<Method>& methods,
                      const Tolerances& tol, const ComputeOptions& opt, int workers) {
  TableReport rep;
  std::vector<const CondenserSpec*> specs;
  for (const auto& row : rows)
    for (Method m : methods) {
      specs.push_back(&row.spec);
      RowOutcome o;
      o.id = row.id;
      o.source = row.source;
      o.method = m;
      o.expected = row.expected;
      o.tolerance = tol.of(m);
      rep.rows.push_back(std::move(o));
    }
  const int n = static_cast<int>(rep.rows.size());
  const int w = worker_count(workers);
  ComputeOptions inner = opt;
  if (w > 1 && inner.bie.threads == 0) inner.bie.threads = 1;
  if (inner.tol <= 0) inner.tol = tol.bie;

  parallel_for(n, w, [&](int i) {
    RowOutcome& o = rep.rows[i];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o.result = compute(*specs[i], o.method, inner);
      o.value = o.result.value;
      o.rel_err = (o.value - o.expected) / o.expected;
      o.pass = std::abs(o.rel_err) <= o.tolerance;
    } catch (const std::exception& e) {
      o.error = error_text(e);
      o.pass = false;
    }
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  return rep;
}

TableReport run_table(const std::string& table_id, const std::vector<Method>& methods, const Tolerances& tol,
                      const ComputeOptions& opt, int workers) {
  return run_table(select_rows(table_id), methods, tol, opt, workers);
}

CrossReport cross_validate(const std::vector<ReferenceRow>& rows, Method a, Method b, const Tolerances& tol,
                           const ComputeOptions& opt, int workers, double combined_tol) {
  for (const auto& r : rows) {
    check_scope(r.spec, a);
    check_scope(r.spec, b);
  }
  const TableReport t = run_table(rows, {a, b}, tol, opt, workers);
  CrossReport rep;
  rep.a = a;
  rep.b = b;
  rep.tolerance = combined_tol > 0 ? combined_tol : std::max(tol.of(a), tol.of(b));
  rep.pass = true;
  for (std::size_t i = 0; i + 1 < t.rows.size(); i += 2) {
    const RowOutcome& ra = t.rows[i];
    const RowOutcome& rb = t.rows[i + 1];
    CrossRow c;
    c.id = ra.id;
    c.expected = ra.expected;
    if (!ra.error.empty() || !rb.error.empty()) {
      c.error = !ra.error.empty() ? ra.error : rb.error;
      rep.pass = false;
      rep.rows.push_back(c);
      continue;
    }
    c.a = ra.value;
    c.b = rb.value;
    c.rel_diff = std::abs(c.a - c.b) / std::abs(c.b);
    const bool miss_a = std::abs(ra.rel_err) > ra.tolerance;
    const bool miss_b = std::abs(rb.rel_err) > rb.tolerance;
    c.same_side_miss = miss_a && miss_b && (ra.rel_err > 0) == (rb.rel_err > 0);
    rep.max_rel_diff = std::max(rep.max_rel_diff, c.rel_diff);
    if (c.rel_diff > rep.tolerance || c.same_side_miss) rep.pass = false;
    rep.rows.push_back(c);
  }
  return rep;
}

std::vector<Method> parse_methods(const std::string& comma_list) {
  std::vector<Method> out;
  std::stringstream ss(comma_list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(method_from_string(item));
  if (out.empty()) throw Error(ErrorCode::ParseError, "no method given");
  return out;
}

std::string result_json(const CapacityResult& r) {
  std::ostringstream os;
  os << "{\"method\": " << q(to_string(r.method)) << ", \"value\": " << num(r.value)
     << ", \"rel_err_estimate\": " << num(r.rel_err_estimate) << ", \"converged\": " << (r.converged ? "true" : "false")
     << ", \"diagnostics\": " << diagnostics_json(r) << "}\n";
  return os.str();
}

std::string result_csv(const CapacityResult& r) {
  std::string out = "method,value,rel_err_estimate,converged\n";
  out += to_string(r.method) + "," + num(r.value) + "," + num(r.rel_err_estimate) + "," +
         (r.converged ? "true" : "false") + "\n";
  return out;
}

std::string result_text(const CapacityResult& r) {
  std::ostringstream os;
  os << "method            " << to_string(r.method) << "\n";
  os << "capacity          " << format17(r.value) << "\n";
  os << "rel_err_estimate  " << format17(r.rel_err_estimate) << "\n";
  if (!r.converged) os << "converged         false\n";
  for (const auto& [k, v] : r.diagnostics) os << pad(k, 18) << v << "\n";
  return os.str();
}

std::string report_json(const TableReport& r) {
  std::ostringstream os;
  os << "{\n  \"rows\": [\n";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const RowOutcome& o = r.rows[i];
    os << "    {\"id\": " << q(o.id) << ", \"source\": " << q(o.source) << ", \"method\": " << q(to_string(o.method))
       << ", \"expected\": " << num(o.expected);
    if (o.error.empty())
      os << ", \"value\": " << num(o.value) << ", \"rel_err\": " << num(o.rel_err)
         << ", \"rel_err_estimate\": " << num(o.result.rel_err_estimate);
    else
      os << ", \"error\": " << q(o.error);
    os << ", \"tolerance\": " << num(o.tolerance) << ", \"pass\": " << (o.pass ? "true" : "false");
    if (o.error.empty()) os << ", \"diagnostics\": " << diagnostics_json(o.result);
    os << "}" << (i + 1 < r.rows.size() ? "," : "") << "\n";
  }
  os << "  ],\n  \"passed\": " << r.passed() << ",\n  \"total\": " << r.rows.size()
     << ",\n  \"all_pass\": " << (r.all_pass() ? "true" : "false") << "\n}\n";
  return os.str();
}

std::string report_csv(const TableReport& r) {
  std::string out = "id,method,expected,value,rel_err,tolerance,pass,error\n";
  for (const RowOutcome& o : r.rows)
    out += o.id + "," + to_string(o.method) + "," + num(o.expected) + "," + (o.error.empty() ? num(o.value) : "") +
           "," + (o.error.empty() ? num(o.rel_err) : "") + "," + num(o.tolerance) + "," + (o.pass ? "true" : "false") +
           "," + csv_field(o.error) + "\n";
  return out;
}

std::string report_text(const TableReport& r) {
  std::ostringstream os;
  os << pad("row", 5) << pad("method", 8) << pad("computed", 26) << pad("expected", 26) << pad("rel.err", 11)
     << pad("tol", 9) << pad("status", 8) << pad("time[s]", 9, true) << "\n";
  for (const RowOutcome& o : r.rows) {
    char t[32], tl[32];
    std::snprintf(t, sizeof t, "%.2f", o.seconds);
    std::snprintf(tl, sizeof tl, "%.0e", o.tolerance);
    os << pad(o.id, 5) << pad(to_string(o.method), 8);
    if (o.error.empty())
      os << pad(format17(o.value), 26) << pad(format17(o.expected), 26) << pad(sci(o.rel_err), 11);
    else
      os << pad("-", 26) << pad(format17(o.expected), 26) << pad("-", 11);
    os << pad(tl, 9) << pad(o.pass ? "pass" : "FAIL", 8) << pad(t, 9, true) << "\n";
    if (!o.error.empty()) os << "     " << o.error << "\n";
  }
  os << r.passed() << "/" << r.rows.size() << " pass\n";
  return os.str();
}

std::string report_json(const CrossReport& r) {
  std::ostringstream os;
  os << "{\n  \"a\": " << q(to_string(r.a)) << ",\n  \"b\": " << q(to_string(r.b)) << ",\n  \"rows\": [\n";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const CrossRow& c = r.rows[i];
    os << "    {\"id\": " << q(c.id) << ", \"expected\": " << num(c.expected);
    if (c.error.empty())
      os << ", \"a\": " << num(c.a) << ", \"b\": " << num(c.b) << ", \"rel_diff\": " << num(c.rel_diff)
         << ", \"same_side_miss\": " << (c.same_side_miss ? "true" : "false");
    else
      os << ", \"error\": " << q(c.error);
    os << "}" << (i + 1 < r.rows.size() ? "," : "") << "\n";
  }
  os << "  ],\n  \"max_rel_diff\": " << num(r.max_rel_diff) << ",\n  \"tolerance\": " << num(r.tolerance)
     << ",\n  \"pass\": " << (r.pass ? "true" : "false") << "\n}\n";
  return os.str();
}

std::string report_csv(const CrossReport& r) {
  std::string out = "id,expected," + to_string(r.a) + "," + to_string(r.b) + ",rel_diff,same_side_miss,error\n";
  for (const CrossRow& c : r.rows)
    out += c.id + "," + num(c.expected) + "," + (c.error.empty() ? num(c.a) + "," + num(c.b) + "," + num(c.rel_diff)
                                                                  : std::string(",,")) +
           "," + (c.same_side_miss ? "true" : "false") + "," + csv_field(c.error) + "\n";
  return out;
}

std::string report_text(const CrossReport& r) {
  std::ostringstream os;
  os << pad("row", 5) << pad(to_string(r.a), 26) << pad(to_string(r.b), 26) << pad("rel.diff", 11) << "\n";
  for (const CrossRow& c : r.rows) {
    os << pad(c.id, 5);
    if (c.error.empty())
      os << pad(format17(c.a), 26) << pad(format17(c.b), 26) << pad(sci(std::abs(c.rel_diff)), 11)
         << (c.same_side_miss ? "  both off the table on the same side" : "") << "\n";
    else
      os << c.error << "\n";
  }
  os << "max rel. diff " << sci(r.max_rel_diff) << " (tolerance " << sci(r.tolerance, 1) << "): "
     << (r.pass ? "pass" : "FAIL") << "\n";
  return os.str();
}

}  // namespace condcap
