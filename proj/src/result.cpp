#include "condcap/result.hpp"

#include <cctype>
#include <cstdio>

#include "condcap/error.hpp"

namespace condcap {

std::string to_string(Method m) {
  switch (m) {
    case Method::Theta: return "theta";
    case Method::SC: return "sc";
    case Method::BIE: return "bie";
    case Method::FD: return "fd";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  std::string u;
  for (char c : s) u += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (u == "theta") return Method::Theta;
  if (u == "sc") return Method::SC;
  if (u == "bie") return Method::BIE;
  if (u == "fd") return Method::FD;
  throw Error(ErrorCode::ParseError, "unknown method '" + s + "'");
}

void CapacityResult::note(const std::string& key, double v) { diagnostics.emplace_back(key, format17(v)); }

void CapacityResult::note(const std::string& key, long long v) {
  diagnostics.emplace_back(key, std::to_string(v));
}

std::string CapacityResult::get(const std::string& key) const {
  for (const auto& [k, v] : diagnostics)
    if (k == key) return v;
  return {};
}

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace condcap
