#pragma once

#include <string>
#include <utility>
#include <vector>

namespace condcap {

enum class Method { Theta, SC, BIE, FD };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct CapacityResult {
  double value = 0.0;
  Method method = Method::BIE;
  double rel_err_estimate = 0.0;
  std::vector<std::pair<std::string, std::string>> diagnostics;
  bool converged = true;

  void note(const std::string& key, double v);
  void note(const std::string& key, long long v);
  void note(const std::string& key, const std::string& v) { diagnostics.emplace_back(key, v); }
  // Value of a diagnostic, or an empty string.
  std::string get(const std::string& key) const;
};

// Shortest round-trip representation with 17 significant digits.
std::string format17(double v);

}  // namespace condcap
