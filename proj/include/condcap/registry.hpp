#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "condcap/geometry.hpp"

namespace condcap {

struct ReferenceRow {
  std::string id;
  CondenserSpec spec;
  std::string expected_text;  // digits exactly as tabulated
  double expected = 0.0;
  std::string source;  // "Table 1" ... "Table 4"
};

// All 42 rows, ordered by id.
const std::vector<ReferenceRow>& reference_rows();
const ReferenceRow& reference_row(const std::string& id);

// Rows of one table (1..4), or every row for 0.
std::vector<ReferenceRow> table_rows(int table);
// Rows whose id starts with one of the given family letters, e.g. "EFG".
std::vector<ReferenceRow> family_rows(const std::string& letters);

// FNV-1a over the tabulated digit strings, and the pinned value.
std::uint64_t registry_checksum();
std::uint64_t pinned_registry_checksum();

}  // namespace condcap
