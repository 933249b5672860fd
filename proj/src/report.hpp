#pragma once

#include <string>
#include <vector>

#include "matrix.hpp"

namespace atsclab {

// Published full-scale numbers shipped as clearly-labeled constants; reports
// print them as annotations, never as computed results.
struct ReferenceRow {
  const char* method;
  // per test domain {laptops, restaurants}: in, cross, joint x {acc, mf1};
  // negative value = not reported
  double cells[12];
};

const std::vector<ReferenceRow>& reference_rows();

// Human-readable table: per test domain the In/Cross/Joint column groups,
// one row per LM domain, adaptation cells flagged with '*'.
std::string render_matrix_table(const std::vector<ScenarioResult>& results,
                                bool include_reference = true);

std::string render_reference_table();

}  // namespace atsclab
