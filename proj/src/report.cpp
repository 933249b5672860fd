#include "report.hpp"

#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

namespace atsclab {

const std::vector<ReferenceRow>& reference_rows() {
  // Full-scale published results (accuracy / macro-F1, percent). In/Cross/
  // Joint per test domain; -1 where the method was not reported.
  static const std::vector<ReferenceRow> rows = {
      {"SDGCN-BERT", {81.35, 78.34, -1, -1, -1, -1, 83.57, 76.47, -1, -1, -1, -1}},
      {"AEN-BERT", {79.93, 76.31, -1, -1, -1, -1, 83.12, 73.76, -1, -1, -1, -1}},
      {"BERT-SPC", {78.99, 75.03, -1, -1, -1, -1, 84.46, 76.98, -1, -1, -1, -1}},
      {"BERT-PT", {78.07, 75.08, -1, -1, -1, -1, 84.95, 76.96, -1, -1, -1, -1}},
      {"XLNet-base", {79.89, 77.78, 77.78, 72.24, 80.88, 76.92, 85.84, 78.35, 82.41, 72.98, 86.15, 78.93}},
      {"BERT-base", {77.69, 72.60, 75.86, 70.78, 78.81, 74.47, 84.92, 76.93, 80.07, 69.93, 85.03, 77.35}},
      {"BERT-ADA Lapt", {79.19, 74.18, 77.92, 72.99, 80.23, 75.77, 85.51, 78.09, 80.68, 72.93, 86.22, 79.79}},
      {"BERT-ADA Rest", {78.60, 74.09, 76.16, 70.46, 79.14, 74.93, 87.14, 80.05, 83.68, 72.91, 87.89, 81.05}},
      {"BERT-ADA Joint", {78.96, 74.18, 75.91, 69.84, 79.94, 78.74, 86.35, 78.89, 82.23, 73.03, 87.69, 81.20}},
  };
  return rows;
}

namespace {

Domain train_domain_for(Domain test, int column_group) {
  // column groups: 0 = In (train == test), 1 = Cross (train = other), 2 = Joint
  switch (column_group) {
    case 0: return test;
    case 1: return test == Domain::Laptops ? Domain::Restaurants : Domain::Laptops;
    default: return Domain::Joint;
  }
}

std::string fmt_cell(double acc_mean, double mf1_mean, bool adaptation) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%6.2f/%-6.2f%s", acc_mean * 100.0, mf1_mean * 100.0,
                adaptation ? "*" : " ");
  return buf;
}

std::string fmt_ref_cell(double acc, double mf1) {
  if (acc < 0) return "      -      ";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%6.2f/%-6.2f ", acc, mf1);
  return buf;
}

}  // namespace

std::string render_matrix_table(const std::vector<ScenarioResult>& results,
                                bool include_reference) {
  std::map<std::tuple<int, int, int>, const ScenarioResult*> by_cell;
  for (const auto& r : results)
    by_cell[{static_cast<int>(r.spec.d_lm), static_cast<int>(r.spec.d_train),
             static_cast<int>(r.spec.d_test)}] = &r;

  std::ostringstream out;
  out << "aspect-target sentiment classification, accuracy/macro-F1 (%)\n";
  out << "columns per test domain: In (train=test), Cross (train=other), Joint (train=both)\n";
  out << "* = cross-domain adaptation cell (language model finetuned on the test domain)\n\n";
  out << "test domain:        |          laptops                        |        restaurants\n";
  out << "lm domain           |    In           Cross         Joint     |    In           Cross         Joint\n";
  out << "--------------------+-----------------------------------------+--------------------------------------\n";
  for (const Domain lm : {Domain::Laptops, Domain::Restaurants, Domain::Joint}) {
    char name[32];
    std::snprintf(name, sizeof(name), "lm=%-16s", to_string(lm).c_str());
    out << name << "|";
    for (const Domain test : {Domain::Laptops, Domain::Restaurants}) {
      for (int g = 0; g < 3; ++g) {
        const Domain train = train_domain_for(test, g);
        const auto it = by_cell.find({static_cast<int>(lm), static_cast<int>(train),
                                      static_cast<int>(test)});
        if (it == by_cell.end()) {
          out << "      -      ";
        } else {
          const bool adapt = it->second->spec.category() == ScenarioCategory::CrossDomainAdaptation;
          out << fmt_cell(it->second->accuracy.mean, it->second->macro_f1.mean, adapt);
        }
      }
      if (test == Domain::Laptops) out << "|";
    }
    out << "\n";
  }
  if (include_reference) {
    out << "\n" << render_reference_table();
  }
  return out.str();
}

std::string render_reference_table() {
  std::ostringstream out;
  out << "published full-scale reference results (constants, not computed by this run):\n";
  out << "method              |    In           Cross         Joint     |    In           Cross         Joint\n";
  out << "--------------------+-----------------------------------------+--------------------------------------\n";
  for (const auto& row : reference_rows()) {
    char name[32];
    std::snprintf(name, sizeof(name), "%-20s", row.method);
    out << name << "|";
    for (int c = 0; c < 6; ++c) {
      out << fmt_ref_cell(row.cells[c * 2], row.cells[c * 2 + 1]);
      if (c == 2) out << "|";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace atsclab
