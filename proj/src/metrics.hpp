#pragma once

#include <vector>

#include "text.hpp"

namespace atsclab {

double accuracy(const std::vector<Polarity>& predictions, const std::vector<Polarity>& golds);

// Unweighted mean of per-class F1 over the three classes; a class absent from
// both predictions and golds contributes F1 = 0.
double macro_f1(const std::vector<Polarity>& predictions, const std::vector<Polarity>& golds);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample (n-1) standard deviation
};

MeanStd aggregate_runs(const std::vector<double>& values);

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace atsclab
