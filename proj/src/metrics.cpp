#include "metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace atsclab {

double accuracy(const std::vector<Polarity>& predictions, const std::vector<Polarity>& golds) {
  if (predictions.empty() || golds.empty()) throw EmptyInput("accuracy over empty labels");
  if (predictions.size() != golds.size())
    throw ShapeMismatch("accuracy: prediction/gold length mismatch");
  size_t correct = 0;
  for (size_t i = 0; i < golds.size(); ++i)
    if (predictions[i] == golds[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(golds.size());
}

double macro_f1(const std::vector<Polarity>& predictions, const std::vector<Polarity>& golds) {
  if (predictions.empty() || golds.empty()) throw EmptyInput("macro_f1 over empty labels");
  if (predictions.size() != golds.size())
    throw ShapeMismatch("macro_f1: prediction/gold length mismatch");
  std::array<std::array<long long, 3>, 3> confusion{};  // [gold][pred]
  for (size_t i = 0; i < golds.size(); ++i)
    ++confusion[static_cast<int>(golds[i])][static_cast<int>(predictions[i])];
  double sum_f1 = 0.0;
  for (int c = 0; c < 3; ++c) {
    const long long tp = confusion[c][c];
    long long fp = 0, fn = 0;
    for (int k = 0; k < 3; ++k) {
      if (k == c) continue;
      fp += confusion[k][c];
      fn += confusion[c][k];
    }
    const long long denom = 2 * tp + fp + fn;
    sum_f1 += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  return sum_f1 / 3.0;
}

MeanStd aggregate_runs(const std::vector<double>& values) {
  if (values.size() < 2) throw InsufficientRuns("aggregate_runs needs n >= 2");
  MeanStd out;
  for (const double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (const double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw EmptyInput("spearman needs two aligned series");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(rx.size());
  my /= static_cast<double>(ry.size());
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  if (dx == 0.0 || dy == 0.0) return 0.0;
  return num / std::sqrt(dx * dy);
}

}  // namespace atsclab
