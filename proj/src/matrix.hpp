#pragma once

#include <functional>
#include <string>
#include <vector>

#include "metrics.hpp"
#include "train.hpp"

namespace atsclab {

enum class ScenarioCategory {
  InDomain = 0,
  CrossDomain = 1,
  CrossDomainAdaptation = 2,
  JointDomain = 3,
};

std::string to_string(ScenarioCategory c);

// d_lm, d_train in {Laptops, Restaurants, Joint}; d_test single-domain.
ScenarioCategory categorize_scenario(Domain d_lm, Domain d_train, Domain d_test);

struct ScenarioSpec {
  Domain d_lm = Domain::Laptops;
  Domain d_train = Domain::Laptops;
  Domain d_test = Domain::Laptops;

  ScenarioCategory category() const { return categorize_scenario(d_lm, d_train, d_test); }
};

// The 18 cells of the 3 (lm) x 3 (train) x 2 (test) grid, in a fixed order.
std::vector<ScenarioSpec> scenario_grid();

struct SeedMetrics {
  uint64_t seed = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

struct ScenarioResult {
  ScenarioSpec spec;
  std::vector<SeedMetrics> runs;
  MeanStd accuracy;
  MeanStd macro_f1;
};

// Predictions for one grid cell under one seed; wired to real checkpoints by
// the CLI and to stubs by tests.
using CellPredictor = std::function<std::vector<Polarity>(
    const ScenarioSpec& spec, uint64_t seed, const AtscDataset& test_set)>;

// Evaluates every grid cell for every seed and aggregates. Test sets keyed by
// their domain; MissingArtifact if one is absent.
std::vector<ScenarioResult> run_matrix(const CellPredictor& predict,
                                       const std::vector<AtscDataset>& test_sets,
                                       const std::vector<uint64_t>& seeds);

// TSV schema: d_lm, d_train, d_test, category, seed, accuracy, macro_f1.
std::string matrix_tsv(const std::vector<ScenarioResult>& results);
// Summary schema: d_lm, d_train, d_test, category, n_seeds, acc_mean, acc_std, mf1_mean, mf1_std.
std::string matrix_summary_tsv(const std::vector<ScenarioResult>& results);

struct CurvePoint {
  long long sentences_seen = 0;
  MeanStd delta_accuracy;                 // vs the 0-sentence baseline
  std::vector<double> per_seed_delta;
};

struct CurveSeries {
  std::string label;
  std::vector<CurvePoint> points;
};

// Accuracy is measured per (snapshot, seed) by `eval`; the snapshot at
// sentence count 0 is the baseline every delta is taken against.
using SnapshotEval = std::function<double(long long sentences_seen, uint64_t seed)>;

CurveSeries learning_curve(const std::string& label,
                           const std::vector<long long>& snapshot_sentences,
                           const std::vector<uint64_t>& seeds, const SnapshotEval& eval);

std::string curve_tsv(const std::vector<CurveSeries>& series);
std::vector<CurveSeries> parse_curve_tsv(const std::string& tsv);

// Figure-style SVG: one mean polyline per series plus a mu +/- sigma band.
std::string curve_svg(const std::vector<CurveSeries>& series, uint64_t seed);

}  // namespace atsclab
