#include "matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace atsclab {

std::string to_string(ScenarioCategory c) {
  switch (c) {
    case ScenarioCategory::InDomain: return "in-domain";
    case ScenarioCategory::CrossDomain: return "cross-domain";
    case ScenarioCategory::CrossDomainAdaptation: return "cross-domain-adaptation";
    case ScenarioCategory::JointDomain: return "joint-domain";
  }
  return "?";
}

ScenarioCategory categorize_scenario(Domain d_lm, Domain d_train, Domain d_test) {
  if (d_test == Domain::Joint) throw Error("d_test must be a single domain");
  if (d_train == Domain::Joint) return ScenarioCategory::JointDomain;
  if (d_lm == d_train && d_train == d_test) return ScenarioCategory::InDomain;
  if (d_train != d_test && d_lm == d_test) return ScenarioCategory::CrossDomainAdaptation;
  return ScenarioCategory::CrossDomain;
}

std::vector<ScenarioSpec> scenario_grid() {
  const Domain lms[] = {Domain::Laptops, Domain::Restaurants, Domain::Joint};
  const Domain trains[] = {Domain::Laptops, Domain::Restaurants, Domain::Joint};
  const Domain tests[] = {Domain::Laptops, Domain::Restaurants};
  std::vector<ScenarioSpec> grid;
  grid.reserve(18);
  for (const Domain lm : lms)
    for (const Domain tr : trains)
      for (const Domain te : tests) grid.push_back({lm, tr, te});
  return grid;
}

std::vector<ScenarioResult> run_matrix(const CellPredictor& predict,
                                       const std::vector<AtscDataset>& test_sets,
                                       const std::vector<uint64_t>& seeds) {
  if (!predict) throw MissingArtifact("no cell predictor supplied");
  if (seeds.empty()) throw InsufficientRuns("run_matrix needs at least one seed");
  auto test_for = [&](Domain d) -> const AtscDataset& {
    for (const auto& t : test_sets)
      if (t.domain == d && t.split == Split::Test) return t;
    throw MissingArtifact("no test set for domain " + to_string(d));
  };
  std::vector<ScenarioResult> results;
  for (const ScenarioSpec& spec : scenario_grid()) {
    const AtscDataset& test = test_for(spec.d_test);
    std::vector<Polarity> golds;
    golds.reserve(test.examples.size());
    for (const auto& ex : test.examples) golds.push_back(ex.label);
    ScenarioResult res;
    res.spec = spec;
    std::vector<double> accs, f1s;
    for (const uint64_t seed : seeds) {
      const std::vector<Polarity> preds = predict(spec, seed, test);
      if (preds.size() != golds.size())
        throw ShapeMismatch("cell predictor returned wrong prediction count");
      SeedMetrics m;
      m.seed = seed;
      m.accuracy = accuracy(preds, golds);
      m.macro_f1 = macro_f1(preds, golds);
      accs.push_back(m.accuracy);
      f1s.push_back(m.macro_f1);
      res.runs.push_back(m);
    }
    if (seeds.size() >= 2) {
      res.accuracy = aggregate_runs(accs);
      res.macro_f1 = aggregate_runs(f1s);
    } else {
      res.accuracy = {accs[0], 0.0};
      res.macro_f1 = {f1s[0], 0.0};
    }
    results.push_back(std::move(res));
  }
  return results;
}

std::string matrix_tsv(const std::vector<ScenarioResult>& results) {
  std::ostringstream out;
  out << "d_lm\td_train\td_test\tcategory\tseed\taccuracy\tmacro_f1\n";
  char buf[64];
  for (const auto& r : results)
    for (const auto& run : r.runs) {
      out << to_string(r.spec.d_lm) << '\t' << to_string(r.spec.d_train) << '\t'
          << to_string(r.spec.d_test) << '\t' << to_string(r.spec.category()) << '\t' << run.seed;
      std::snprintf(buf, sizeof(buf), "\t%.6f\t%.6f\n", run.accuracy, run.macro_f1);
      out << buf;
    }
  return out.str();
}

std::string matrix_summary_tsv(const std::vector<ScenarioResult>& results) {
  std::ostringstream out;
  out << "d_lm\td_train\td_test\tcategory\tn_seeds\tacc_mean\tacc_std\tmf1_mean\tmf1_std\n";
  char buf[96];
  for (const auto& r : results) {
    out << to_string(r.spec.d_lm) << '\t' << to_string(r.spec.d_train) << '\t'
        << to_string(r.spec.d_test) << '\t' << to_string(r.spec.category()) << '\t'
        << r.runs.size();
    std::snprintf(buf, sizeof(buf), "\t%.6f\t%.6f\t%.6f\t%.6f\n", r.accuracy.mean, r.accuracy.std,
                  r.macro_f1.mean, r.macro_f1.std);
    out << buf;
  }
  return out.str();
}

CurveSeries learning_curve(const std::string& label,
                           const std::vector<long long>& snapshot_sentences,
                           const std::vector<uint64_t>& seeds, const SnapshotEval& eval) {
  if (snapshot_sentences.empty() || snapshot_sentences.front() != 0)
    throw MissingBaseline("learning curve requires a snapshot at 0 sentences");
  if (seeds.empty()) throw InsufficientRuns("learning curve needs at least one seed");
  std::vector<double> baseline(seeds.size());
  for (size_t s = 0; s < seeds.size(); ++s) baseline[s] = eval(0, seeds[s]);
  CurveSeries series;
  series.label = label;
  for (const long long sent : snapshot_sentences) {
    CurvePoint pt;
    pt.sentences_seen = sent;
    for (size_t s = 0; s < seeds.size(); ++s) {
      const double acc = sent == 0 ? baseline[s] : eval(sent, seeds[s]);
      pt.per_seed_delta.push_back(acc - baseline[s]);
    }
    if (pt.per_seed_delta.size() >= 2) {
      pt.delta_accuracy = aggregate_runs(pt.per_seed_delta);
    } else {
      pt.delta_accuracy = {pt.per_seed_delta[0], 0.0};
    }
    series.points.push_back(std::move(pt));
  }
  return series;
}

std::string curve_tsv(const std::vector<CurveSeries>& series) {
  std::ostringstream out;
  out << "series\tsentences_seen\tdelta_acc_mean\tdelta_acc_std\tn_seeds\n";
  char buf[96];
  for (const auto& s : series)
    for (const auto& p : s.points) {
      out << s.label << '\t' << p.sentences_seen;
      std::snprintf(buf, sizeof(buf), "\t%.6f\t%.6f\t%zu\n", p.delta_accuracy.mean,
                    p.delta_accuracy.std, p.per_seed_delta.size());
      out << buf;
    }
  return out.str();
}

std::vector<CurveSeries> parse_curve_tsv(const std::string& tsv) {
  std::istringstream in(tsv);
  std::string line;
  if (!std::getline(in, line)) throw Error("empty curve tsv");
  std::vector<CurveSeries> series;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string label, field;
    CurvePoint pt;
    size_t n_seeds = 1;
    if (!std::getline(ls, label, '\t')) throw Error("bad curve tsv row: " + line);
    if (!std::getline(ls, field, '\t')) throw Error("bad curve tsv row: " + line);
    pt.sentences_seen = std::stoll(field);
    if (!std::getline(ls, field, '\t')) throw Error("bad curve tsv row: " + line);
    pt.delta_accuracy.mean = std::stod(field);
    if (!std::getline(ls, field, '\t')) throw Error("bad curve tsv row: " + line);
    pt.delta_accuracy.std = std::stod(field);
    if (std::getline(ls, field, '\t')) n_seeds = std::stoul(field);
    pt.per_seed_delta.assign(n_seeds, pt.delta_accuracy.mean);
    if (series.empty() || series.back().label != label) {
      CurveSeries s;
      s.label = label;
      series.push_back(std::move(s));
    }
    series.back().points.push_back(std::move(pt));
  }
  return series;
}

namespace {

struct SvgScale {
  double x_min, x_max, y_min, y_max;
  double px(double x) const { return 70.0 + (x - x_min) / (x_max - x_min) * 640.0; }
  double py(double y) const { return 330.0 - (y - y_min) / (y_max - y_min) * 280.0; }
};

const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

}  // namespace

std::string curve_svg(const std::vector<CurveSeries>& series, uint64_t seed) {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 0.0;
  for (const auto& s : series)
    for (const auto& p : s.points) {
      x_max = std::max(x_max, static_cast<double>(p.sentences_seen));
      y_min = std::min(y_min, p.delta_accuracy.mean - p.delta_accuracy.std);
      y_max = std::max(y_max, p.delta_accuracy.mean + p.delta_accuracy.std);
    }
  if (y_max - y_min < 1e-9) y_max = y_min + 1.0;
  const SvgScale sc{x_min, x_max, y_min - 0.02, y_max + 0.02};

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"400\" "
         "viewBox=\"0 0 760 400\">\n";
  out << "<!-- atsclab learning curve seed=" << seed << " -->\n";
  out << "<rect width=\"760\" height=\"400\" fill=\"white\"/>\n";
  out << "<line x1=\"70\" y1=\"330\" x2=\"710\" y2=\"330\" stroke=\"black\"/>\n";
  out << "<line x1=\"70\" y1=\"50\" x2=\"70\" y2=\"330\" stroke=\"black\"/>\n";
  out << "<text x=\"390\" y=\"370\" text-anchor=\"middle\" font-size=\"13\">sentences seen "
         "during language-model finetuning</text>\n";
  out << "<text x=\"20\" y=\"190\" font-size=\"13\" transform=\"rotate(-90 20 190)\" "
         "text-anchor=\"middle\">absolute accuracy improvement</text>\n";
  {
    const double zero_y = sc.py(0.0);
    out << "<line x1=\"70\" y1=\"" << zero_y << "\" x2=\"710\" y2=\"" << zero_y
        << "\" stroke=\"#cccccc\" stroke-dasharray=\"4 3\"/>\n";
  }
  int color_idx = 0;
  for (const auto& s : series) {
    const char* color = kSeriesColors[color_idx % 4];
    // mu +/- sigma band
    out << "<polygon class=\"band\" fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
    for (const auto& p : s.points)
      out << sc.px(static_cast<double>(p.sentences_seen)) << ','
          << sc.py(p.delta_accuracy.mean + p.delta_accuracy.std) << ' ';
    for (auto it = s.points.rbegin(); it != s.points.rend(); ++it)
      out << sc.px(static_cast<double>(it->sentences_seen)) << ','
          << sc.py(it->delta_accuracy.mean - it->delta_accuracy.std) << ' ';
    out << "\"/>\n";
    out << "<polyline class=\"series\" data-label=\"" << s.label << "\" fill=\"none\" stroke=\""
        << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : s.points)
      out << sc.px(static_cast<double>(p.sentences_seen)) << ',' << sc.py(p.delta_accuracy.mean)
          << ' ';
    out << "\"/>\n";
    for (const auto& p : s.points)
      out << "<circle cx=\"" << sc.px(static_cast<double>(p.sentences_seen)) << "\" cy=\""
          << sc.py(p.delta_accuracy.mean) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    out << "<text x=\"600\" y=\"" << (60 + 18 * color_idx) << "\" font-size=\"13\" fill=\"" << color
        << "\">" << s.label << " (&#956;&#177;&#963;)</text>\n";
    ++color_idx;
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace atsclab
