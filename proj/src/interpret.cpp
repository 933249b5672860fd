#include "interpret.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace atsclab {

namespace {

int argmax3(const std::array<double, 3>& p) {
  int best = 0;
  for (int k = 1; k < 3; ++k)
    if (p[k] > p[best]) best = k;
  return best;
}

}  // namespace

AtscPredictor model_predictor(const EncoderModel& model, const Vocab& vocab) {
  return [&model, &vocab](const std::vector<std::string>& tokens, size_t target_start,
                          size_t target_len) {
    AtscExample ex;
    ex.tokens = tokens;
    ex.target_start = target_start;
    ex.target_len = target_len;
    ex.label = Polarity::Neutral;
    const auto enc = encode_atsc_input(ex, vocab, model.cfg.max_len);
    std::vector<uint8_t> mask(enc.input_ids.size(), 1);
    const EncoderOutput out = forward(model, enc.input_ids, enc.segment_ids, mask);
    return classify_atsc(model, out);
  };
}

double importance(const AtscPredictor& predict, const std::vector<std::string>& tokens,
                  size_t target_start, size_t target_len, size_t index) {
  if (index >= tokens.size()) throw IndexOutOfRange("importance index " + std::to_string(index));
  if (index >= target_start && index < target_start + target_len)
    throw IndexInTarget("importance index " + std::to_string(index));
  const auto p_full = predict(tokens, target_start, target_len);
  const int y = argmax3(p_full);
  std::vector<std::string> without;
  without.reserve(tokens.size() - 1);
  for (size_t i = 0; i < tokens.size(); ++i)
    if (i != index) without.push_back(tokens[i]);
  const size_t new_start = index < target_start ? target_start - 1 : target_start;
  const auto p_without = predict(without, new_start, target_len);
  return p_full[y] - p_without[y];
}

ReductionTrace reduce_input(const AtscPredictor& predict, const std::vector<std::string>& tokens,
                            size_t target_start, size_t target_len) {
  if (target_len < 1 || target_start + target_len > tokens.size())
    throw IndexOutOfRange("target span outside sentence");

  ReductionTrace trace;
  trace.tokens = tokens;
  trace.target_start = target_start;
  trace.target_len = target_len;

  auto eval = [&](const std::vector<size_t>& survivors) {
    std::vector<std::string> sub;
    sub.reserve(survivors.size());
    size_t new_start = 0;
    size_t new_len = 0;
    for (size_t i = 0; i < survivors.size(); ++i) {
      sub.push_back(tokens[survivors[i]]);
      if (survivors[i] == target_start) new_start = i;
      if (survivors[i] >= target_start && survivors[i] < target_start + target_len) ++new_len;
    }
    return predict(sub, new_start, new_len);
  };

  std::vector<size_t> survivors(tokens.size());
  for (size_t i = 0; i < survivors.size(); ++i) survivors[i] = i;

  const auto p0 = eval(survivors);
  const int y = argmax3(p0);
  trace.original_label = static_cast<Polarity>(y);
  trace.original_prob = p0[y];
  trace.low_confidence = p0[y] < 0.5;

  auto is_target = [&](size_t idx) {
    return idx >= target_start && idx < target_start + target_len;
  };

  while (true) {
    std::vector<size_t> removable;
    for (const size_t idx : survivors)
      if (!is_target(idx)) removable.push_back(idx);
    if (removable.empty()) {
      trace.reduced_set = survivors;
      break;
    }
    const auto p_now = eval(survivors);
    // lowest importance wins; leftmost on ties
    double best_g = 0.0;
    size_t best_idx = removable.front();
    std::array<double, 3> best_p_without{};
    bool first = true;
    for (const size_t idx : removable) {
      std::vector<size_t> without;
      without.reserve(survivors.size() - 1);
      for (const size_t s : survivors)
        if (s != idx) without.push_back(s);
      const auto p_wo = eval(without);
      const double g = p_now[y] - p_wo[y];
      if (first || g < best_g) {
        best_g = g;
        best_idx = idx;
        best_p_without = p_wo;
        first = false;
      }
    }
    std::vector<size_t> next;
    next.reserve(survivors.size() - 1);
    for (const size_t s : survivors)
      if (s != best_idx) next.push_back(s);

    ReductionStep step;
    step.removed_index = best_idx;
    step.importance = best_g;
    step.post_removal_prob = best_p_without[y];
    trace.steps.push_back(step);

    if (argmax3(best_p_without) != y) {
      trace.flipped = true;
      trace.flipped_label = static_cast<Polarity>(argmax3(best_p_without));
      trace.reduced_set = survivors;  // one iteration before the flip
      break;
    }
    survivors = std::move(next);
    if ([&] {
          for (const size_t s : survivors)
            if (!is_target(s)) return false;
          return true;
        }()) {
      trace.reduced_set = survivors;
      break;
    }
  }
  return trace;
}

std::string render_trace(const ReductionTrace& trace) {
  std::ostringstream out;
  out << "sentence:";
  for (size_t i = 0; i < trace.tokens.size(); ++i) {
    out << ' ';
    const bool in_target =
        i >= trace.target_start && i < trace.target_start + trace.target_len;
    out << (in_target ? "[" + trace.tokens[i] + "]" : trace.tokens[i]);
  }
  out << '\n';
  out << "target:";
  for (size_t i = trace.target_start; i < trace.target_start + trace.target_len; ++i)
    out << ' ' << trace.tokens[i];
  out << '\n';
  char buf[160];
  std::snprintf(buf, sizeof(buf), "predicted: %s p=%.4f%s\n",
                to_string(trace.original_label).c_str(), trace.original_prob,
                trace.low_confidence ? " (low confidence)" : "");
  out << buf;
  out << "steps (removed, importance, p_after):\n";
  for (const auto& s : trace.steps) {
    std::snprintf(buf, sizeof(buf), "  %-16s g=%+.4f p=%.4f\n",
                  trace.tokens[s.removed_index].c_str(), s.importance, s.post_removal_prob);
    out << buf;
  }
  out << "reduced set:";
  std::vector<bool> kept(trace.tokens.size(), false);
  for (const size_t idx : trace.reduced_set) kept[idx] = true;
  for (size_t i = 0; i < trace.tokens.size(); ++i) {
    if (!kept[i]) continue;
    out << ' ' << '_' << trace.tokens[i] << '_';
  }
  out << '\n';
  if (trace.flipped)
    out << "flips to: " << to_string(trace.flipped_label) << '\n';
  else
    out << "flips to: (never)\n";
  return out.str();
}

}  // namespace atsclab
