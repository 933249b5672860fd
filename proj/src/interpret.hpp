#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "text.hpp"
#include "train.hpp"

namespace atsclab {

// Probability vector for a sentence (token strings) and a target span given
// in the coordinates of that token list. Real models and test stubs both fit
// behind this signature.
using AtscPredictor = std::function<std::array<double, 3>(
    const std::vector<std::string>& tokens, size_t target_start, size_t target_len)>;

AtscPredictor model_predictor(const EncoderModel& model, const Vocab& vocab);

struct ReductionStep {
  size_t removed_index = 0;  // index in the ORIGINAL token list
  double importance = 0.0;
  double post_removal_prob = 0.0;  // p(y | input after this removal)
};

struct ReductionTrace {
  std::vector<std::string> tokens;  // original sentence
  size_t target_start = 0;
  size_t target_len = 1;
  Polarity original_label = Polarity::Neutral;
  double original_prob = 0.0;
  bool low_confidence = false;  // original max probability < 0.5
  std::vector<ReductionStep> steps;
  std::vector<size_t> reduced_set;  // surviving original indices one step before the flip
  bool flipped = false;
  Polarity flipped_label = Polarity::Neutral;  // valid only when flipped
};

// g(x_i): probability of the original label with token i present minus with
// token i deleted (deletion re-encodes; positions shift).
double importance(const AtscPredictor& predict, const std::vector<std::string>& tokens,
                  size_t target_start, size_t target_len, size_t index);

// Greedy loop: recompute importances over surviving removable tokens, delete
// the minimum (leftmost tie), stop when the argmax label changes or only the
// target remains. Target tokens are never removed.
ReductionTrace reduce_input(const AtscPredictor& predict, const std::vector<std::string>& tokens,
                            size_t target_start, size_t target_len);

// Text record: original sentence with the target marked, per-step table, and
// the reduced set rendered with underline markers.
std::string render_trace(const ReductionTrace& trace);

}  // namespace atsclab
