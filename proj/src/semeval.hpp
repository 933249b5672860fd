#pragma once

#include <set>
#include <string>
#include <vector>

#include "text.hpp"

namespace atsclab {

struct SemevalData {
  std::vector<AtscExample> examples;
  LabelCounts counts;
  size_t sentence_count = 0;
  size_t aspect_term_count = 0;  // including dropped conflicts
};

// SemEval 2014 Task 4 Subtask 2 XML: <sentences><sentence><text> plus
// <aspectTerms><aspectTerm term polarity from to/>. One AtscExample per
// non-conflict aspectTerm; character offsets map to the minimal covering
// token span.
SemevalData parse_semeval_xml(const std::string& path, Domain domain);
SemevalData parse_semeval_xml_string(const std::string& xml, Domain domain);

// Canonical sentence strings of a SemEval file, for corpus dedup.
std::set<std::string> semeval_normalized_sentences(const std::string& path);

}  // namespace atsclab
