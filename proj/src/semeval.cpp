#include "semeval.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace atsclab {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string decode_entities(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    const size_t semi = s.find(';', i);
    if (semi == std::string::npos || semi - i > 10) throw MalformedXml("unterminated entity");
    const std::string ent = s.substr(i + 1, semi - i - 1);
    if (ent == "amp") out.push_back('&');
    else if (ent == "lt") out.push_back('<');
    else if (ent == "gt") out.push_back('>');
    else if (ent == "quot") out.push_back('"');
    else if (ent == "apos") out.push_back('\'');
    else if (!ent.empty() && ent[0] == '#') {
      const long code = std::strtol(ent.c_str() + 1, nullptr, ent.size() > 1 && ent[1] == 'x' ? 16 : 10);
      if (code <= 0 || code > 0x10FFFF) throw MalformedXml("bad numeric entity &" + ent + ";");
      // encode as UTF-8
      const unsigned long cp = static_cast<unsigned long>(code);
      if (cp < 0x80) out.push_back(static_cast<char>(cp));
      else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
      } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
      } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
      }
    } else {
      throw MalformedXml("unknown entity &" + ent + ";");
    }
    i = semi + 1;
  }
  return out;
}

// Minimal tag scanner for the fixed SemEval schema; not a general XML parser.
struct TagScanner {
  const std::string& xml;
  size_t pos = 0;

  explicit TagScanner(const std::string& x) : xml(x) {}

  // Finds the next opening of `tag` before `limit`; returns false if absent.
  bool find_open(const std::string& tag, size_t limit, size_t* tag_start, size_t* attrs_end,
                 bool* self_closing) {
    const std::string needle = "<" + tag;
    size_t p = pos;
    while (true) {
      p = xml.find(needle, p);
      if (p == std::string::npos || p >= limit) return false;
      const char after = p + needle.size() < xml.size() ? xml[p + needle.size()] : '\0';
      if (after == '>' || after == ' ' || after == '/' || after == '\t' || after == '\n' ||
          after == '\r')
        break;
      p += needle.size();
    }
    const size_t close = xml.find('>', p);
    if (close == std::string::npos) throw MalformedXml("unclosed tag <" + tag);
    *tag_start = p;
    *attrs_end = close;
    *self_closing = close > p && xml[close - 1] == '/';
    pos = close + 1;
    return true;
  }
};

std::string get_attr(const std::string& xml, size_t from, size_t to, const std::string& name,
                     bool required) {
  const std::string needle = name + "=\"";
  const size_t p = xml.find(needle, from);
  if (p == std::string::npos || p >= to) {
    if (required) throw MalformedXml("missing attribute " + name);
    return {};
  }
  const size_t vstart = p + needle.size();
  const size_t vend = xml.find('"', vstart);
  if (vend == std::string::npos || vend > to) throw MalformedXml("unterminated attribute " + name);
  return decode_entities(xml.substr(vstart, vend - vstart));
}

size_t parse_offset(const std::string& s, const char* what) {
  if (s.empty()) throw MalformedXml(std::string("empty offset ") + what);
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == nullptr || *end != '\0' || v < 0) throw MalformedXml(std::string("bad offset ") + what + ": " + s);
  return static_cast<size_t>(v);
}

// Minimal token span covering [from, to); whole boundary words included.
void offsets_to_span(const std::vector<TokenSpan>& spans, size_t from, size_t to,
                     size_t text_len, const std::string& term, size_t* start, size_t* len) {
  if (from >= to || to > text_len)
    throw OffsetOutOfRange("aspect term '" + term + "' [" + std::to_string(from) + "," +
                           std::to_string(to) + ") in text of length " + std::to_string(text_len));
  size_t first = spans.size();
  size_t last = 0;
  bool any = false;
  for (size_t i = 0; i < spans.size(); ++i) {
    if (spans[i].end > from && spans[i].begin < to) {
      if (!any) first = i;
      last = i;
      any = true;
    }
  }
  if (!any)
    throw OffsetOutOfRange("aspect term '" + term + "' covers no tokens at [" +
                           std::to_string(from) + "," + std::to_string(to) + ")");
  *start = first;
  *len = last - first + 1;
}

}  // namespace

SemevalData parse_semeval_xml_string(const std::string& xml, Domain domain) {
  SemevalData data;
  TagScanner scan(xml);
  size_t tag_start = 0, attrs_end = 0;
  bool self_closing = false;
  while (scan.find_open("sentence", xml.size(), &tag_start, &attrs_end, &self_closing)) {
    if (self_closing) continue;
    const size_t sentence_end = xml.find("</sentence>", attrs_end);
    if (sentence_end == std::string::npos) throw MalformedXml("unterminated <sentence>");
    ++data.sentence_count;

    const size_t text_open = xml.find("<text>", attrs_end);
    if (text_open == std::string::npos || text_open > sentence_end)
      throw MalformedXml("sentence without <text>");
    const size_t text_close = xml.find("</text>", text_open);
    if (text_close == std::string::npos || text_close > sentence_end)
      throw MalformedXml("unterminated <text>");
    const std::string text = decode_entities(
        xml.substr(text_open + 6, text_close - (text_open + 6)));

    std::vector<TokenSpan> spans;
    const std::vector<std::string> tokens = tokenize_with_offsets(text, &spans);

    TagScanner term_scan(xml);
    term_scan.pos = text_close;
    size_t t_start = 0, t_end = 0;
    bool t_self = false;
    while (term_scan.find_open("aspectTerm", sentence_end, &t_start, &t_end, &t_self)) {
      ++data.aspect_term_count;
      const std::string term = get_attr(xml, t_start, t_end, "term", true);
      const std::string polarity = get_attr(xml, t_start, t_end, "polarity", true);
      const size_t from = parse_offset(get_attr(xml, t_start, t_end, "from", true), "from");
      const size_t to = parse_offset(get_attr(xml, t_start, t_end, "to", true), "to");
      if (polarity == "conflict") {
        ++data.counts.conflict_dropped;
        continue;
      }
      AtscExample ex;
      ex.tokens = tokens;
      ex.domain = domain;
      ex.label = polarity_from_string(polarity);
      offsets_to_span(spans, from, to, text.size(), term, &ex.target_start, &ex.target_len);
      switch (ex.label) {
        case Polarity::Positive: ++data.counts.positive; break;
        case Polarity::Negative: ++data.counts.negative; break;
        case Polarity::Neutral: ++data.counts.neutral; break;
      }
      data.examples.push_back(std::move(ex));
    }
    scan.pos = sentence_end + 11;
  }
  if (data.sentence_count == 0) throw MalformedXml("no <sentence> elements found");
  return data;
}

SemevalData parse_semeval_xml(const std::string& path, Domain domain) {
  return parse_semeval_xml_string(read_file(path), domain);
}

std::set<std::string> semeval_normalized_sentences(const std::string& path) {
  const std::string xml = read_file(path);
  std::set<std::string> out;
  size_t p = 0;
  while (true) {
    const size_t open = xml.find("<text>", p);
    if (open == std::string::npos) break;
    const size_t close = xml.find("</text>", open);
    if (close == std::string::npos) throw MalformedXml("unterminated <text>");
    out.insert(normalize_sentence(decode_entities(xml.substr(open + 6, close - open - 6))));
    p = close + 7;
  }
  return out;
}

}  // namespace atsclab
