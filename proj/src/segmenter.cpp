#include "influence/segmenter.hpp"

#include <unicode/uchar.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <span>

#include "influence/error.hpp"
#include "influence/utf8.hpp"

namespace influence::segment {

namespace {

constexpr std::array<std::string_view, 21> kAbbreviations = {
    "mr",    "mrs", "messrs", "dr",  "st",   "capt", "vol", "pp",
    "jr",    "sr",  "rev",    "prof", "gen", "col",  "lieut", "esq",
    "hon",   "mt",  "viz",    "ibid", "wm"};

bool is_closing(char32_t cp) {
  switch (cp) {
    case U'"': case U'\'': case U')': case U']':
    case U'”': case U'’': case U'»':
      return true;
    default:
      return false;
  }
}

bool is_opening_quote(char32_t cp) {
  switch (cp) {
    case U'"': case U'\'': case U'“': case U'‘': case U'«':
      return true;
    default:
      return false;
  }
}

char32_t last_code_point(std::string_view s, std::size_t& start) {
  start = s.size();
  do {
    --start;
  } while (start > 0 && utf8::is_continuation(static_cast<unsigned char>(s[start])));
  std::size_t pos = start;
  return utf8::decode_next(s, pos);
}

// Strips trailing closing quotes/brackets.
std::string_view strip_closers(std::string_view token) {
  while (!token.empty()) {
    std::size_t start = 0;
    if (!is_closing(last_code_point(token, start))) break;
    token = token.substr(0, start);
  }
  return token;
}

std::string_view strip_openers(std::string_view token) {
  while (!token.empty()) {
    std::size_t pos = 0;
    const char32_t cp = utf8::decode_next(token, pos);
    if (!is_opening_quote(cp) && cp != U'(' && cp != U'[') break;
    token.remove_prefix(pos);
  }
  return token;
}

bool ends_sentence(std::string_view token) {
  const auto core = strip_closers(token);
  if (core.empty()) return false;
  const char last = core.back();
  if (last == '!' || last == '?') return true;
  if (last != '.') return false;
  return !is_abbreviation(strip_openers(core));
}

bool starts_sentence(std::string_view token) {
  std::size_t pos = 0;
  const char32_t cp = utf8::decode_next(token, pos);
  return is_opening_quote(cp) || cp == U'(' || cp == U'[' ||
         u_isupper(static_cast<UChar32>(cp)) ||
         u_istitle(static_cast<UChar32>(cp)) ||
         u_isdigit(static_cast<UChar32>(cp));
}

// Code point offset for any byte offset of one passage.
class CodePointIndex {
 public:
  explicit CodePointIndex(std::string_view text) : prefix_(text.size() + 1) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
      prefix_[i] = count;
      if (!utf8::is_continuation(static_cast<unsigned char>(text[i]))) ++count;
    }
    prefix_[text.size()] = count;
  }

  std::size_t operator()(std::size_t byte) const { return prefix_[byte]; }

 private:
  std::vector<std::size_t> prefix_;
};

Segment make_segment(std::string_view text, const CodePointIndex& cps,
                     Level level, std::size_t index,
                     std::span<const WordToken> tokens) {
  Segment seg;
  seg.index = index;
  seg.level = level;
  seg.byte_start = tokens.front().byte_start;
  seg.byte_end = tokens.back().byte_end;
  seg.char_start = cps(seg.byte_start);
  seg.char_end = cps(seg.byte_end);
  seg.text = std::string(text.substr(seg.byte_start, seg.byte_end - seg.byte_start));
  seg.word_tokens.reserve(tokens.size());
  for (const auto& t : tokens) seg.word_tokens.push_back(t.text);
  return seg;
}

}  // namespace

std::string_view to_string(Level level) {
  return level == Level::Sentence ? "sentence" : "ngram";
}

Level level_from_string(std::string_view name) {
  if (name == "sentence") return Level::Sentence;
  if (name == "ngram") return Level::Ngram;
  throw Error(ErrorCode::InvalidArgument,
              "unknown segmentation level '" + std::string(name) + "'");
}

void SegmentationConfig::validate() const {
  if (level == Level::Ngram && n < 2) {
    throw Error(ErrorCode::InvalidConfig, "n-gram size must be at least 2");
  }
}

bool is_abbreviation(std::string_view token) {
  if (token.size() < 2 || token.back() != '.') return false;
  const auto stem = token.substr(0, token.size() - 1);

  // Initials: "C." "C.S." "U.S." and the Latin "i.e." / "e.g.".
  bool initials = true;
  for (std::size_t i = 0; i < token.size(); i += 2) {
    const bool letter = std::isalpha(static_cast<unsigned char>(token[i])) != 0;
    const bool dot = i + 1 < token.size() && token[i + 1] == '.';
    if (!letter || !dot) {
      initials = false;
      break;
    }
  }
  if (initials) {
    const bool upper = std::isupper(static_cast<unsigned char>(token[0])) != 0;
    if (upper || token == "i.e." || token == "e.g.") return true;
  }

  std::string lower(stem);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), lower) !=
         kAbbreviations.end();
}

std::vector<WordToken> word_tokenize(std::string_view text) {
  std::vector<WordToken> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && utf8::is_space(text[i])) ++i;
    if (i == text.size()) break;
    const std::size_t start = i;
    while (i < text.size() && !utf8::is_space(text[i])) ++i;
    tokens.push_back({std::string(text.substr(start, i - start)), start, i});
  }
  return tokens;
}

std::vector<Segment> split_sentences(std::string_view text) {
  const auto tokens = word_tokenize(text);
  const CodePointIndex cps(text);
  std::vector<Segment> out;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const bool last = i + 1 == tokens.size();
    if (last || (ends_sentence(tokens[i].text) &&
                 starts_sentence(tokens[i + 1].text))) {
      out.push_back(make_segment(
          text, cps, Level::Sentence, out.size(),
          std::span<const WordToken>(tokens).subspan(begin, i + 1 - begin)));
      begin = i + 1;
    }
  }
  return out;
}

std::vector<Segment> split_ngrams(std::string_view text,
                                  const SegmentationConfig& cfg) {
  cfg.validate();
  const auto tokens = word_tokenize(text);
  const CodePointIndex cps(text);
  const std::span<const WordToken> all(tokens);
  const std::size_t total = tokens.size();
  const std::size_t n = cfg.n;
  std::vector<Segment> out;
  if (cfg.overlap) {
    for (std::size_t i = 0; i + n <= total; ++i) {
      out.push_back(make_segment(text, cps, Level::Ngram, out.size(),
                                 all.subspan(i, n)));
    }
    return out;
  }
  for (std::size_t i = 0; i < total; i += n) {
    const std::size_t len = std::min(n, total - i);
    if (len < n && !cfg.keep_remainder) break;
    out.push_back(
        make_segment(text, cps, Level::Ngram, out.size(), all.subspan(i, len)));
  }
  return out;
}

std::vector<Segment> segment_passage(std::string_view text,
                                     const SegmentationConfig& cfg) {
  if (cfg.level == Level::Sentence) return split_sentences(text);
  return split_ngrams(text, cfg);
}

void write_jsonl(std::ostream& out, const std::vector<Segment>& segments) {
  for (const auto& s : segments) {
    nlohmann::ordered_json j;
    j["index"] = s.index;
    j["level"] = to_string(s.level);
    j["char_start"] = s.char_start;
    j["char_end"] = s.char_end;
    j["text"] = s.text;
    j["tokens"] = s.word_tokens;
    out << j.dump() << '\n';
  }
}

std::vector<Segment> read_jsonl(std::istream& in) {
  std::vector<Segment> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Segment s;
      s.index = j.at("index").get<std::size_t>();
      s.level = level_from_string(j.at("level").get<std::string>());
      s.char_start = j.at("char_start").get<std::size_t>();
      s.char_end = j.at("char_end").get<std::size_t>();
      s.text = j.at("text").get<std::string>();
      s.word_tokens = j.at("tokens").get<std::vector<std::string>>();
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::CorruptRecord,
                  "segment JSONL line " + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  return out;
}

}  // namespace influence::segment
