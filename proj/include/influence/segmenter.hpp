#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace influence::segment {

enum class Level { Sentence, Ngram };

std::string_view to_string(Level level);
Level level_from_string(std::string_view name);

struct WordToken {
  std::string text;
  std::size_t byte_start = 0;
  std::size_t byte_end = 0;
};

/// One comparison unit. `char_start`/`char_end` are code point offsets into
/// the passage (what the JSONL interchange carries); `byte_start`/`byte_end`
/// address the same range in the UTF-8 bytes.
struct Segment {
  std::size_t index = 0;
  Level level = Level::Sentence;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::size_t byte_start = 0;
  std::size_t byte_end = 0;
  std::string text;
  std::vector<std::string> word_tokens;

  bool operator==(const Segment&) const = default;
};

struct SegmentationConfig {
  Level level = Level::Ngram;
  std::size_t n = 5;
  bool overlap = false;
  /// Non-overlapping mode only: keep a final chunk shorter than n.
  bool keep_remainder = true;

  void validate() const;
};

/// Maximal runs of non-whitespace; punctuation stays attached.
std::vector<WordToken> word_tokenize(std::string_view text);

/// Rule-based sentence split on . ! ? (plus trailing closing quotes or
/// brackets) followed by whitespace and an uppercase letter, digit, or
/// opening quote. Abbreviations and initials do not end a sentence.
std::vector<Segment> split_sentences(std::string_view text);

std::vector<Segment> split_ngrams(std::string_view text,
                                  const SegmentationConfig& cfg);

std::vector<Segment> segment_passage(std::string_view text,
                                     const SegmentationConfig& cfg);

/// True when the token (a whitespace word ending in '.') is a known
/// abbreviation or an initial such as "C." or "C.S.".
bool is_abbreviation(std::string_view token);

// JSON Lines: {index, level, char_start, char_end, text, tokens}
void write_jsonl(std::ostream& out, const std::vector<Segment>& segments);

/// Parses JSONL written by write_jsonl. Byte offsets are not part of the
/// interchange and come back as zero.
std::vector<Segment> read_jsonl(std::istream& in);

}  // namespace influence::segment
