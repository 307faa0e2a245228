#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace influence::ingest {

/// Cleaned text of one book. `text` is NFC-normalized UTF-8 with the
/// Gutenberg boilerplate removed, paragraphs on single lines separated by
/// exactly one blank line, and no leading or trailing whitespace.
struct TextDocument {
  std::string id;
  std::string title;
  std::filesystem::path raw_path;
  std::string text;
  /// Length of `text` in Unicode code points.
  std::size_t char_count = 0;
};

enum class SelectorMode { CharSpan, LineSpan, MarkerPair };

std::string_view to_string(SelectorMode mode);
SelectorMode selector_mode_from_string(std::string_view name);

/// Picks a passage out of a document.
///
///  - CharSpan:   [start, end) code point offsets into the text.
///  - LineSpan:   [start, end) 0-based line numbers of the normalized text.
///  - MarkerPair: text strictly between the single occurrence of the start
///                marker and the single occurrence of the end marker,
///                with surrounding whitespace trimmed.
struct PassageSelector {
  SelectorMode mode = SelectorMode::CharSpan;
  std::variant<long long, std::string> start;
  std::variant<long long, std::string> end;

  static PassageSelector char_span(long long start, long long end);
  static PassageSelector line_span(long long start, long long end);
  static PassageSelector marker_pair(std::string start, std::string end);
};

/// Resolved location of a passage inside TextDocument::text.
struct PassageSpan {
  std::size_t byte_start = 0;
  std::size_t byte_end = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
};

enum class Side { Candidate, Reference };

std::string_view to_string(Side side);
Side side_from_string(std::string_view name);

/// Expert-marked region of a passage, in code point offsets relative to the
/// extracted passage of the given side.
struct ExpertSpan {
  Side side = Side::Candidate;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
};

struct InstanceSpec {
  int instance_id = 0;
  std::string candidate_doc;
  std::string reference_doc;
  PassageSelector candidate_range;
  PassageSelector reference_range;
  std::string notes;
  std::vector<ExpertSpan> expert_spans;
};

struct DocumentEntry {
  std::string id;
  std::string title;
  std::filesystem::path path;  // resolved against the manifest directory
};

struct Manifest {
  std::filesystem::path path;
  std::vector<DocumentEntry> documents;
  std::vector<InstanceSpec> instances;

  const DocumentEntry& document(std::string_view id) const;
};

/// Cleans raw file bytes: UTF-8 validation, NFC, CR removal, boilerplate
/// stripping, paragraph reflow. Throws EncodingError / EmptyAfterStrip.
std::string normalize_text(std::string_view raw);

/// Removes everything outside the innermost START/END marker pair. Lines are
/// returned without their terminating newline.
std::vector<std::string_view> strip_boilerplate(
    const std::vector<std::string_view>& lines);

TextDocument load_document(const std::filesystem::path& path,
                           const std::string& id,
                           const std::string& title = {});

PassageSpan resolve_selector(const TextDocument& doc,
                             const PassageSelector& sel);

std::string extract_passage(const TextDocument& doc,
                            const PassageSelector& sel);

Manifest load_manifest(const std::filesystem::path& path);

}  // namespace influence::ingest
