#include "influence/ingest.hpp"

#include <unicode/bytestream.h>
#include <unicode/normalizer2.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>

#include "influence/error.hpp"
#include "influence/utf8.hpp"

namespace influence::ingest {

namespace {

using nlohmann::json;

constexpr std::string_view kStartMarker = "*** start of";
constexpr std::string_view kEndMarker = "*** end of";

bool contains_ci(std::string_view haystack, std::string_view needle_lower) {
  if (needle_lower.size() > haystack.size()) return false;
  auto it = std::search(haystack.begin(), haystack.end(), needle_lower.begin(),
                        needle_lower.end(), [](char a, char b) {
                          return std::tolower(static_cast<unsigned char>(a)) ==
                                 b;
                        });
  return it != haystack.end();
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && utf8::is_space(s[b])) ++b;
  while (e > b && utf8::is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (true) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

std::string to_nfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    throw Error(ErrorCode::EncodingError,
                std::string("NFC normalizer unavailable: ") +
                    u_errorName(status));
  }
  std::string out;
  icu::StringByteSink<std::string> sink(&out, static_cast<int32_t>(text.size()));
  nfc->normalizeUTF8(0, icu::StringPiece(text.data(),
                                         static_cast<int32_t>(text.size())),
                     sink, nullptr, status);
  if (U_FAILURE(status)) {
    throw Error(ErrorCode::EncodingError,
                std::string("NFC normalization failed: ") +
                    u_errorName(status));
  }
  return out;
}

std::size_t count_occurrences(std::string_view text, std::string_view needle,
                              std::size_t& first) {
  std::size_t count = 0;
  first = std::string_view::npos;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + 1)) {
    if (count == 0) first = pos;
    ++count;
  }
  return count;
}

PassageSpan make_span(std::string_view text, std::size_t b, std::size_t e) {
  while (b < e && utf8::is_space(text[b])) ++b;
  while (e > b && utf8::is_space(text[e - 1])) --e;
  PassageSpan span;
  span.byte_start = b;
  span.byte_end = e;
  span.char_start = utf8::count_code_points(text.substr(0, b));
  span.char_end = span.char_start + utf8::count_code_points(text.substr(b, e - b));
  return span;
}

long long as_int(const std::variant<long long, std::string>& v,
                 const char* what) {
  if (const auto* i = std::get_if<long long>(&v)) return *i;
  throw Error(ErrorCode::InvalidArgument,
              std::string("selector ") + what + " must be an integer");
}

const std::string& as_marker(const std::variant<long long, std::string>& v,
                             const char* what) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw Error(ErrorCode::InvalidArgument,
              std::string("selector ") + what + " must be a marker string");
}

PassageSelector parse_selector(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("mode") || !j.contains("start") ||
      !j.contains("end")) {
    throw Error(ErrorCode::InvalidManifest,
                where + ": range needs {mode, start, end}");
  }
  PassageSelector sel;
  try {
    sel.mode = selector_mode_from_string(j.at("mode").get<std::string>());
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidManifest, where + ": " + e.detail());
  }
  auto read_bound = [&](const json& v) -> std::variant<long long, std::string> {
    if (sel.mode == SelectorMode::MarkerPair) {
      if (!v.is_string()) {
        throw Error(ErrorCode::InvalidManifest,
                    where + ": marker_pair bounds must be strings");
      }
      return v.get<std::string>();
    }
    if (!v.is_number_integer()) {
      throw Error(ErrorCode::InvalidManifest,
                  where + ": span bounds must be integers");
    }
    return v.get<long long>();
  };
  sel.start = read_bound(j.at("start"));
  sel.end = read_bound(j.at("end"));
  return sel;
}

}  // namespace

std::string_view to_string(SelectorMode mode) {
  switch (mode) {
    case SelectorMode::CharSpan: return "char_span";
    case SelectorMode::LineSpan: return "line_span";
    case SelectorMode::MarkerPair: return "marker_pair";
  }
  return "char_span";
}

SelectorMode selector_mode_from_string(std::string_view name) {
  if (name == "char_span") return SelectorMode::CharSpan;
  if (name == "line_span") return SelectorMode::LineSpan;
  if (name == "marker_pair") return SelectorMode::MarkerPair;
  throw Error(ErrorCode::InvalidArgument,
              "unknown selector mode '" + std::string(name) + "'");
}

std::string_view to_string(Side side) {
  return side == Side::Candidate ? "candidate" : "reference";
}

Side side_from_string(std::string_view name) {
  if (name == "candidate") return Side::Candidate;
  if (name == "reference") return Side::Reference;
  throw Error(ErrorCode::InvalidArgument,
              "unknown side '" + std::string(name) + "'");
}

PassageSelector PassageSelector::char_span(long long start, long long end) {
  return {SelectorMode::CharSpan, start, end};
}

PassageSelector PassageSelector::line_span(long long start, long long end) {
  return {SelectorMode::LineSpan, start, end};
}

PassageSelector PassageSelector::marker_pair(std::string start,
                                             std::string end) {
  return {SelectorMode::MarkerPair, std::move(start), std::move(end)};
}

const DocumentEntry& Manifest::document(std::string_view id) const {
  for (const auto& d : documents) {
    if (d.id == id) return d;
  }
  throw Error(ErrorCode::InvalidManifest,
              "unknown document id '" + std::string(id) + "'");
}

std::vector<std::string_view> strip_boilerplate(
    const std::vector<std::string_view>& lines) {
  std::size_t first_end = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (contains_ci(lines[i], kEndMarker)) {
      first_end = i;
      break;
    }
  }
  std::size_t body_begin = 0;
  for (std::size_t i = first_end; i-- > 0;) {
    if (contains_ci(lines[i], kStartMarker)) {
      body_begin = i + 1;
      break;
    }
  }
  return {lines.begin() + static_cast<std::ptrdiff_t>(body_begin),
          lines.begin() + static_cast<std::ptrdiff_t>(first_end)};
}

std::string normalize_text(std::string_view raw) {
  if (auto bad = utf8::find_invalid(raw)) {
    throw Error(ErrorCode::EncodingError,
                "invalid UTF-8 at byte " + std::to_string(*bad));
  }
  if (raw.starts_with("\xEF\xBB\xBF")) raw.remove_prefix(3);

  std::string text = to_nfc(raw);
  std::string lf_only;
  lf_only.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;
      lf_only.push_back('\n');
    } else {
      lf_only.push_back(text[i]);
    }
  }

  const auto body = strip_boilerplate(split_lines(lf_only));

  // Reflow: a paragraph is a run of non-blank lines; its hard breaks become
  // single spaces.
  std::string out;
  bool in_paragraph = false;
  bool pending_break = false;
  for (auto line : body) {
    auto t = trim(line);
    if (t.empty()) {
      if (in_paragraph) pending_break = true;
      in_paragraph = false;
      continue;
    }
    if (in_paragraph) {
      out.push_back(' ');
    } else if (pending_break) {
      out.append("\n\n");
      pending_break = false;
    }
    out.append(t);
    in_paragraph = true;
  }
  if (out.empty()) {
    throw Error(ErrorCode::EmptyAfterStrip, "no body text after stripping");
  }
  return out;
}

TextDocument load_document(const std::filesystem::path& path,
                           const std::string& id, const std::string& title) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::FileNotFound, path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::string raw((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed: " + path.string());

  TextDocument doc;
  doc.id = id;
  doc.title = title;
  doc.raw_path = path;
  try {
    doc.text = normalize_text(raw);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
  doc.char_count = utf8::count_code_points(doc.text);
  return doc;
}

PassageSpan resolve_selector(const TextDocument& doc,
                             const PassageSelector& sel) {
  const std::string_view text = doc.text;
  PassageSpan span;
  switch (sel.mode) {
    case SelectorMode::CharSpan: {
      const auto start = as_int(sel.start, "start");
      const auto end = as_int(sel.end, "end");
      if (start < 0 || end <= start ||
          static_cast<std::size_t>(end) > doc.char_count) {
        throw Error(ErrorCode::SelectorOutOfRange,
                    "char_span(" + std::to_string(start) + ", " +
                        std::to_string(end) + ") outside document '" + doc.id +
                        "' of " + std::to_string(doc.char_count) + " chars");
      }
      span.byte_start = *utf8::byte_offset_of(text, static_cast<std::size_t>(start));
      span.byte_end = *utf8::byte_offset_of(text, static_cast<std::size_t>(end));
      span.char_start = static_cast<std::size_t>(start);
      span.char_end = static_cast<std::size_t>(end);
      break;
    }
    case SelectorMode::LineSpan: {
      const auto start = as_int(sel.start, "start");
      const auto end = as_int(sel.end, "end");
      const auto lines = split_lines(text);
      if (start < 0 || end <= start ||
          static_cast<std::size_t>(end) > lines.size()) {
        throw Error(ErrorCode::SelectorOutOfRange,
                    "line_span(" + std::to_string(start) + ", " +
                        std::to_string(end) + ") outside document '" + doc.id +
                        "' of " + std::to_string(lines.size()) + " lines");
      }
      const auto& first = lines[static_cast<std::size_t>(start)];
      const auto& last = lines[static_cast<std::size_t>(end - 1)];
      const auto b = static_cast<std::size_t>(first.data() - text.data());
      const auto e = static_cast<std::size_t>(last.data() - text.data()) +
                     last.size();
      span = make_span(text, b, e);
      break;
    }
    case SelectorMode::MarkerPair: {
      const auto& start_marker = as_marker(sel.start, "start");
      const auto& end_marker = as_marker(sel.end, "end");
      if (start_marker.empty() || end_marker.empty()) {
        throw Error(ErrorCode::MarkerNotFound, "empty marker string");
      }
      auto locate = [&](const std::string& marker) {
        std::size_t pos = 0;
        const auto n = count_occurrences(text, marker, pos);
        if (n == 0) {
          throw Error(ErrorCode::MarkerNotFound,
                      "marker '" + marker + "' absent from '" + doc.id + "'");
        }
        if (n > 1) {
          throw Error(ErrorCode::MarkerNotFound,
                      "marker '" + marker + "' ambiguous in '" + doc.id +
                          "' (" + std::to_string(n) + " occurrences)");
        }
        return pos;
      };
      const auto start_pos = locate(start_marker);
      const auto end_pos = locate(end_marker);
      const auto body_begin = start_pos + start_marker.size();
      if (end_pos < body_begin) {
        throw Error(ErrorCode::SelectorOutOfRange,
                    "end marker '" + end_marker + "' precedes start marker '" +
                        start_marker + "' in '" + doc.id + "'");
      }
      span = make_span(text, body_begin, end_pos);
      break;
    }
  }
  if (span.byte_end <= span.byte_start) {
    throw Error(ErrorCode::SelectorOutOfRange,
                "selector resolves to an empty passage of '" + doc.id + "'");
  }
  return span;
}

std::string extract_passage(const TextDocument& doc,
                            const PassageSelector& sel) {
  const auto span = resolve_selector(doc, sel);
  return doc.text.substr(span.byte_start, span.byte_end - span.byte_start);
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "manifest " + path.string());
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidManifest,
                path.string() + ": " + e.what());
  }

  Manifest m;
  m.path = path;
  const auto base = path.parent_path();
  try {
    for (const auto& d : root.at("documents")) {
      DocumentEntry e;
      e.id = d.at("id").get<std::string>();
      e.title = d.value("title", std::string{});
      std::filesystem::path p = d.at("path").get<std::string>();
      e.path = p.is_absolute() ? p : base / p;
      for (const auto& prev : m.documents) {
        if (prev.id == e.id) {
          throw Error(ErrorCode::InvalidManifest,
                      "duplicate document id '" + e.id + "'");
        }
      }
      m.documents.push_back(std::move(e));
    }
    for (const auto& j : root.at("instances")) {
      InstanceSpec inst;
      inst.instance_id = j.at("instance_id").get<int>();
      const auto where = "instance " + std::to_string(inst.instance_id);
      inst.candidate_doc = j.at("candidate_doc").get<std::string>();
      inst.reference_doc = j.at("reference_doc").get<std::string>();
      inst.candidate_range = parse_selector(j.at("candidate_range"), where);
      inst.reference_range = parse_selector(j.at("reference_range"), where);
      inst.notes = j.value("notes", std::string{});
      if (j.contains("expert_spans")) {
        for (const auto& s : j.at("expert_spans")) {
          ExpertSpan span;
          span.side = side_from_string(s.at("side").get<std::string>());
          span.char_start = s.at("char_start").get<std::size_t>();
          span.char_end = s.at("char_end").get<std::size_t>();
          if (span.char_end <= span.char_start) {
            throw Error(ErrorCode::InvalidManifest,
                        where + ": expert span end must follow start");
          }
          inst.expert_spans.push_back(span);
        }
      }
      if (inst.candidate_doc == inst.reference_doc) {
        throw Error(ErrorCode::InvalidManifest,
                    where + ": candidate_doc and reference_doc must differ");
      }
      m.document(inst.candidate_doc);
      m.document(inst.reference_doc);
      for (const auto& prev : m.instances) {
        if (prev.instance_id == inst.instance_id) {
          throw Error(ErrorCode::InvalidManifest,
                      "duplicate instance_id " +
                          std::to_string(inst.instance_id));
        }
      }
      m.instances.push_back(std::move(inst));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, path.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidManifest) throw;
    throw Error(ErrorCode::InvalidManifest, path.string() + ": " + e.detail());
  }
  return m;
}

}  // namespace influence::ingest
