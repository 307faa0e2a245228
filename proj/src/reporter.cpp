#include "influence/reporter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "influence/error.hpp"
#include "influence/utf8.hpp"

namespace influence::report {

namespace {

using nlohmann::ordered_json;

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// Merged [start, end) code point ranges of `spans` for `side`, clipped to the
// segment and rebased to segment-relative offsets.
std::vector<std::pair<std::size_t, std::size_t>> highlight_ranges(
    const segment::Segment& seg, ingest::Side side,
    std::span<const ingest::ExpertSpan> spans) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (const auto& s : spans) {
    if (s.side != side) continue;
    const auto b = std::max(s.char_start, seg.char_start);
    const auto e = std::min(s.char_end, seg.char_end);
    if (b < e) ranges.emplace_back(b - seg.char_start, e - seg.char_start);
  }
  std::sort(ranges.begin(), ranges.end());
  std::vector<std::pair<std::size_t, std::size_t>> merged;
  for (const auto& r : ranges) {
    if (!merged.empty() && r.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, r.second);
    } else {
      merged.push_back(r);
    }
  }
  return merged;
}

std::string highlighted_text(const segment::Segment& seg, ingest::Side side,
                             std::span<const ingest::ExpertSpan> spans) {
  const auto ranges = highlight_ranges(seg, side, spans);
  if (ranges.empty()) return html_escape(seg.text);
  std::string out;
  std::size_t cursor = 0;  // byte offset into seg.text
  for (const auto& [b, e] : ranges) {
    const auto bb = *utf8::byte_offset_of(seg.text, b);
    const auto eb = utf8::byte_offset_of(seg.text, e).value_or(seg.text.size());
    out += html_escape(std::string_view(seg.text).substr(cursor, bb - cursor));
    out += "<span class=\"expert\">";
    out += html_escape(std::string_view(seg.text).substr(bb, eb - bb));
    out += "</span>";
    cursor = eb;
  }
  out += html_escape(std::string_view(seg.text).substr(cursor));
  return out;
}

const segment::Segment& find_segment(std::span<const segment::Segment> segs,
                                     std::size_t index, const char* side) {
  if (index < segs.size() && segs[index].index == index) return segs[index];
  for (const auto& s : segs) {
    if (s.index == index) return s;
  }
  throw Error(ErrorCode::InvalidArgument, std::string(side) + " segment " +
                                              std::to_string(index) +
                                              " not found");
}

ordered_json grid_json(const SimilarityMatrix& m, Metric metric) {
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < m.cand_count; ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t j = 0; j < m.ref_count; ++j) row.push_back(m.value(i, j, metric));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json indices_json(const std::vector<std::size_t>& v) {
  ordered_json a = ordered_json::array();
  for (auto x : v) a.push_back(x);
  return a;
}

}  // namespace

Rgb parse_hex_color(std::string_view hex) {
  if (hex.size() != 7 || hex[0] != '#') {
    throw Error(ErrorCode::InvalidArgument,
                "color must look like #rrggbb: '" + std::string(hex) + "'");
  }
  auto byte = [&](std::size_t at) {
    unsigned v = 0;
    for (std::size_t k = at; k < at + 2; ++k) {
      const char c = hex[k];
      v <<= 4;
      if (c >= '0' && c <= '9') v |= static_cast<unsigned>(c - '0');
      else if (c >= 'a' && c <= 'f') v |= static_cast<unsigned>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') v |= static_cast<unsigned>(c - 'A' + 10);
      else throw Error(ErrorCode::InvalidArgument, "bad hex color '" + std::string(hex) + "'");
    }
    return static_cast<std::uint8_t>(v);
  };
  return {byte(1), byte(3), byte(5)};
}

std::string to_hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

Colormap::Colormap(std::vector<ColorAnchor> anchors) : anchors_(std::move(anchors)) {
  if (anchors_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "colormap needs at least one anchor");
  }
  for (std::size_t k = 1; k < anchors_.size(); ++k) {
    if (!(anchors_[k].value > anchors_[k - 1].value)) {
      throw Error(ErrorCode::InvalidArgument,
                  "colormap anchor values must be strictly increasing");
    }
  }
}

Colormap Colormap::standard() {
  return Colormap({{0.20, parse_hex_color("#2ca02c")},
                   {0.50, parse_hex_color("#ffdf00")},
                   {0.80, parse_hex_color("#d62728")}});
}

double Colormap::position(double value) const {
  if (anchors_.size() == 1 || value <= anchors_.front().value) return 0.0;
  if (value >= anchors_.back().value) {
    return static_cast<double>(anchors_.size() - 1);
  }
  std::size_t k = 0;
  while (value > anchors_[k + 1].value) ++k;
  const double t = (value - anchors_[k].value) /
                   (anchors_[k + 1].value - anchors_[k].value);
  return static_cast<double>(k) + t;
}

Rgb Colormap::color(double value) const {
  const double pos = position(value);
  const auto k = std::min(static_cast<std::size_t>(pos), anchors_.size() - 1);
  if (k + 1 >= anchors_.size()) return anchors_.back().color;
  const double t = pos - static_cast<double>(k);
  const Rgb a = anchors_[k].color;
  const Rgb b = anchors_[k + 1].color;
  auto mix = [t](std::uint8_t x, std::uint8_t y) {
    return static_cast<std::uint8_t>(std::lround(x + (y - x) * t));
  };
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

std::string format_scores(const score::ScoreTriple& t) {
  return "p = " + fixed(t.p, 2) + ", r = " + fixed(t.r, 2) +
         ", F1 = " + fixed(t.f1, 2);
}

std::string heatmap_svg(const SimilarityMatrix& m, const ReportSpec& spec) {
  const std::size_t cols = m.cand_count;  // x: candidate segments
  const std::size_t rows = m.ref_count;   // y: reference segments
  const bool annotate = cols <= 20 && rows <= 20;
  const std::size_t longest = std::max(cols, rows);
  const std::size_t cell =
      annotate ? 36 : std::clamp<std::size_t>(900 / std::max<std::size_t>(longest, 1), 2, 28);
  const std::size_t label_every = longest <= 50 ? 1 : (longest <= 200 ? 10 : 50);

  const std::size_t left = 70;
  const std::size_t top = 50;
  const std::size_t grid_w = cols * cell;
  const std::size_t grid_h = rows * cell;
  const std::size_t legend_x = left + grid_w + 30;
  const std::size_t legend_w = 18;
  const std::size_t legend_h = std::max<std::size_t>(grid_h, 200);
  const std::size_t width = legend_x + legend_w + 60;
  const std::size_t height = top + std::max(grid_h, legend_h) + 60;
  const auto metric = std::string(score::to_string(spec.metric));

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\" font-family=\"sans-serif\">\n"
      << "<text x=\"" << left << "\" y=\"22\" font-size=\"15\">" << metric
      << " scores: instance " << spec.instance_id << ", "
      << segment::to_string(spec.level) << " level (" << cols << " x " << rows
      << ")</text>\n";

  svg << "<g class=\"grid\">\n";
  for (std::size_t i = 0; i < cols; ++i) {
    for (std::size_t j = 0; j < rows; ++j) {
      const double v = m.value(i, j, spec.metric);
      const std::size_t x = left + i * cell;
      const std::size_t y = top + j * cell;
      svg << "<rect class=\"cell\" x=\"" << x << "\" y=\"" << y
          << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
          << to_hex(spec.colormap.color(v)) << "\"><title>candidate " << i
          << ", reference " << j << ": " << metric << " = " << fixed(v, 4)
          << "</title></rect>\n";
      if (annotate) {
        svg << "<text class=\"value\" x=\"" << x + cell / 2 << "\" y=\""
            << y + cell / 2 + 4 << "\" font-size=\"10\" text-anchor=\"middle\">"
            << fixed(v, 2) << "</text>\n";
      }
    }
  }
  svg << "</g>\n<g class=\"axes\" font-size=\"10\">\n";
  for (std::size_t i = 0; i < cols; i += label_every) {
    svg << "<text x=\"" << left + i * cell + cell / 2 << "\" y=\""
        << top + grid_h + 14 << "\" text-anchor=\"middle\">" << i << "</text>\n";
  }
  for (std::size_t j = 0; j < rows; j += label_every) {
    svg << "<text x=\"" << left - 6 << "\" y=\"" << top + j * cell + cell / 2 + 4
        << "\" text-anchor=\"end\">" << j << "</text>\n";
  }
  svg << "<text x=\"" << left + grid_w / 2 << "\" y=\"" << top + grid_h + 34
      << "\" text-anchor=\"middle\" font-size=\"12\">candidate segment</text>\n"
      << "<text x=\"16\" y=\"" << top + grid_h / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
      << top + grid_h / 2 << ")\">reference segment</text>\n</g>\n";

  // Legend strip, high values at the top.
  const auto& anchors = spec.colormap.anchors();
  const double lo = anchors.front().value;
  const double hi = anchors.back().value;
  constexpr std::size_t steps = 50;
  const double step_h = static_cast<double>(legend_h) / steps;
  svg << "<g class=\"legend\" font-size=\"10\">\n";
  for (std::size_t s = 0; s < steps; ++s) {
    const double v = hi - (hi - lo) * (static_cast<double>(s) + 0.5) / steps;
    svg << "<rect class=\"legend\" x=\"" << legend_x << "\" y=\""
        << fixed(static_cast<double>(top) + s * step_h, 2) << "\" width=\""
        << legend_w << "\" height=\"" << fixed(step_h + 0.05, 2) << "\" fill=\""
        << to_hex(spec.colormap.color(v)) << "\"/>\n";
  }
  for (const auto& a : anchors) {
    const double y = hi > lo ? static_cast<double>(top) +
                                   (hi - a.value) / (hi - lo) * static_cast<double>(legend_h)
                             : static_cast<double>(top);
    svg << "<text x=\"" << legend_x + legend_w + 4 << "\" y=\"" << fixed(y + 3, 2)
        << "\">" << fixed(a.value, 2) << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw Error(ErrorCode::IoError, "cannot create " +
                                          path.parent_path().string() + ": " +
                                          ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

std::filesystem::path render_heatmap(const SimilarityMatrix& m,
                                     const ReportSpec& spec) {
  const auto path = spec.output_dir /
                    ("heatmap_" + std::string(score::to_string(spec.metric)) + ".svg");
  write_text_file(path, heatmap_svg(m, spec));
  return path;
}

std::string pair_report_html(const ingest::InstanceSpec& instance,
                             std::span<const RankedPair> ranked,
                             std::span<const segment::Segment> cand_segments,
                             std::span<const segment::Segment> ref_segments,
                             const ReportSpec& spec) {
  if (ranked.empty()) {
    throw Error(ErrorCode::InvalidArgument, "pair report needs at least one pair");
  }
  const bool highlight = !spec.expert_spans.empty();
  const auto level = std::string(segment::to_string(spec.level));
  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
       << "<title>Instance " << instance.instance_id << " " << level
       << " pairs</title>\n<style>\n"
       << "body{font-family:Georgia,serif;margin:2em;}\n"
       << "table{border-collapse:collapse;width:100%;}\n"
       << "th,td{border:1px solid #999;padding:6px;vertical-align:top;}\n"
       << "td.scores{white-space:nowrap;font-family:monospace;}\n"
       << ".badge{display:inline-block;margin:2px;padding:1px 6px;"
          "border-radius:8px;background:#eee;font-size:80%;font-family:sans-serif;}\n";
  if (highlight) html << ".expert{background:#b7e4a8;}\n";
  html << "</style>\n</head>\n<body>\n"
       << "<h1>Instance " << instance.instance_id << ": "
       << html_escape(instance.candidate_doc) << " vs "
       << html_escape(instance.reference_doc) << "</h1>\n"
       << "<p>Level: " << level << ". Ranked by "
       << score::to_string(spec.metric) << ", top " << ranked.size() << ".";
  if (!instance.notes.empty()) html << " " << html_escape(instance.notes);
  html << "</p>\n<table>\n<thead><tr><th>#</th><th>Candidate text</th>"
          "<th>Reference text</th><th>Results</th></tr></thead>\n<tbody>\n";
  std::size_t rank = 0;
  for (const auto& pair : ranked) {
    const auto& cand = find_segment(cand_segments, pair.cand_index, "candidate");
    const auto& ref = find_segment(ref_segments, pair.ref_index, "reference");
    html << "<tr class=\"pair\"><td>" << ++rank << "</td><td>"
         << highlighted_text(cand, ingest::Side::Candidate, spec.expert_spans)
         << " <small>(" << level << ' ' << pair.cand_index << ")</small></td><td>"
         << highlighted_text(ref, ingest::Side::Reference, spec.expert_spans)
         << " <small>(" << level << ' ' << pair.ref_index
         << ")</small></td><td class=\"scores\">" << format_scores(pair.triple);
    for (const auto& name : analyze::flag_names(pair.flags)) {
      html << "<br><span class=\"badge\">" << name << "</span>";
    }
    html << "</td></tr>\n";
  }
  html << "</tbody>\n</table>\n</body>\n</html>\n";
  return html.str();
}

std::filesystem::path render_pair_report(
    const ingest::InstanceSpec& instance, std::span<const RankedPair> ranked,
    std::span<const segment::Segment> cand_segments,
    std::span<const segment::Segment> ref_segments, const ReportSpec& spec) {
  const auto path = spec.output_dir / "pairs.html";
  write_text_file(path, pair_report_html(instance, ranked, cand_segments,
                                         ref_segments, spec));
  return path;
}

std::string bundle_json(const MatrixBundle& bundle) {
  const auto& m = bundle.matrix;
  std::vector<std::size_t> short_c, short_r, streak_c, streak_r;
  for (std::size_t i = 0; i < m.cand_count; ++i) {
    if (m.cand_token_counts[i] < bundle.min_tokens) short_c.push_back(i);
  }
  for (std::size_t j = 0; j < m.ref_count; ++j) {
    if (m.ref_token_counts[j] < bundle.min_tokens) short_r.push_back(j);
  }
  ordered_json streaks = ordered_json::array();
  for (const auto& s : bundle.streaks) {
    (s.axis == analyze::StreakAxis::CandidateColumn ? streak_c : streak_r)
        .push_back(s.index);
    ordered_json j;
    j["axis"] = analyze::to_string(s.axis);
    j["index"] = s.index;
    j["mean_score"] = s.mean_score;
    j["threshold_used"] = s.threshold_used;
    streaks.push_back(std::move(j));
  }

  ordered_json root;
  root["instance_id"] = m.instance_id;
  root["level"] = segment::to_string(m.level);
  root["metric"] = score::to_string(bundle.metric);
  root["shape"] = {m.cand_count, m.ref_count};
  root["values"] = {{"p", grid_json(m, Metric::P)},
                    {"r", grid_json(m, Metric::R)},
                    {"f1", grid_json(m, Metric::F1)}};
  root["cand_token_counts"] = indices_json(m.cand_token_counts);
  root["ref_token_counts"] = indices_json(m.ref_token_counts);
  root["flags"] = {{"min_tokens", bundle.min_tokens},
                   {"short_candidates", indices_json(short_c)},
                   {"short_references", indices_json(short_r)},
                   {"streak_candidates", indices_json(streak_c)},
                   {"streak_references", indices_json(streak_r)}};
  root["streak_quantile"] = bundle.streak_quantile;
  root["streaks"] = std::move(streaks);
  root["diagonal_alignment"] = bundle.diagonal_alignment
                                   ? ordered_json(*bundle.diagonal_alignment)
                                   : ordered_json(nullptr);
  ordered_json top = ordered_json::array();
  for (const auto& p : bundle.top_pairs) {
    ordered_json j;
    j["cand_index"] = p.cand_index;
    j["ref_index"] = p.ref_index;
    j["p"] = p.triple.p;
    j["r"] = p.triple.r;
    j["f1"] = p.triple.f1;
    j["flags"] = analyze::flag_names(p.flags);
    top.push_back(std::move(j));
  }
  root["top_pairs"] = std::move(top);
  return root.dump(1) + "\n";
}

MatrixBundle parse_bundle(std::string_view json_text) {
  MatrixBundle b;
  try {
    const auto root = nlohmann::json::parse(json_text);
    auto& m = b.matrix;
    m.instance_id = root.at("instance_id").get<int>();
    m.level = segment::level_from_string(root.at("level").get<std::string>());
    b.metric = score::metric_from_string(root.at("metric").get<std::string>());
    const auto shape = root.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2) throw Error(ErrorCode::CorruptRecord, "bad shape");
    m.cand_count = shape[0];
    m.ref_count = shape[1];
    m.triples.resize(m.cand_count * m.ref_count);
    const auto& values = root.at("values");
    for (Metric metric : {Metric::P, Metric::R, Metric::F1}) {
      const auto& grid = values.at(std::string(score::to_string(metric)));
      if (grid.size() != m.cand_count) {
        throw Error(ErrorCode::CorruptRecord, "grid row count mismatch");
      }
      for (std::size_t i = 0; i < m.cand_count; ++i) {
        if (grid[i].size() != m.ref_count) {
          throw Error(ErrorCode::CorruptRecord, "grid column count mismatch");
        }
        for (std::size_t j = 0; j < m.ref_count; ++j) {
          const double v = grid[i][j].get<double>();
          auto& t = m.at(i, j);
          (metric == Metric::P ? t.p : metric == Metric::R ? t.r : t.f1) = v;
        }
      }
    }
    m.cand_token_counts = root.at("cand_token_counts").get<std::vector<std::size_t>>();
    m.ref_token_counts = root.at("ref_token_counts").get<std::vector<std::size_t>>();
    if (m.cand_token_counts.size() != m.cand_count ||
        m.ref_token_counts.size() != m.ref_count) {
      throw Error(ErrorCode::CorruptRecord, "token count list length mismatch");
    }
    b.min_tokens = root.at("flags").at("min_tokens").get<std::size_t>();
    b.streak_quantile = root.at("streak_quantile").get<double>();
    for (const auto& s : root.at("streaks")) {
      b.streaks.push_back({analyze::streak_axis_from_string(s.at("axis").get<std::string>()),
                           s.at("index").get<std::size_t>(),
                           s.at("mean_score").get<double>(),
                           s.at("threshold_used").get<double>()});
    }
    if (!root.at("diagonal_alignment").is_null()) {
      b.diagonal_alignment = root.at("diagonal_alignment").get<double>();
    }
    for (const auto& p : root.at("top_pairs")) {
      RankedPair pair;
      pair.cand_index = p.at("cand_index").get<std::size_t>();
      pair.ref_index = p.at("ref_index").get<std::size_t>();
      pair.triple = {p.at("p").get<double>(), p.at("r").get<double>(),
                     p.at("f1").get<double>()};
      pair.metric_used = b.metric;
      pair.flags = analyze::pair_flags(m, pair.cand_index, pair.ref_index,
                                       b.min_tokens, b.streaks);
      b.top_pairs.push_back(pair);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptRecord, std::string("bundle: ") + e.what());
  }
  return b;
}

MatrixBundle read_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "bundle " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_bundle(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::string pairs_csv(const MatrixBundle& bundle) {
  const auto& m = bundle.matrix;
  std::string out = "cand_index,ref_index,p,r,f1,cand_tokens,ref_tokens,flags\n";
  for (std::size_t i = 0; i < m.cand_count; ++i) {
    for (std::size_t j = 0; j < m.ref_count; ++j) {
      const auto& t = m.at(i, j);
      std::string flags;
      for (const auto& name : analyze::flag_names(
               analyze::pair_flags(m, i, j, bundle.min_tokens, bundle.streaks))) {
        if (!flags.empty()) flags += ';';
        flags += name;
      }
      out += std::to_string(i) + ',' + std::to_string(j) + ',' + fixed(t.p, 6) +
             ',' + fixed(t.r, 6) + ',' + fixed(t.f1, 6) + ',' +
             std::to_string(m.cand_token_counts[i]) + ',' +
             std::to_string(m.ref_token_counts[j]) + ',' + flags + '\n';
    }
  }
  return out;
}

void export_tables(const MatrixBundle& bundle,
                   const std::filesystem::path& path_prefix) {
  const auto prefix = path_prefix.string();
  write_text_file(prefix + "pairs.csv", pairs_csv(bundle));
  write_text_file(prefix + "bundle.json", bundle_json(bundle));
}

}  // namespace influence::report
