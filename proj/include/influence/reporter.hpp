#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "influence/ingest.hpp"
#include "influence/matrix_analyzer.hpp"
#include "influence/segmenter.hpp"

namespace influence::report {

using analyze::RankedPair;
using analyze::SimilarityMatrix;
using analyze::StreakDiagnostic;
using score::Metric;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

Rgb parse_hex_color(std::string_view hex);
std::string to_hex(Rgb c);

struct ColorAnchor {
  double value = 0.0;
  Rgb color;
};

/// Piecewise-linear colormap, clamped outside the first and last anchor.
class Colormap {
 public:
  explicit Colormap(std::vector<ColorAnchor> anchors);

  /// Green (0.20) -> yellow (0.50) -> red (0.80).
  static Colormap standard();

  Rgb color(double value) const;

  /// Position along the anchor path: k + t for a value that lies a fraction t
  /// of the way from anchor k to anchor k + 1. Monotone non-decreasing in
  /// `value`, clamped to [0, anchors - 1].
  double position(double value) const;

  const std::vector<ColorAnchor>& anchors() const noexcept { return anchors_; }

 private:
  std::vector<ColorAnchor> anchors_;
};

struct ReportSpec {
  int instance_id = 0;
  segment::Level level = segment::Level::Sentence;
  Metric metric = Metric::P;
  Colormap colormap = Colormap::standard();
  std::vector<ingest::ExpertSpan> expert_spans;
  std::filesystem::path output_dir;
};

/// Heatmap SVG text: one <rect class="cell"> per (candidate, reference)
/// pair, candidates along x and references along y.
std::string heatmap_svg(const SimilarityMatrix& m, const ReportSpec& spec);

/// Writes <output_dir>/heatmap_<metric>.svg and returns its path.
std::filesystem::path render_heatmap(const SimilarityMatrix& m,
                                     const ReportSpec& spec);

std::string pair_report_html(const ingest::InstanceSpec& instance,
                             std::span<const RankedPair> ranked,
                             std::span<const segment::Segment> cand_segments,
                             std::span<const segment::Segment> ref_segments,
                             const ReportSpec& spec);

/// Writes <output_dir>/pairs.html and returns its path.
std::filesystem::path render_pair_report(
    const ingest::InstanceSpec& instance, std::span<const RankedPair> ranked,
    std::span<const segment::Segment> cand_segments,
    std::span<const segment::Segment> ref_segments, const ReportSpec& spec);

/// "p = 0.80, r = 0.43, F1 = 0.56"
std::string format_scores(const score::ScoreTriple& t);

/// Everything the compare stage hands to the report stage.
struct MatrixBundle {
  SimilarityMatrix matrix;
  Metric metric = Metric::P;
  std::size_t min_tokens = 6;
  double streak_quantile = 0.9;
  std::vector<StreakDiagnostic> streaks;
  std::optional<double> diagonal_alignment;
  std::vector<RankedPair> top_pairs;
};

std::string bundle_json(const MatrixBundle& bundle);
MatrixBundle parse_bundle(std::string_view json_text);
MatrixBundle read_bundle(const std::filesystem::path& path);

/// Long-form table of every cell:
/// cand_index,ref_index,p,r,f1,cand_tokens,ref_tokens,flags
std::string pairs_csv(const MatrixBundle& bundle);

/// Writes <prefix>pairs.csv and <prefix>bundle.json.
void export_tables(const MatrixBundle& bundle,
                   const std::filesystem::path& path_prefix);

void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace influence::report
