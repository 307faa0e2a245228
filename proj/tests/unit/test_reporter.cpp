#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "influence/error.hpp"
#include "influence/reporter.hpp"
#include "oracle.hpp"

using namespace influence;
using namespace influence::report;
using analyze::PairFlag;

namespace {

SimilarityMatrix grid(const std::vector<std::vector<double>>& p) {
  SimilarityMatrix m;
  m.instance_id = 2;
  m.cand_count = p.size();
  m.ref_count = p.front().size();
  for (const auto& row : p) {
    for (double v : row) m.triples.push_back({v, v * 0.5, v * 0.25});
  }
  m.cand_token_counts.assign(m.cand_count, 7);
  m.ref_token_counts.assign(m.ref_count, 9);
  return m;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

segment::Segment seg(std::size_t index, std::size_t char_start, std::string text) {
  segment::Segment s;
  s.index = index;
  s.char_start = char_start;
  s.char_end = char_start + text.size();
  s.text = std::move(text);
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

TEST(Colormap, AnchorsAndClamping) {
  const auto cm = Colormap::standard();
  EXPECT_EQ(to_hex(cm.color(0.80)), "#d62728");
  EXPECT_EQ(to_hex(cm.color(0.99)), "#d62728");
  EXPECT_EQ(to_hex(cm.color(0.50)), "#ffdf00");
  EXPECT_EQ(to_hex(cm.color(0.20)), "#2ca02c");
  EXPECT_EQ(to_hex(cm.color(-1.0)), "#2ca02c");
}

TEST(Colormap, MidpointIsComponentwiseAverage) {
  // (255,223,0) and (214,39,40) average to (234.5, 131, 20); halves round up.
  EXPECT_EQ(Colormap::standard().color(0.65), (Rgb{235, 131, 20}));
}

TEST(Colormap, PositionIsMonotone) {
  const auto cm = Colormap::standard();
  double prev = cm.position(-0.5);
  for (int k = -50; k <= 150; ++k) {
    const double pos = cm.position(k / 100.0);
    EXPECT_GE(pos, prev);
    prev = pos;
  }
  EXPECT_LT(cm.position(0.3), cm.position(0.31));
  EXPECT_DOUBLE_EQ(cm.position(0.5), 1.0);
  EXPECT_DOUBLE_EQ(cm.position(2.0), 2.0);
}

TEST(Colormap, Validation) {
  EXPECT_THROW(Colormap({}), Error);
  EXPECT_THROW(Colormap({{0.5, {}}, {0.5, {}}}), Error);
  EXPECT_THROW(Colormap({{0.6, {}}, {0.5, {}}}), Error);
  EXPECT_THROW(parse_hex_color("#12345"), Error);
  EXPECT_THROW(parse_hex_color("#12345g"), Error);
  EXPECT_EQ(parse_hex_color("#2CA02C"), (Rgb{0x2c, 0xa0, 0x2c}));
}

TEST(Heatmap, SingleCellAtTopAnchor) {
  ReportSpec spec;
  const auto svg = heatmap_svg(grid({{0.8}}), spec);
  EXPECT_EQ(count(svg, "<rect class=\"cell\""), 1u);
  EXPECT_NE(svg.find("fill=\"#d62728\"><title>candidate 0"), std::string::npos);
}

TEST(Heatmap, OneCellPerPairAndLegend) {
  ReportSpec spec;
  std::vector<std::vector<double>> p(7, std::vector<double>(4, 0.3));
  const auto svg = heatmap_svg(grid(p), spec);
  EXPECT_EQ(count(svg, "<rect class=\"cell\""), 28u);
  EXPECT_EQ(count(svg, "<text class=\"value\""), 28u);
  EXPECT_GT(count(svg, "class=\"legend\""), 1u);
  EXPECT_NE(svg.find("candidate 6, reference 3"), std::string::npos);
}

TEST(Heatmap, NoAnnotationsAboveTwenty) {
  ReportSpec spec;
  std::vector<std::vector<double>> p(21, std::vector<double>(3, 0.3));
  const auto svg = heatmap_svg(grid(p), spec);
  EXPECT_EQ(count(svg, "<rect class=\"cell\""), 63u);
  EXPECT_EQ(count(svg, "<text class=\"value\""), 0u);
}

TEST(Heatmap, MetricSelectsValues) {
  ReportSpec spec;
  spec.metric = Metric::F1;  // f1 = p / 4 in the fixture
  const auto svg = heatmap_svg(grid({{0.8}}), spec);
  EXPECT_NE(svg.find("f1 = 0.2000"), std::string::npos);
  EXPECT_NE(svg.find("#2ca02c"), std::string::npos);
}

TEST(Heatmap, RenderIsByteIdentical) {
  const auto dir = testsupport::scratch_dir("heatmap_det");
  ReportSpec spec;
  spec.output_dir = dir;
  const auto m = grid({{0.1, 0.7}, {0.45, 0.95}});
  const auto first = slurp(render_heatmap(m, spec));
  const auto path = render_heatmap(m, spec);
  EXPECT_EQ(path, dir / "heatmap_p.svg");
  EXPECT_EQ(slurp(path), first);
}

TEST(FormatScores, TwoDecimals) {
  EXPECT_EQ(format_scores({0.80, 0.43, 0.5593}), "p = 0.80, r = 0.43, F1 = 0.56");
  EXPECT_EQ(format_scores({1.0, 0.0, 0.0}), "p = 1.00, r = 0.00, F1 = 0.00");
}

TEST(PairReport, ScoresBadgesAndHighlights) {
  ingest::InstanceSpec inst;
  inst.instance_id = 2;
  inst.candidate_doc = "israel_potter";
  inst.reference_doc = "trumbull_potter";
  const std::vector<segment::Segment> cand{seg(0, 0, "Israel had now been three days without food.")};
  const std::vector<segment::Segment> ref{seg(0, 0, "Opening line."),
                                          seg(1, 14, "I had now been three days <without> food.")};
  analyze::RankedPair rp;
  rp.cand_index = 0;
  rp.ref_index = 1;
  rp.triple = {0.80, 0.43, 0.5593};
  rp.flags = static_cast<unsigned>(PairFlag::StreakMember);
  const std::vector<analyze::RankedPair> ranked{rp};

  ReportSpec plain;
  const auto html = pair_report_html(inst, ranked, cand, ref, plain);
  EXPECT_NE(html.find("p = 0.80, r = 0.43, F1 = 0.56"), std::string::npos);
  EXPECT_NE(html.find("<span class=\"badge\">streak_member</span>"), std::string::npos);
  EXPECT_NE(html.find("&lt;without&gt;"), std::string::npos);
  EXPECT_EQ(html.find("expert"), std::string::npos);
  EXPECT_EQ(count(html, "<tr class=\"pair\">"), 1u);
  for (const char* h : {"Candidate text", "Reference text", "Results"}) {
    EXPECT_NE(html.find(h), std::string::npos);
  }

  ReportSpec marked;
  // Reference span covering the whole second segment and beyond.
  marked.expert_spans = {{ingest::Side::Reference, 10, 80},
                         {ingest::Side::Candidate, 7, 10}};
  const auto hl = pair_report_html(inst, ranked, cand, ref, marked);
  EXPECT_NE(hl.find("<span class=\"expert\">I had now been three days &lt;without&gt; food.</span>"),
            std::string::npos);
  EXPECT_NE(hl.find("Israel <span class=\"expert\">had</span> now"), std::string::npos);
}

TEST(PairReport, EmptyRankingIsAnError) {
  ingest::InstanceSpec inst;
  ReportSpec spec;
  EXPECT_THROW(pair_report_html(inst, {}, {}, {}, spec), Error);
}

TEST(Tables, IdentityRow) {
  MatrixBundle b;
  b.matrix = grid({{1.0}});
  b.matrix.triples[0] = {1.0, 1.0, 1.0};
  b.matrix.cand_token_counts = {1};
  b.matrix.ref_token_counts = {1};
  b.min_tokens = 0;
  EXPECT_EQ(pairs_csv(b),
            "cand_index,ref_index,p,r,f1,cand_tokens,ref_tokens,flags\n"
            "0,0,1.000000,1.000000,1.000000,1,1,\n");
}

TEST(Tables, CsvParsesBackToGrid) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-0.2, 1.0);
  std::vector<std::vector<double>> p(6, std::vector<double>(5));
  for (auto& row : p) {
    for (auto& v : row) v = u(rng);
  }
  MatrixBundle b;
  b.matrix = grid(p);
  const auto csv = pairs_csv(b);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto f = split(line, ',');
    ASSERT_EQ(f.size(), 8u) << line;
    const auto i = std::stoul(f[0]), j = std::stoul(f[1]);
    EXPECT_NEAR(std::stod(f[2]), b.matrix.at(i, j).p, 1e-6);
    EXPECT_NEAR(std::stod(f[3]), b.matrix.at(i, j).r, 1e-6);
    EXPECT_NEAR(std::stod(f[4]), b.matrix.at(i, j).f1, 1e-6);
    EXPECT_EQ(rows, i * 5 + j);
    ++rows;
  }
  EXPECT_EQ(rows, 30u);
}

TEST(Tables, StreakMemberFlagInCsv) {
  std::vector<std::vector<double>> p(4, std::vector<double>(4, 0.1));
  p[1].assign(4, 0.9);
  MatrixBundle b;
  b.matrix = grid(p);
  b.matrix.cand_token_counts = {2, 9, 9, 9};
  b.streaks = analyze::detect_streaks(b.matrix, Metric::P, 0.9);
  const auto csv = pairs_csv(b);
  EXPECT_NE(csv.find("\n1,0,0.900000,0.450000,0.225000,9,9,streak_member\n"), std::string::npos);
  EXPECT_NE(csv.find("\n0,0,0.100000,0.050000,0.025000,2,9,short_candidate\n"),
            std::string::npos);
}

TEST(Bundle, JsonRoundTrip) {
  MatrixBundle b;
  b.matrix = grid({{0.1, 0.7, 0.3}, {0.45, 0.95, 0.2}});
  b.matrix.level = segment::Level::Ngram;
  b.metric = Metric::R;
  b.min_tokens = 0;
  b.streak_quantile = 0.75;
  b.streaks = analyze::detect_streaks(b.matrix, Metric::R, 0.75);
  b.diagonal_alignment = 0.5;
  b.top_pairs = analyze::top_pairs(b.matrix, 3, Metric::R, 0, b.streaks);
  const auto text = bundle_json(b);
  const auto back = parse_bundle(text);
  EXPECT_EQ(back.matrix.triples, b.matrix.triples);
  EXPECT_EQ(back.matrix.level, segment::Level::Ngram);
  EXPECT_EQ(back.matrix.instance_id, 2);
  EXPECT_EQ(back.metric, Metric::R);
  EXPECT_EQ(back.streaks.size(), b.streaks.size());
  EXPECT_EQ(back.top_pairs.size(), 3u);
  EXPECT_EQ(back.top_pairs[0].flags, b.top_pairs[0].flags);
  ASSERT_TRUE(back.diagonal_alignment);
  EXPECT_EQ(*back.diagonal_alignment, 0.5);
  EXPECT_EQ(bundle_json(back), text);
  for (const char* key : {"\"instance_id\"", "\"level\"", "\"metric\"", "\"shape\"",
                          "\"values\"", "\"flags\"", "\"streaks\"", "\"diagonal_alignment\""}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
}

TEST(Bundle, ExportWritesBothFiles) {
  const auto dir = testsupport::scratch_dir("export_tables");
  MatrixBundle b;
  b.matrix = grid({{0.3}});
  export_tables(b, dir / "x_");
  EXPECT_TRUE(std::filesystem::exists(dir / "x_pairs.csv"));
  EXPECT_EQ(parse_bundle(slurp(dir / "x_bundle.json")).matrix.triples, b.matrix.triples);
  EXPECT_THROW(parse_bundle("{}"), Error);
}
