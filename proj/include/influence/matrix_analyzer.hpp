#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "influence/embedding_store.hpp"
#include "influence/scorer.hpp"

namespace influence::analyze {

using score::Metric;
using score::ScoreTriple;
using segment::Level;

/// All candidate x reference scores of one instance at one level. Row index
/// is the candidate segment, column index the reference segment.
struct SimilarityMatrix {
  int instance_id = 0;
  Level level = Level::Sentence;
  std::size_t cand_count = 0;
  std::size_t ref_count = 0;
  std::vector<ScoreTriple> triples;  // row-major, cand_count x ref_count
  std::vector<std::size_t> cand_token_counts;
  std::vector<std::size_t> ref_token_counts;

  const ScoreTriple& at(std::size_t i, std::size_t j) const {
    return triples[i * ref_count + j];
  }
  ScoreTriple& at(std::size_t i, std::size_t j) {
    return triples[i * ref_count + j];
  }
  double value(std::size_t i, std::size_t j, Metric metric) const {
    return at(i, j).get(metric);
  }
};

enum class PairFlag : unsigned {
  ShortCandidate = 1u << 0,
  ShortReference = 1u << 1,
  StreakMember = 1u << 2,
};

std::vector<std::string> flag_names(unsigned flags);

enum class StreakAxis { CandidateColumn, ReferenceRow };

std::string_view to_string(StreakAxis axis);
StreakAxis streak_axis_from_string(std::string_view name);

struct StreakDiagnostic {
  StreakAxis axis = StreakAxis::CandidateColumn;
  std::size_t index = 0;
  double mean_score = 0.0;
  double threshold_used = 0.0;
};

struct RankedPair {
  std::size_t cand_index = 0;
  std::size_t ref_index = 0;
  ScoreTriple triple;
  Metric metric_used = Metric::P;
  unsigned flags = 0;

  bool has(PairFlag f) const noexcept {
    return (flags & static_cast<unsigned>(f)) != 0;
  }
};

struct CompareOptions {
  const score::IdfWeights* idf = nullptr;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
};

/// Scores every pair. Cells are written to disjoint preallocated slots, so the
/// result is bitwise identical for any thread count. Token counts are taken
/// from the embedded segments.
SimilarityMatrix compare_all(std::span<const embed::EmbeddedSegment> cand,
                             std::span<const embed::EmbeddedSegment> ref,
                             const CompareOptions& options = {});

/// Flags for cell (i, j): short_* when that side has fewer than `min_tokens`
/// tokens, streak_member when either index is a detected streak.
unsigned pair_flags(const SimilarityMatrix& m, std::size_t i, std::size_t j,
                    std::size_t min_tokens,
                    std::span<const StreakDiagnostic> streaks = {});

/// Top `k` pairs by `metric`, descending, ties broken by (cand, ref)
/// ascending. Short pairs are flagged, never dropped.
std::vector<RankedPair> top_pairs(const SimilarityMatrix& m, std::size_t k,
                                  Metric metric, std::size_t min_tokens,
                                  std::span<const StreakDiagnostic> streaks = {});

/// Linear-interpolation quantile (numpy's default) of `values`, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// A candidate column / reference row is a streak when its mean score is
/// strictly above the `q` quantile of all column / row means.
std::vector<StreakDiagnostic> detect_streaks(const SimilarityMatrix& m,
                                             Metric metric, double q = 0.90);

/// Fraction of candidate rows whose best reference column lies within
/// `window` of the proportional diagonal round(i * ref_count / cand_count).
double diagonal_alignment(const SimilarityMatrix& m, Metric metric,
                          std::size_t window = 3);

/// One CSV per metric: rows = candidate index, columns = reference index.
void write_matrix_csv(std::ostream& out, const SimilarityMatrix& m,
                      Metric metric);

}  // namespace influence::analyze
