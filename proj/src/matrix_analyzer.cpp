#include "influence/matrix_analyzer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "influence/error.hpp"

namespace influence::analyze {

namespace {

void require_grid(const SimilarityMatrix& m, const char* op) {
  if (m.cand_count < 2 || m.ref_count < 2) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(op) + " needs at least a 2x2 grid, got " +
                    std::to_string(m.cand_count) + "x" +
                    std::to_string(m.ref_count));
  }
}

bool is_streak(std::span<const StreakDiagnostic> streaks, StreakAxis axis,
               std::size_t index) {
  return std::any_of(streaks.begin(), streaks.end(), [&](const auto& s) {
    return s.axis == axis && s.index == index;
  });
}

}  // namespace

std::vector<std::string> flag_names(unsigned flags) {
  std::vector<std::string> names;
  if (flags & static_cast<unsigned>(PairFlag::ShortCandidate)) {
    names.emplace_back("short_candidate");
  }
  if (flags & static_cast<unsigned>(PairFlag::ShortReference)) {
    names.emplace_back("short_reference");
  }
  if (flags & static_cast<unsigned>(PairFlag::StreakMember)) {
    names.emplace_back("streak_member");
  }
  return names;
}

std::string_view to_string(StreakAxis axis) {
  return axis == StreakAxis::CandidateColumn ? "candidate_column"
                                             : "reference_row";
}

StreakAxis streak_axis_from_string(std::string_view name) {
  if (name == "candidate_column") return StreakAxis::CandidateColumn;
  if (name == "reference_row") return StreakAxis::ReferenceRow;
  throw Error(ErrorCode::InvalidArgument,
              "unknown streak axis '" + std::string(name) + "'");
}

SimilarityMatrix compare_all(std::span<const embed::EmbeddedSegment> cand,
                             std::span<const embed::EmbeddedSegment> ref,
                             const CompareOptions& options) {
  if (cand.empty() || ref.empty()) {
    throw Error(ErrorCode::EmptySegment,
                "compare_all needs at least one segment per side");
  }
  SimilarityMatrix m;
  m.instance_id = static_cast<int>(cand.front().ref.instance_id);
  m.level = cand.front().ref.level;
  m.cand_count = cand.size();
  m.ref_count = ref.size();
  m.triples.resize(m.cand_count * m.ref_count);
  for (const auto& s : cand) m.cand_token_counts.push_back(s.token_count());
  for (const auto& s : ref) m.ref_token_counts.push_back(s.token_count());

  unsigned workers = options.threads != 0
                         ? options.threads
                         : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(
      std::min<std::size_t>(workers, m.cand_count));

  // Rows are handed out dynamically; each cell has exactly one writer.
  std::atomic<std::size_t> next_row{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto work = [&] {
    for (std::size_t i = next_row++; i < m.cand_count && !failed;
         i = next_row++) {
      for (std::size_t j = 0; j < m.ref_count; ++j) {
        try {
          m.at(i, j) = score::bertscore(cand[i], ref[j], options.idf);
        } catch (const Error& e) {
          std::lock_guard lock(error_mutex);
          if (!failed.exchange(true)) {
            first_error = std::make_exception_ptr(
                Error(e.code(), "cell (" + std::to_string(i) + ", " +
                                    std::to_string(j) + "): " + e.detail()));
          }
          return;
        }
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (first_error) std::rethrow_exception(first_error);
  return m;
}

unsigned pair_flags(const SimilarityMatrix& m, std::size_t i, std::size_t j,
                    std::size_t min_tokens,
                    std::span<const StreakDiagnostic> streaks) {
  unsigned flags = 0;
  if (m.cand_token_counts[i] < min_tokens) {
    flags |= static_cast<unsigned>(PairFlag::ShortCandidate);
  }
  if (m.ref_token_counts[j] < min_tokens) {
    flags |= static_cast<unsigned>(PairFlag::ShortReference);
  }
  if (is_streak(streaks, StreakAxis::CandidateColumn, i) ||
      is_streak(streaks, StreakAxis::ReferenceRow, j)) {
    flags |= static_cast<unsigned>(PairFlag::StreakMember);
  }
  return flags;
}

std::vector<RankedPair> top_pairs(const SimilarityMatrix& m, std::size_t k,
                                  Metric metric, std::size_t min_tokens,
                                  std::span<const StreakDiagnostic> streaks) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "top_pairs needs k >= 1");
  std::vector<std::size_t> order(m.triples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto by_score = [&](std::size_t a, std::size_t b) {
    const double va = m.triples[a].get(metric);
    const double vb = m.triples[b].get(metric);
    if (va != vb) return va > vb;
    return a < b;  // row-major index order == (cand, ref) lexicographic
  };
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                    order.end(), by_score);

  std::vector<RankedPair> out;
  out.reserve(take);
  for (std::size_t n = 0; n < take; ++n) {
    RankedPair pair;
    pair.cand_index = order[n] / m.ref_count;
    pair.ref_index = order[n] % m.ref_count;
    pair.triple = m.triples[order[n]];
    pair.metric_used = metric;
    pair.flags = pair_flags(m, pair.cand_index, pair.ref_index, min_tokens, streaks);
    out.push_back(pair);
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "empty quantile input");
  if (!(q >= 0.0 && q <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "quantile must lie in [0, 1]");
  }
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

std::vector<StreakDiagnostic> detect_streaks(const SimilarityMatrix& m,
                                             Metric metric, double q) {
  require_grid(m, "detect_streaks");
  std::vector<double> cand_means(m.cand_count, 0.0);
  std::vector<double> ref_means(m.ref_count, 0.0);
  for (std::size_t i = 0; i < m.cand_count; ++i) {
    for (std::size_t j = 0; j < m.ref_count; ++j) {
      const double v = m.value(i, j, metric);
      cand_means[i] += v;
      ref_means[j] += v;
    }
  }
  for (auto& v : cand_means) v /= static_cast<double>(m.ref_count);
  for (auto& v : ref_means) v /= static_cast<double>(m.cand_count);

  std::vector<StreakDiagnostic> out;
  const auto scan = [&](const std::vector<double>& means, StreakAxis axis) {
    const double threshold = quantile(means, q);
    for (std::size_t k = 0; k < means.size(); ++k) {
      if (means[k] > threshold) out.push_back({axis, k, means[k], threshold});
    }
  };
  scan(cand_means, StreakAxis::CandidateColumn);
  scan(ref_means, StreakAxis::ReferenceRow);
  return out;
}

double diagonal_alignment(const SimilarityMatrix& m, Metric metric,
                          std::size_t window) {
  require_grid(m, "diagonal_alignment");
  std::size_t aligned = 0;
  const double scale =
      static_cast<double>(m.ref_count) / static_cast<double>(m.cand_count);
  for (std::size_t i = 0; i < m.cand_count; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < m.ref_count; ++j) {
      if (m.value(i, j, metric) > m.value(i, best, metric)) best = j;
    }
    const auto expected = std::llround(static_cast<double>(i) * scale);
    const auto distance = std::llabs(static_cast<long long>(best) - expected);
    if (distance <= static_cast<long long>(window)) ++aligned;
  }
  return static_cast<double>(aligned) / static_cast<double>(m.cand_count);
}

void write_matrix_csv(std::ostream& out, const SimilarityMatrix& m,
                      Metric metric) {
  char buf[32];
  for (std::size_t i = 0; i < m.cand_count; ++i) {
    for (std::size_t j = 0; j < m.ref_count; ++j) {
      if (j > 0) out << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", m.value(i, j, metric));
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace influence::analyze
