#include "influence/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "influence/error.hpp"

namespace influence::score {

namespace {

double weighted_mean(std::span<const double> values,
                     std::span<const double> weights) {
  double total_weight = 0.0;
  for (double w : weights) total_weight += w;
  double sum = 0.0;
  if (total_weight > 0.0) {
    for (std::size_t k = 0; k < values.size(); ++k) sum += weights[k] * values[k];
    return sum / total_weight;
  }
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

std::vector<double> token_weights(const std::vector<std::string>& tokens,
                                  const IdfWeights& idf) {
  std::vector<double> w;
  w.reserve(tokens.size());
  for (const auto& t : tokens) w.push_back(idf.weight(t));
  return w;
}

}  // namespace

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::P: return "p";
    case Metric::R: return "r";
    case Metric::F1: return "f1";
  }
  return "f1";
}

Metric metric_from_string(std::string_view name) {
  if (name == "p") return Metric::P;
  if (name == "r") return Metric::R;
  if (name == "f1") return Metric::F1;
  throw Error(ErrorCode::InvalidArgument,
              "unknown metric '" + std::string(name) + "' (expected p, r, f1)");
}

double f1_score(double p, double r) {
  const double sum = p + r;
  return sum > 0.0 ? 2.0 * p * r / sum : 0.0;
}

CosineMatrix cosine_matrix(const embed::EmbeddedSegment& cand,
                           const embed::EmbeddedSegment& ref) {
  if (cand.dim() != ref.dim()) {
    throw Error(ErrorCode::DimMismatch,
                "candidate dim " + std::to_string(cand.dim()) +
                    " vs reference dim " + std::to_string(ref.dim()));
  }
  CosineMatrix sim(cand.token_count(), ref.token_count());
  for (std::size_t i = 0; i < sim.rows(); ++i) {
    const auto a = cand.matrix.row(i);
    for (std::size_t j = 0; j < sim.cols(); ++j) {
      const auto b = ref.matrix.row(j);
      double dot = 0.0;
      for (std::size_t d = 0; d < a.size(); ++d) {
        dot += static_cast<double>(a[d]) * static_cast<double>(b[d]);
      }
      sim(i, j) = dot;
    }
  }
  return sim;
}

ScoreTriple bertscore(const embed::EmbeddedSegment& cand,
                      const embed::EmbeddedSegment& ref,
                      const IdfWeights* idf) {
  if (cand.token_count() == 0 || ref.token_count() == 0) {
    throw Error(ErrorCode::EmptySegment,
                "cannot score an empty segment: " +
                    embed::to_string(cand.token_count() == 0 ? cand.ref
                                                             : ref.ref));
  }
  const auto sim = cosine_matrix(cand, ref);
  constexpr double lowest = -std::numeric_limits<double>::infinity();
  std::vector<double> row_max(sim.rows(), lowest);
  std::vector<double> col_max(sim.cols(), lowest);
  for (std::size_t i = 0; i < sim.rows(); ++i) {
    for (std::size_t j = 0; j < sim.cols(); ++j) {
      row_max[i] = std::max(row_max[i], sim(i, j));
      col_max[j] = std::max(col_max[j], sim(i, j));
    }
  }

  ScoreTriple out;
  if (idf == nullptr) {
    std::vector<double> ones_c(row_max.size(), 1.0);
    std::vector<double> ones_r(col_max.size(), 1.0);
    out.p = weighted_mean(row_max, ones_c);
    out.r = weighted_mean(col_max, ones_r);
  } else {
    out.p = weighted_mean(row_max, token_weights(cand.tokens, *idf));
    out.r = weighted_mean(col_max, token_weights(ref.tokens, *idf));
  }
  out.f1 = f1_score(out.p, out.r);
  return out;
}

IdfWeights compute_idf(std::span<const embed::EmbeddedSegment> reference_segments) {
  const double n = static_cast<double>(reference_segments.size());
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& seg : reference_segments) {
    std::unordered_set<std::string> seen(seg.tokens.begin(), seg.tokens.end());
    for (const auto& t : seen) ++df[t];
  }
  IdfWeights idf;
  idf.default_weight = std::log(n + 1.0);
  for (const auto& [token, count] : df) {
    idf.weights.emplace(token, std::log((n + 1.0) / (static_cast<double>(count) + 1.0)));
  }
  return idf;
}

}  // namespace influence::score
