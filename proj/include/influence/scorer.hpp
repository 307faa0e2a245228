#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "influence/embedding_store.hpp"

namespace influence::score {

enum class Metric { P, R, F1 };

std::string_view to_string(Metric metric);
Metric metric_from_string(std::string_view name);

struct ScoreTriple {
  double p = 0.0;
  double r = 0.0;
  double f1 = 0.0;

  double get(Metric metric) const noexcept {
    switch (metric) {
      case Metric::P: return p;
      case Metric::R: return r;
      case Metric::F1: return f1;
    }
    return f1;
  }

  bool operator==(const ScoreTriple&) const = default;
};

/// Harmonic mean of p and r; zero when p + r <= 0.
double f1_score(double p, double r);

/// Dense row-major grid of cosine similarities.
class CosineMatrix {
 public:
  CosineMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t i, std::size_t j) const {
    return values_[i * cols_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) {
    return values_[i * cols_ + j];
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
};

struct IdfWeights {
  std::unordered_map<std::string, double> weights;
  double default_weight = 0.0;

  double weight(const std::string& token) const {
    auto it = weights.find(token);
    return it == weights.end() ? default_weight : it->second;
  }
};

/// Entry (i, j) is the dot product of candidate row i and reference row j,
/// which is the cosine similarity because stored rows are unit length.
CosineMatrix cosine_matrix(const embed::EmbeddedSegment& cand,
                           const embed::EmbeddedSegment& ref);

/// Greedy-matching precision/recall/F1. Precision averages each candidate
/// token's best match over the reference; recall averages each reference
/// token's best match over the candidate. With IDF weights the averages are
/// weighted (candidate token weights for p, reference token weights for r);
/// a side whose weights sum to zero falls back to the plain mean.
ScoreTriple bertscore(const embed::EmbeddedSegment& cand,
                      const embed::EmbeddedSegment& ref,
                      const IdfWeights* idf = nullptr);

/// weight(t) = ln((N + 1) / (df(t) + 1)), default ln(N + 1).
IdfWeights compute_idf(std::span<const embed::EmbeddedSegment> reference_segments);

}  // namespace influence::score
