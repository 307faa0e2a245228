#include <cmath>

#include "influence/embedding_store.hpp"
#include "influence/error.hpp"
#include "influence/utf8.hpp"

namespace influence::embed {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

EmbeddedSegment hash_embed(const segment::Segment& segment, SegmentRef ref,
                           std::size_t dim) {
  if (segment.word_tokens.empty()) {
    throw Error(ErrorCode::EmptySegment, to_string(ref) + " has no tokens");
  }
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "dim must be positive");

  EmbeddingMatrix matrix(segment.word_tokens.size(), dim);
  for (std::size_t t = 0; t < segment.word_tokens.size(); ++t) {
    const std::string padded = "^" + segment.word_tokens[t] + "$";
    // Code point boundaries, so trigrams never split a multi-byte character.
    std::vector<std::size_t> starts;
    for (std::size_t pos = 0; pos < padded.size();) {
      starts.push_back(pos);
      utf8::decode_next(padded, pos);
    }
    starts.push_back(padded.size());

    std::vector<double> counts(dim, 0.0);
    for (std::size_t k = 0; k + 3 < starts.size(); ++k) {
      const auto gram = std::string_view(padded).substr(
          starts[k], starts[k + 3] - starts[k]);
      counts[fnv1a64(gram) % dim] += 1.0;
    }
    double sq = 0.0;
    for (double c : counts) sq += c * c;
    const double norm = std::sqrt(sq);
    auto row = matrix.row(t);
    for (std::size_t d = 0; d < dim; ++d) {
      row[d] = static_cast<float>(counts[d] / norm);
    }
  }
  return {ref, segment.word_tokens, std::move(matrix)};
}

}  // namespace influence::embed
