#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "influence/ingest.hpp"
#include "influence/segmenter.hpp"

namespace influence::embed {

using ingest::Side;
using segment::Level;

struct SegmentRef {
  std::uint32_t instance_id = 0;
  Side side = Side::Candidate;
  Level level = Level::Sentence;
  std::uint32_t index = 0;

  auto operator<=>(const SegmentRef&) const = default;
};

std::string to_string(const SegmentRef& ref);

/// Row-major token_count x dim float32 matrix.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim)
      : rows_(rows), dim_(dim), values_(rows * dim, 0.0f) {}
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<float> row(std::size_t i) { return {values_.data() + i * dim_, dim_}; }

  const std::vector<float>& values() const noexcept { return values_; }

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> values_;
};

struct EmbeddedSegment {
  SegmentRef ref;
  std::vector<std::string> tokens;
  EmbeddingMatrix matrix;

  std::size_t token_count() const noexcept { return matrix.rows(); }
  std::size_t dim() const noexcept { return matrix.dim(); }
};

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr double kNormTolerance = 1e-4;

struct EmbeddingStoreHeader {
  std::uint32_t version = kFormatVersion;
  std::string backend_name;
  std::string model_id;
  std::int32_t layer = -1;
  std::uint32_t dim = 0;
  std::uint64_t segment_count = 0;
};

/// Checks every row is unit length within kNormTolerance; throws
/// NormViolation naming the offending row.
void check_row_norms(const EmbeddedSegment& segment);

/// Writes an EMBX file. The header's segment_count is taken from
/// `segments`. Output is written to a temporary sibling and renamed.
void write_store(const EmbeddingStoreHeader& header,
                 std::span<const EmbeddedSegment> segments,
                 const std::filesystem::path& path);

/// Serialized size in bytes of the header and of one record.
std::size_t header_size(const EmbeddingStoreHeader& header);
std::size_t record_size(const EmbeddedSegment& segment);

/// Read-only view of an EMBX file. Record framing is validated when the file
/// is opened; row norms are checked when a record is looked up.
class EmbeddingStore {
 public:
  static EmbeddingStore open(const std::filesystem::path& path);

  const EmbeddingStoreHeader& header() const noexcept { return header_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool contains(const SegmentRef& ref) const;

  /// Throws MissingEmbeddings when absent, NormViolation on a bad row.
  EmbeddedSegment get(const SegmentRef& ref) const;

  /// Records in file order, each norm-checked.
  std::vector<EmbeddedSegment> read_all() const;

 private:
  struct Record {
    SegmentRef ref;
    std::vector<std::string> tokens;
    std::size_t matrix_offset = 0;
  };

  EmbeddedSegment materialize(const Record& rec) const;

  std::filesystem::path path_;
  EmbeddingStoreHeader header_;
  std::vector<char> bytes_;
  std::vector<Record> records_;
  std::map<SegmentRef, std::size_t> by_ref_;
};

inline EmbeddingStore open_store(const std::filesystem::path& path) {
  return EmbeddingStore::open(path);
}

/// Deterministic stand-in for a contextual encoder: each word token becomes
/// the L2-normalized count vector of its character trigrams of "^"+w+"$",
/// hashed into `dim` buckets with FNV-1a 64.
EmbeddedSegment hash_embed(const segment::Segment& segment, SegmentRef ref,
                           std::size_t dim = 64);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace influence::embed
