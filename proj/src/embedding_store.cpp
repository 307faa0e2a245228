#include "influence/embedding_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "influence/error.hpp"

namespace influence::embed {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', 'X'};

template <typename T>
void put(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
  auto bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(bits & 0xFF));
    if constexpr (sizeof(T) > 1) bits = static_cast<U>(bits >> 8);
  }
}

void put_string(std::string& out, std::string_view s, const char* what) {
  if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(what) + " longer than 65535 bytes");
  }
  put(out, static_cast<std::uint16_t>(s.size()));
  out.append(s);
}

// Bounds-checked little-endian reader over the mapped file.
class Reader {
 public:
  Reader(const std::vector<char>& bytes, std::size_t pos = 0)
      : bytes_(bytes), pos_(pos) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
              std::conditional_t<sizeof(T) == 2, std::uint16_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(
                                 bytes_[pos_ + i]))
                             << (8 * i));
    }
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  std::string get_string(const char* what) {
    const auto len = get<std::uint16_t>(what);
    need(len, what);
    std::string s(bytes_.data() + pos_, len);
    pos_ += len;
    return s;
  }

  void skip(std::size_t n, const char* what) {
    need(n, what);
    pos_ += n;
  }

  std::size_t pos() const noexcept { return pos_; }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::CorruptRecord,
                  std::string("truncated ") + what + " at byte " +
                      std::to_string(pos_));
    }
  }

  const std::vector<char>& bytes_;
  std::size_t pos_;
};

}  // namespace

std::string to_string(const SegmentRef& ref) {
  return "(instance " + std::to_string(ref.instance_id) + ", " +
         std::string(ingest::to_string(ref.side)) + ", " +
         std::string(segment::to_string(ref.level)) + ", " +
         std::to_string(ref.index) + ")";
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim,
                                 std::vector<float> values)
    : rows_(rows), dim_(dim), values_(std::move(values)) {
  if (values_.size() != rows_ * dim_) {
    throw Error(ErrorCode::DimMismatch,
                "matrix of " + std::to_string(rows_) + "x" +
                    std::to_string(dim_) + " given " +
                    std::to_string(values_.size()) + " values");
  }
}

void check_row_norms(const EmbeddedSegment& segment) {
  for (std::size_t i = 0; i < segment.matrix.rows(); ++i) {
    double sq = 0.0;
    for (float v : segment.matrix.row(i)) sq += static_cast<double>(v) * v;
    const double norm = std::sqrt(sq);
    if (!(std::abs(norm - 1.0) <= kNormTolerance)) {
      throw Error(ErrorCode::NormViolation,
                  to_string(segment.ref) + " row " + std::to_string(i) +
                      " has norm " + std::to_string(norm));
    }
  }
}

std::size_t header_size(const EmbeddingStoreHeader& header) {
  return 4 + 4 + 4 + 8 + 2 + header.backend_name.size() + 2 +
         header.model_id.size() + 4;
}

std::size_t record_size(const EmbeddedSegment& segment) {
  std::size_t size = 4 + 1 + 1 + 4 + 4;
  for (const auto& t : segment.tokens) size += 2 + t.size();
  return size + segment.matrix.values().size() * sizeof(float);
}

void write_store(const EmbeddingStoreHeader& header,
                 std::span<const EmbeddedSegment> segments,
                 const std::filesystem::path& path) {
  if (header.dim == 0) {
    throw Error(ErrorCode::DimMismatch, "store dim must be positive");
  }
  std::string out;
  out.append(kMagic, 4);
  put(out, header.version);
  put(out, header.dim);
  put(out, static_cast<std::uint64_t>(segments.size()));
  put_string(out, header.backend_name, "backend_name");
  put_string(out, header.model_id, "model_id");
  put(out, header.layer);

  for (const auto& seg : segments) {
    if (seg.dim() != header.dim) {
      throw Error(ErrorCode::DimMismatch,
                  to_string(seg.ref) + " has dim " + std::to_string(seg.dim()) +
                      ", store dim is " + std::to_string(header.dim));
    }
    if (seg.tokens.size() != seg.matrix.rows() || seg.tokens.empty()) {
      throw Error(ErrorCode::EmptySegment,
                  to_string(seg.ref) + " needs one matrix row per token and at "
                                       "least one token");
    }
    put(out, seg.ref.instance_id);
    put(out, static_cast<std::uint8_t>(seg.ref.side == Side::Candidate ? 0 : 1));
    put(out, static_cast<std::uint8_t>(seg.ref.level == Level::Sentence ? 0 : 1));
    put(out, seg.ref.index);
    put(out, static_cast<std::uint32_t>(seg.tokens.size()));
    for (const auto& t : seg.tokens) put_string(out, t, "token");
    for (float v : seg.matrix.values()) put(out, v);
  }

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw Error(ErrorCode::IoError, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorCode::IoError,
                "cannot rename " + tmp.string() + ": " + ec.message());
  }
}

EmbeddingStore EmbeddingStore::open(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::FileNotFound, "EMBX " + path.string());
  EmbeddingStore store;
  store.path_ = path;
  store.bytes_.assign(std::istreambuf_iterator<char>(f),
                      std::istreambuf_iterator<char>());

  const auto& bytes = store.bytes_;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, path.string());
  }
  Reader in(bytes, 4);
  auto& h = store.header_;
  h.version = in.get<std::uint32_t>("header");
  if (h.version != kFormatVersion) {
    throw Error(ErrorCode::VersionMismatch,
                path.string() + " has version " + std::to_string(h.version) +
                    ", expected " + std::to_string(kFormatVersion));
  }
  h.dim = in.get<std::uint32_t>("header");
  h.segment_count = in.get<std::uint64_t>("header");
  h.backend_name = in.get_string("header");
  h.model_id = in.get_string("header");
  h.layer = in.get<std::int32_t>("header");
  if (h.dim == 0) {
    throw Error(ErrorCode::CorruptRecord, path.string() + ": dim is zero");
  }

  for (std::uint64_t k = 0; k < h.segment_count; ++k) {
    Record rec;
    rec.ref.instance_id = in.get<std::uint32_t>("record");
    const auto side = in.get<std::uint8_t>("record");
    const auto level = in.get<std::uint8_t>("record");
    if (side > 1 || level > 1) {
      throw Error(ErrorCode::CorruptRecord,
                  "record " + std::to_string(k) + " has bad side/level byte");
    }
    rec.ref.side = side == 0 ? Side::Candidate : Side::Reference;
    rec.ref.level = level == 0 ? Level::Sentence : Level::Ngram;
    rec.ref.index = in.get<std::uint32_t>("record");
    const auto token_count = in.get<std::uint32_t>("record");
    if (token_count == 0) {
      throw Error(ErrorCode::CorruptRecord,
                  "record " + std::to_string(k) + " has no tokens");
    }
    rec.tokens.reserve(token_count);
    for (std::uint32_t t = 0; t < token_count; ++t) {
      rec.tokens.push_back(in.get_string("token"));
    }
    rec.matrix_offset = in.pos();
    in.skip(static_cast<std::size_t>(token_count) * h.dim * sizeof(float),
            "matrix");
    if (!store.by_ref_.emplace(rec.ref, store.records_.size()).second) {
      throw Error(ErrorCode::CorruptRecord,
                  "duplicate record for " + to_string(rec.ref));
    }
    store.records_.push_back(std::move(rec));
  }
  if (!in.at_end()) {
    throw Error(ErrorCode::CorruptRecord,
                path.string() + ": trailing bytes after " +
                    std::to_string(h.segment_count) + " records");
  }
  return store;
}

bool EmbeddingStore::contains(const SegmentRef& ref) const {
  return by_ref_.contains(ref);
}

EmbeddedSegment EmbeddingStore::materialize(const Record& rec) const {
  const std::size_t dim = header_.dim;
  std::vector<float> values(rec.tokens.size() * dim);
  Reader in(bytes_, rec.matrix_offset);
  for (auto& v : values) v = in.get<float>("matrix");
  EmbeddedSegment seg{rec.ref, rec.tokens,
                      EmbeddingMatrix(rec.tokens.size(), dim, std::move(values))};
  check_row_norms(seg);
  return seg;
}

EmbeddedSegment EmbeddingStore::get(const SegmentRef& ref) const {
  auto it = by_ref_.find(ref);
  if (it == by_ref_.end()) {
    throw Error(ErrorCode::MissingEmbeddings,
                to_string(ref) + " not in " + path_.string());
  }
  return materialize(records_[it->second]);
}

std::vector<EmbeddedSegment> EmbeddingStore::read_all() const {
  std::vector<EmbeddedSegment> out;
  out.reserve(records_.size());
  for (const auto& rec : records_) out.push_back(materialize(rec));
  return out;
}

}  // namespace influence::embed
