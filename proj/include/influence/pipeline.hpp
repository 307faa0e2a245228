#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "influence/scorer.hpp"
#include "influence/segmenter.hpp"

namespace influence::pipeline {

enum class Backend { Hash, Embx };

struct RunConfig {
  std::filesystem::path manifest_path;
  std::vector<segment::Level> levels{segment::Level::Sentence,
                                     segment::Level::Ngram};
  std::size_t n = 5;
  bool overlap = false;
  bool keep_remainder = true;
  Backend backend = Backend::Hash;
  std::filesystem::path embx_path;
  std::size_t hash_dim = 64;
  bool idf = false;
  score::Metric metric = score::Metric::P;
  std::size_t top_k = 20;
  std::size_t min_tokens = 6;
  double streak_quantile = 0.9;
  std::filesystem::path output_dir;
  unsigned threads = 0;

  /// Throws InvalidConfig; touches no files.
  void validate() const;
};

/// <out>/<instance_id>/<level>
std::filesystem::path instance_dir(const std::filesystem::path& out,
                                   int instance_id, segment::Level level);

/// Segment files: <instance_dir>/{candidate,reference}.segments.jsonl
std::filesystem::path segments_path(const std::filesystem::path& out,
                                    int instance_id, segment::Level level,
                                    bool candidate);

/// Short-token flag threshold actually applied at `level`: n-gram segments
/// are fixed length and exempt.
std::size_t effective_min_tokens(const RunConfig& cfg, segment::Level level);

/// Each returns the number of files written.
std::size_t cmd_segment(const RunConfig& cfg);
std::size_t cmd_compare(const RunConfig& cfg);
std::size_t cmd_report(const RunConfig& cfg);
std::size_t cmd_pipeline(const RunConfig& cfg);

/// Full command-line entry point; returns the process exit status
/// (0 ok, 1 usage/config, 2 data, 3 I/O).
int run_cli(int argc, const char* const* argv);

}  // namespace influence::pipeline
