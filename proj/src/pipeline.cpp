#include "influence/pipeline.hpp"

#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

#include "influence/embedding_store.hpp"
#include "influence/error.hpp"
#include "influence/ingest.hpp"
#include "influence/matrix_analyzer.hpp"
#include "influence/reporter.hpp"

namespace influence::pipeline {

namespace fs = std::filesystem;
using segment::Level;
using segment::Segment;

namespace {

std::mutex log_mutex;

void log(const std::string& line) {
  std::lock_guard lock(log_mutex);
  std::clog << line << '\n';
}

Error in_context(const Error& e, std::string_view stage, int instance_id) {
  if (e.detail().starts_with("[stage=")) return e;
  return Error(e.code(), "[stage=" + std::string(stage) + " instance=" +
                             std::to_string(instance_id) + "] " + e.detail());
}

// Runs `fn` for every instance concurrently; the first failure in manifest
// order is rethrown with stage and instance context.
template <typename Fn>
std::size_t for_each_instance(const ingest::Manifest& manifest,
                              std::string_view stage, Fn fn) {
  std::vector<std::future<std::size_t>> jobs;
  jobs.reserve(manifest.instances.size());
  for (const auto& inst : manifest.instances) {
    jobs.push_back(std::async(std::launch::async, [&fn, &inst] { return fn(inst); }));
  }
  std::size_t written = 0;
  std::optional<Error> first;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    try {
      written += jobs[k].get();
    } catch (const Error& e) {
      if (!first) first = in_context(e, stage, manifest.instances[k].instance_id);
    } catch (const std::exception& e) {
      if (!first) {
        first = in_context(Error(ErrorCode::IoError, e.what()), stage,
                           manifest.instances[k].instance_id);
      }
    }
  }
  if (first) throw *first;
  return written;
}

ingest::Manifest load_manifest_for(const RunConfig& cfg, std::string_view stage) {
  try {
    return ingest::load_manifest(cfg.manifest_path);
  } catch (const Error& e) {
    throw Error(e.code(), "[stage=" + std::string(stage) + " instance=-] " +
                              e.detail());
  }
}

std::vector<Segment> read_segments(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::FileNotFound,
                "segment file " + path.string() + " (run `segment` first)");
  }
  return segment::read_jsonl(in);
}

std::vector<embed::EmbeddedSegment> embed_side(
    const std::vector<Segment>& segments, int instance_id, ingest::Side side,
    const RunConfig& cfg, const embed::EmbeddingStore* store,
    std::vector<embed::SegmentRef>& missing) {
  std::vector<embed::EmbeddedSegment> out;
  out.reserve(segments.size());
  for (const auto& seg : segments) {
    embed::SegmentRef ref{static_cast<std::uint32_t>(instance_id), side,
                          seg.level, static_cast<std::uint32_t>(seg.index)};
    if (store == nullptr) {
      out.push_back(embed::hash_embed(seg, ref, cfg.hash_dim));
    } else if (!store->contains(ref)) {
      missing.push_back(ref);
    } else {
      out.push_back(store->get(ref));
    }
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::InvalidConfig, "[stage=config instance=-] " + msg);
  };
  if (levels.empty()) fail("at least one level (sentence, ngram) is required");
  if (manifest_path.empty()) fail("--manifest is required");
  if (output_dir.empty()) fail("--out is required");
  if (n < 2) fail("--n must be at least 2");
  if (backend == Backend::Embx && embx_path.empty()) {
    fail("--backend embx requires --embx <path>");
  }
  if (hash_dim == 0) fail("--dim must be positive");
  if (top_k == 0) fail("--top-k must be at least 1");
  if (!(streak_quantile >= 0.0 && streak_quantile <= 1.0)) {
    fail("--streak-quantile must lie in [0, 1]");
  }
}

fs::path instance_dir(const fs::path& out, int instance_id, Level level) {
  return out / std::to_string(instance_id) / std::string(segment::to_string(level));
}

fs::path segments_path(const fs::path& out, int instance_id, Level level,
                       bool candidate) {
  return instance_dir(out, instance_id, level) /
         (candidate ? "candidate.segments.jsonl" : "reference.segments.jsonl");
}

std::size_t effective_min_tokens(const RunConfig& cfg, Level level) {
  return level == Level::Ngram ? 0 : cfg.min_tokens;
}

std::size_t cmd_segment(const RunConfig& cfg) {
  cfg.validate();
  const auto manifest = load_manifest_for(cfg, "segment");

  // Documents are shared between instances; load each once up front.
  std::map<std::string, ingest::TextDocument> docs;
  std::mutex docs_mutex;
  auto document = [&](const std::string& id) -> const ingest::TextDocument& {
    {
      std::lock_guard lock(docs_mutex);
      if (auto it = docs.find(id); it != docs.end()) return it->second;
    }
    const auto& entry = manifest.document(id);
    auto doc = ingest::load_document(entry.path, entry.id, entry.title);
    std::lock_guard lock(docs_mutex);
    return docs.try_emplace(id, std::move(doc)).first->second;
  };

  return for_each_instance(manifest, "segment", [&](const ingest::InstanceSpec& inst) {
    const auto& cand_doc = document(inst.candidate_doc);
    const auto& ref_doc = document(inst.reference_doc);
    const auto cand_text = ingest::extract_passage(cand_doc, inst.candidate_range);
    const auto ref_text = ingest::extract_passage(ref_doc, inst.reference_range);
    std::size_t written = 0;
    for (Level level : cfg.levels) {
      segment::SegmentationConfig seg_cfg{level, cfg.n, cfg.overlap, cfg.keep_remainder};
      const auto cand = segment::segment_passage(cand_text, seg_cfg);
      const auto ref = segment::segment_passage(ref_text, seg_cfg);
      if (cand.empty() || ref.empty()) {
        throw Error(ErrorCode::EmptySegment,
                    std::string(segment::to_string(level)) +
                        " segmentation produced no segments for one side");
      }
      for (const auto& [segs, is_cand] : {std::pair{&cand, true}, std::pair{&ref, false}}) {
        std::ostringstream out;
        segment::write_jsonl(out, *segs);
        report::write_text_file(segments_path(cfg.output_dir, inst.instance_id, level, is_cand),
                                out.str());
        ++written;
      }
      log("segment: instance " + std::to_string(inst.instance_id) + " " +
          std::string(segment::to_string(level)) + ": " + std::to_string(cand.size()) +
          " candidate, " + std::to_string(ref.size()) + " reference segments");
    }
    return written;
  });
}

std::size_t cmd_compare(const RunConfig& cfg) {
  cfg.validate();
  const auto manifest = load_manifest_for(cfg, "compare");
  std::optional<embed::EmbeddingStore> store;
  if (cfg.backend == Backend::Embx) {
    try {
      store = embed::open_store(cfg.embx_path);
    } catch (const Error& e) {
      throw Error(e.code(), "[stage=compare instance=-] " + e.detail());
    }
  }
  const embed::EmbeddingStore* store_ptr = store ? &*store : nullptr;

  return for_each_instance(manifest, "compare", [&](const ingest::InstanceSpec& inst) {
    std::size_t written = 0;
    for (Level level : cfg.levels) {
      const auto cand_segs = read_segments(segments_path(cfg.output_dir, inst.instance_id, level, true));
      const auto ref_segs = read_segments(segments_path(cfg.output_dir, inst.instance_id, level, false));
      std::vector<embed::SegmentRef> missing;
      const auto cand = embed_side(cand_segs, inst.instance_id, ingest::Side::Candidate,
                                   cfg, store_ptr, missing);
      const auto ref = embed_side(ref_segs, inst.instance_id, ingest::Side::Reference,
                                  cfg, store_ptr, missing);
      if (!missing.empty()) {
        std::string list;
        for (const auto& r : missing) list += (list.empty() ? "" : ", ") + embed::to_string(r);
        throw Error(ErrorCode::MissingEmbeddings,
                    std::to_string(missing.size()) + " segment(s) missing from " +
                        cfg.embx_path.string() + ": " + list);
      }

      std::optional<score::IdfWeights> idf;
      if (cfg.idf) idf = score::compute_idf(ref);
      analyze::CompareOptions opts;
      opts.idf = idf ? &*idf : nullptr;
      opts.threads = cfg.threads;

      report::MatrixBundle bundle;
      bundle.matrix = analyze::compare_all(cand, ref, opts);
      bundle.matrix.instance_id = inst.instance_id;
      bundle.matrix.level = level;
      // Short-segment flags count whitespace words, whatever the embedder's
      // own tokenization.
      bundle.matrix.cand_token_counts.clear();
      bundle.matrix.ref_token_counts.clear();
      for (const auto& s : cand_segs) bundle.matrix.cand_token_counts.push_back(s.word_tokens.size());
      for (const auto& s : ref_segs) bundle.matrix.ref_token_counts.push_back(s.word_tokens.size());

      bundle.metric = cfg.metric;
      bundle.min_tokens = effective_min_tokens(cfg, level);
      bundle.streak_quantile = cfg.streak_quantile;
      const auto& m = bundle.matrix;
      if (m.cand_count >= 2 && m.ref_count >= 2) {
        bundle.streaks = analyze::detect_streaks(m, cfg.metric, cfg.streak_quantile);
        bundle.diagonal_alignment = analyze::diagonal_alignment(m, cfg.metric);
      }
      bundle.top_pairs = analyze::top_pairs(m, cfg.top_k, cfg.metric,
                                            bundle.min_tokens, bundle.streaks);

      const auto dir = instance_dir(cfg.output_dir, inst.instance_id, level);
      report::export_tables(bundle, dir / "");
      written += 2;
      for (score::Metric metric : {score::Metric::P, score::Metric::R, score::Metric::F1}) {
        std::ostringstream csv;
        analyze::write_matrix_csv(csv, m, metric);
        report::write_text_file(dir / ("matrix_" + std::string(score::to_string(metric)) + ".csv"),
                                csv.str());
        ++written;
      }
      log("compare: instance " + std::to_string(inst.instance_id) + " " +
          std::string(segment::to_string(level)) + ": " + std::to_string(m.cand_count) +
          " x " + std::to_string(m.ref_count) + " grid");
    }
    return written;
  });
}

std::size_t cmd_report(const RunConfig& cfg) {
  cfg.validate();
  const auto manifest = load_manifest_for(cfg, "report");
  return for_each_instance(manifest, "report", [&](const ingest::InstanceSpec& inst) {
    std::size_t written = 0;
    for (Level level : cfg.levels) {
      const auto dir = instance_dir(cfg.output_dir, inst.instance_id, level);
      const auto bundle_path = dir / "bundle.json";
      if (!fs::exists(bundle_path)) {
        throw Error(ErrorCode::FileNotFound,
                    "expected bundle " + bundle_path.string() + " (run `compare` first)");
      }
      const auto bundle = report::read_bundle(bundle_path);
      const auto cand_segs = read_segments(segments_path(cfg.output_dir, inst.instance_id, level, true));
      const auto ref_segs = read_segments(segments_path(cfg.output_dir, inst.instance_id, level, false));
      const auto& m = bundle.matrix;
      if (cand_segs.size() != m.cand_count || ref_segs.size() != m.ref_count) {
        throw Error(ErrorCode::CorruptRecord,
                    "bundle shape does not match segment files in " + dir.string());
      }

      report::ReportSpec spec;
      spec.instance_id = inst.instance_id;
      spec.level = level;
      spec.expert_spans = inst.expert_spans;
      spec.output_dir = dir;
      for (score::Metric metric : {score::Metric::P, score::Metric::R, score::Metric::F1}) {
        spec.metric = metric;
        report::render_heatmap(m, spec);
        ++written;
      }

      std::vector<analyze::StreakDiagnostic> streaks;
      if (m.cand_count >= 2 && m.ref_count >= 2) {
        streaks = analyze::detect_streaks(m, cfg.metric, cfg.streak_quantile);
      }
      const auto ranked = analyze::top_pairs(m, cfg.top_k, cfg.metric,
                                             effective_min_tokens(cfg, level), streaks);
      spec.metric = cfg.metric;
      report::render_pair_report(inst, ranked, cand_segs, ref_segs, spec);
      ++written;
      log("report: instance " + std::to_string(inst.instance_id) + " " +
          std::string(segment::to_string(level)) + ": " + dir.string());
    }
    return written;
  });
}

std::size_t cmd_pipeline(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.backend != Backend::Hash) {
    throw Error(ErrorCode::InvalidConfig,
                "[stage=config instance=-] `pipeline` runs the hash backend only; "
                "use segment/compare/report for EMBX stores");
  }
  return cmd_segment(cfg) + cmd_compare(cfg) + cmd_report(cfg);
}

}  // namespace influence::pipeline
