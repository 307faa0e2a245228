#include <CLI11.hpp>
#include <iostream>

#include "influence/error.hpp"
#include "influence/pipeline.hpp"

namespace influence::pipeline {

namespace {

void add_common_options(CLI::App& cmd, RunConfig& cfg, std::string& levels,
                        std::string& backend, std::string& metric) {
  cmd.add_option("--manifest", cfg.manifest_path, "Manifest JSON (documents + instances)")
      ->required();
  cmd.add_option("--out", cfg.output_dir, "Output directory")->required();
  cmd.add_option("--level", levels, "Comma-separated levels: sentence,ngram")
      ->capture_default_str();
  cmd.add_option("--n", cfg.n, "N-gram size")->capture_default_str();
  cmd.add_option("--overlap", cfg.overlap, "Overlapping n-grams (stride 1)")
      ->capture_default_str();
  cmd.add_option("--keep-remainder", cfg.keep_remainder,
                 "Keep the final short n-gram chunk")
      ->capture_default_str();
  cmd.add_option("--backend", backend, "Embedding backend: hash|embx")
      ->capture_default_str();
  cmd.add_option("--embx", cfg.embx_path, "EMBX embedding store (backend embx)");
  cmd.add_option("--dim", cfg.hash_dim, "Hash backend dimension")->capture_default_str();
  cmd.add_option("--idf", cfg.idf, "IDF-weighted precision/recall")->capture_default_str();
  cmd.add_option("--metric", metric, "Ranking metric: p|r|f1")->capture_default_str();
  cmd.add_option("--top-k", cfg.top_k, "Pairs to rank")->capture_default_str();
  cmd.add_option("--min-tokens", cfg.min_tokens,
                 "Sentence-level short segment threshold (words)")
      ->capture_default_str();
  cmd.add_option("--streak-quantile", cfg.streak_quantile,
                 "Quantile of row/column means above which a streak is flagged")
      ->capture_default_str();
  cmd.add_option("--threads", cfg.threads, "Worker threads for scoring (0 = all cores)")
      ->capture_default_str();
}

void apply_enums(RunConfig& cfg, const std::string& levels,
                 const std::string& backend, const std::string& metric) {
  cfg.levels.clear();
  std::size_t pos = 0;
  while (pos <= levels.size()) {
    auto comma = levels.find(',', pos);
    if (comma == std::string::npos) comma = levels.size();
    const auto name = levels.substr(pos, comma - pos);
    if (!name.empty()) {
      const auto level = segment::level_from_string(name);
      if (std::find(cfg.levels.begin(), cfg.levels.end(), level) == cfg.levels.end()) {
        cfg.levels.push_back(level);
      }
    }
    pos = comma + 1;
  }
  if (backend == "hash") {
    cfg.backend = Backend::Hash;
  } else if (backend == "embx") {
    cfg.backend = Backend::Embx;
  } else {
    throw Error(ErrorCode::InvalidArgument,
                "unknown backend '" + backend + "' (expected hash, embx)");
  }
  cfg.metric = score::metric_from_string(metric);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Scan an author's passages for semantic overlap with source books"};
  app.name("influence-scan");
  app.require_subcommand(1);

  RunConfig cfg;
  std::string levels = "sentence,ngram";
  std::string backend = "hash";
  std::string metric = "p";

  struct Command {
    const char* name;
    const char* help;
    std::size_t (*run)(const RunConfig&);
  };
  const Command commands[] = {
      {"segment", "Ingest documents and write segment JSONL files", cmd_segment},
      {"compare", "Score all segment pairs and write matrix bundles", cmd_compare},
      {"report", "Render heatmaps and ranked pair reports", cmd_report},
      {"pipeline", "segment + compare + report with the hash backend", cmd_pipeline},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common_options(*sub, cfg, levels, backend, metric);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    apply_enums(cfg, levels, backend, metric);
    for (std::size_t k = 0; k < subs.size(); ++k) {
      if (subs[k]->parsed()) {
        const auto written = commands[k].run(cfg);
        std::clog << commands[k].name << ": wrote " << written << " files under "
                  << cfg.output_dir.string() << '\n';
      }
    }
  } catch (const Error& e) {
    std::cerr << "influence-scan: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "influence-scan: IoError: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace influence::pipeline
