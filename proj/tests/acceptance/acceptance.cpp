// Runs each acceptance criterion of the primary component and prints one
// PASS/FAIL line per criterion. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "influence/embedding_store.hpp"
#include "influence/error.hpp"
#include "influence/matrix_analyzer.hpp"
#include "influence/scorer.hpp"
#include "influence/segmenter.hpp"
#include "oracle.hpp"

using namespace influence;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void check(Outcome& o, bool ok, const std::string& what) {
  if (!ok && o.pass) {
    o.pass = false;
    o.detail = what;
  }
}

Outcome oracle_equivalence() {
  Outcome o;
  std::mt19937_64 rng(20240501);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int k = 0; k < 500; ++k) {
    const std::size_t dim = 1 + rng() % 8;
    const auto a = testsupport::random_segment(rng, 1 + rng() % 6, dim);
    const auto b = testsupport::random_segment(rng, 1 + rng() % 6, dim);
    const auto t = score::bertscore(a, b);
    const auto ref = testsupport::brute_force_bertscore(testsupport::rows_of(a),
                                                        testsupport::rows_of(b));
    worst = std::max({worst, std::abs(t.p - ref.p), std::abs(t.r - ref.r),
                      std::abs(t.f1 - ref.f1)});
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  check(o, worst <= 1e-6, "max deviation " + std::to_string(worst));
  check(o, secs < 5.0, "runtime " + std::to_string(secs) + " s");
  char buf[96];
  std::snprintf(buf, sizeof buf, "500 pairs, max |diff| %.2e, %.3f s", worst, secs);
  if (o.pass) o.detail = buf;
  return o;
}

Outcome identity_symmetry() {
  Outcome o;
  std::mt19937_64 rng(77);
  score::IdfWeights uniform;
  uniform.default_weight = 1.7;
  for (int k = 0; k < 200; ++k) {
    const std::size_t dim = 2 + rng() % 31;
    const auto a = testsupport::random_segment(rng, 1 + rng() % 12, dim);
    const auto b = testsupport::random_segment(rng, 1 + rng() % 12, dim);
    const auto self = score::bertscore(a, a);
    check(o,
          std::abs(self.p - 1) <= 1e-6 && std::abs(self.r - 1) <= 1e-6 &&
              std::abs(self.f1 - 1) <= 1e-6,
          "identity");
    const auto ab = score::bertscore(a, b), ba = score::bertscore(b, a);
    check(o, std::abs(ab.p - ba.r) <= 1e-7 && std::abs(ab.r - ba.p) <= 1e-7, "swap p<->r");
    check(o, std::abs(ab.f1 - ba.f1) <= 1e-7, "f1 swap");
    const auto w = score::bertscore(a, b, &uniform);
    check(o,
          std::abs(w.p - ab.p) <= 1e-7 && std::abs(w.r - ab.r) <= 1e-7 &&
              std::abs(w.f1 - ab.f1) <= 1e-7,
          "uniform idf");
  }
  if (o.pass) o.detail = "200 random pairs";
  return o;
}

Outcome f1_consistency() {
  Outcome o;
  const double f1 = score::f1_score(0.80, 0.43);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", f1);
  check(o, std::abs(f1 - 0.5593) <= 1e-4, "f1 " + std::to_string(f1));
  check(o, std::string(buf) == "0.56", std::string("rounds to ") + buf);
  if (o.pass) o.detail = "f1(0.80, 0.43) = " + std::to_string(f1) + " -> " + buf;
  return o;
}

Outcome partition_property() {
  Outcome o;
  std::mt19937 rng(4242);
  for (int k = 0; k < 100; ++k) {
    const std::size_t tokens = rng() % 60;
    std::string text;
    for (std::size_t t = 0; t < tokens; ++t) {
      text += "w" + std::to_string(rng() % 50) + (rng() % 7 ? " " : "\n");
    }
    segment::SegmentationConfig cfg;
    cfg.level = segment::Level::Ngram;
    cfg.n = 5;
    const auto part = segment::split_ngrams(text, cfg);
    std::size_t sum = 0, pos = 0;
    const auto words = segment::word_tokenize(text);
    for (const auto& s : part) {
      for (const auto& w : s.word_tokens) check(o, words[pos++].text == w, "order");
      sum += s.word_tokens.size();
    }
    check(o, sum == tokens, "partition sum");
    cfg.overlap = true;
    const auto ov = segment::split_ngrams(text, cfg);
    check(o, ov.size() == (tokens >= 4 ? tokens - 4 : 0), "overlap count");
  }
  if (o.pass) o.detail = "100 random sequences";
  return o;
}

std::vector<embed::EmbeddedSegment> random_sentences(std::mt19937& rng, std::size_t count) {
  std::vector<embed::EmbeddedSegment> out;
  for (std::size_t k = 0; k < count; ++k) {
    segment::Segment s;
    const std::size_t words = 4 + rng() % 12;
    for (std::size_t w = 0; w < words; ++w) {
      std::string word;
      const int len = 2 + static_cast<int>(rng() % 8);
      for (int c = 0; c < len; ++c) word += static_cast<char>('a' + rng() % 26);
      s.word_tokens.push_back(word);
    }
    out.push_back(embed::hash_embed(s, {}, 64));
  }
  return out;
}

Outcome diagonal_sanity() {
  Outcome o;
  std::mt19937 id_rng(9);
  const auto corpus = random_sentences(id_rng, 20);
  const auto identity = analyze::compare_all(corpus, corpus);
  const double d_id = analyze::diagonal_alignment(identity, score::Metric::P);
  check(o, d_id == 1.0, "identity corpus " + std::to_string(d_id));
  int below = 0;
  double total = 0.0;
  for (unsigned seed = 1; seed <= 100; ++seed) {
    std::mt19937 rng(seed);
    const auto cand = random_sentences(rng, 20);
    const auto ref = random_sentences(rng, 20);
    const double d = analyze::diagonal_alignment(analyze::compare_all(cand, ref), score::Metric::P);
    total += d;
    if (d < 0.5) ++below;
  }
  check(o, below >= 95, std::to_string(below) + "/100 random seeds below 0.5");
  char buf[96];
  std::snprintf(buf, sizeof buf, "identity %.2f; random < 0.5 in %d/100 (mean %.3f)", d_id,
                below, total / 100.0);
  if (o.pass) o.detail = buf;
  return o;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    out[fs::relative(e.path(), root).string()] = {std::istreambuf_iterator<char>(in), {}};
  }
  return out;
}

Outcome end_to_end_determinism() {
  Outcome o;
  const fs::path manifest = fs::path(FIXTURE_DIR) / "manifest.json";
  const auto root = testsupport::scratch_dir("acceptance_e2e");
  for (const char* run : {"a", "b"}) {
    const std::string cmd = std::string("\"") + INFLUENCE_SCAN + "\" pipeline --manifest \"" +
                            manifest.string() + "\" --out \"" + (root / run).string() +
                            "\" 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    check(o, rc == 0, std::string("pipeline run ") + run + " exit " + std::to_string(rc));
  }
  if (!o.pass) return o;
  const auto a = tree(root / "a"), b = tree(root / "b");
  check(o, !a.empty() && a == b, "output trees differ");
  std::size_t bytes = 0;
  for (const auto& [k, v] : a) bytes += v.size();
  if (o.pass) {
    o.detail = std::to_string(a.size()) + " files, " + std::to_string(bytes) + " bytes identical";
  }
  return o;
}

template <typename F>
bool raises(ErrorCode code, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

Outcome embx_round_trip() {
  Outcome o;
  const auto dir = testsupport::scratch_dir("acceptance_embx");
  std::mt19937_64 rng(1000);
  std::vector<embed::EmbeddedSegment> segs;
  for (std::uint32_t k = 0; k < 1000; ++k) {
    segs.push_back(testsupport::random_segment(
        rng, 1 + rng() % 9, 64,
        {k % 4 + 1, k % 2 ? embed::Side::Reference : embed::Side::Candidate,
         (k / 2) % 2 ? embed::Level::Ngram : embed::Level::Sentence, k / 4}));
  }
  embed::EmbeddingStoreHeader h;
  h.backend_name = "random";
  h.model_id = "gaussian-unit";
  h.dim = 64;
  embed::write_store(h, segs, dir / "s.embx");
  const auto all = embed::open_store(dir / "s.embx").read_all();
  check(o, all.size() == segs.size(), "count");
  for (std::size_t k = 0; o.pass && k < segs.size(); ++k) {
    const auto& x = all[k].matrix.values();
    const auto& y = segs[k].matrix.values();
    check(o,
          all[k].ref == segs[k].ref && all[k].tokens == segs[k].tokens && x.size() == y.size() &&
              std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) == 0,
          "segment " + std::to_string(k) + " differs");
  }

  std::ifstream in(dir / "s.embx", std::ios::binary);
  const std::vector<char> bytes{std::istreambuf_iterator<char>(in), {}};
  const auto put = [&](const std::string& name, std::vector<char> b) {
    std::ofstream(dir / name, std::ios::binary).write(b.data(), std::streamsize(b.size()));
    return dir / name;
  };
  auto magic = bytes;
  std::memcpy(magic.data(), "XXXX", 4);
  check(o, raises(ErrorCode::BadMagic, [&] { embed::open_store(put("m.embx", magic)); }),
        "bad magic");
  auto version = bytes;
  version[4] = 7;
  check(o, raises(ErrorCode::VersionMismatch, [&] { embed::open_store(put("v.embx", version)); }),
        "version");
  const std::vector<char> cut(bytes.begin(), bytes.end() - 5);
  check(o, raises(ErrorCode::CorruptRecord, [&] { embed::open_store(put("t.embx", cut)); }),
        "truncated");
  auto norm = bytes;
  const float bad = 2.0f;
  std::memcpy(norm.data() + norm.size() - 4, &bad, 4);
  check(o, raises(ErrorCode::NormViolation, [&] {
          embed::open_store(put("n.embx", norm)).read_all();
        }),
        "norm violation");
  check(o, raises(ErrorCode::DimMismatch, [&] {
          auto h2 = h;
          h2.dim = 32;
          embed::write_store(h2, segs, dir / "d.embx");
        }),
        "dim mismatch");
  if (o.pass) o.detail = "1000 segments bit-exact; 5 corruption cases raised";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 score-kernel oracle equivalence", oracle_equivalence},
      {"2 identity/symmetry suite", identity_symmetry},
      {"3 F1 definition consistency", f1_consistency},
      {"4 segmentation partition property", partition_property},
      {"5 diagonal metric sanity", diagonal_sanity},
      {"6 end-to-end determinism", end_to_end_determinism},
      {"7 EMBX round-trip", embx_round_trip},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << "  (" << o.detail
              << ")\n";
    failures += o.pass ? 0 : 1;
  }
  for (const char* skipped : {"8", "9", "10", "11", "12"}) {
    std::cout << "SKIP  criterion " << skipped
              << "  (needs the encoder embedding export; not part of this component)\n";
  }
  return failures == 0 ? 0 : 1;
}
