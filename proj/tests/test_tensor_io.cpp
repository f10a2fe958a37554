#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "attn_spectra/archive.hpp"
#include "attn_spectra/classifier.hpp"
#include "attn_spectra/corpus.hpp"
#include "attn_spectra/feature_table.hpp"
#include "attn_spectra/report.hpp"
#include "attn_spectra/stats.hpp"
#include "attn_spectra/synthlab.hpp"
#include "helpers.hpp"

using namespace attn_spectra;
using testing::TempDir;
using testing::throws_kind;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void put(const fs::path& p, const std::string& bytes) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << bytes;
}

std::string floats(const std::vector<float>& v) {
  std::string b(v.size() * 4, '\0');
  std::memcpy(b.data(), v.data(), b.size());
  return b;
}

// Hand-written archive: L=2, H=1, N=3, d=4, uniform attention.
void write_by_hand(const fs::path& dir, std::vector<float> attn0, std::vector<std::size_t> attn0_shape) {
  nlohmann::json meta = {{"format_version", 1}, {"sample_id", "hand"}, {"label", "valid"},
                         {"tokens", 3},        {"layers", 2},        {"heads", 1},
                         {"hidden_width", 4}};
  meta["arrays"] = nlohmann::json::array();
  const std::vector<float> uniform(9, 1.0f / 3.0f);
  for (int l = 0; l < 2; ++l) {
    const auto& a = l == 0 ? attn0 : uniform;
    const auto shape = l == 0 ? attn0_shape : std::vector<std::size_t>{1, 3, 3};
    put(dir / ("attn/" + std::to_string(l) + ".bin"), floats(a));
    put(dir / ("hidden/" + std::to_string(l) + ".bin"), floats(std::vector<float>(12, 0.5f)));
    meta["arrays"].push_back({{"name", "attn/" + std::to_string(l)}, {"shape", shape},
                              {"dtype", "<f4"}, {"file", "attn/" + std::to_string(l) + ".bin"}});
    meta["arrays"].push_back({{"name", "hidden/" + std::to_string(l)}, {"shape", {3, 4}},
                              {"dtype", "float32"}, {"file", "hidden/" + std::to_string(l) + ".bin"}});
  }
  put(dir / "meta.json", meta.dump());
}

std::string error_detail(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("tensor_io") {

TEST_CASE("load a hand-written archive") {
  TempDir tmp("io");
  write_by_hand(tmp.path(), std::vector<float>(9, 1.0f / 3.0f), {1, 3, 3});
  const auto a = load_archive(tmp.path());
  CHECK(a.manifest().sample_id == "hand");
  CHECK(a.manifest().label == Label::valid);
  CHECK(a.layers() == 2);
  CHECK(a.heads() == 1);
  CHECK(a.tokens() == 3);
  CHECK(a.hidden_width() == 4);
  CHECK(a.attention(1, 0)[4] == 1.0f / 3.0f);
  CHECK(a.hidden(0).size() == 12);
}

TEST_CASE("malformed archives") {
  SUBCASE("payload shorter than its shape") {
    TempDir tmp("io");
    write_by_hand(tmp.path(), std::vector<float>(17, 0.1f), {2, 3, 3});
    CHECK(throws_kind([&] { load_archive(tmp.path()); }, ErrorKind::ShapeMismatch));
  }
  SUBCASE("shape disagrees with the header") {
    TempDir tmp("io");
    write_by_hand(tmp.path(), std::vector<float>(18, 1.0f / 3.0f), {2, 3, 3});
    CHECK(throws_kind([&] { load_archive(tmp.path()); }, ErrorKind::ShapeMismatch));
  }
  SUBCASE("NaN names the array") {
    TempDir tmp("io");
    std::vector<float> a(9, 1.0f / 3.0f);
    a[4] = std::numeric_limits<float>::quiet_NaN();
    write_by_hand(tmp.path(), a, {1, 3, 3});
    CHECK(throws_kind([&] { load_archive(tmp.path()); }, ErrorKind::NonFiniteTensor));
    CHECK(error_detail([&] { load_archive(tmp.path()); }).find("attn/0") != std::string::npos);
  }
  SUBCASE("row does not sum to one") {
    TempDir tmp("io");
    std::vector<float> a(9, 1.0f / 3.0f);
    a[0] = 0.5f;
    write_by_hand(tmp.path(), a, {1, 3, 3});
    CHECK(throws_kind([&] { load_archive(tmp.path()); }, ErrorKind::RowSumViolation));
    const auto msg = error_detail([&] { load_archive(tmp.path()); });
    CHECK(msg.find("layer 0 head 0 row 0") != std::string::npos);
  }
  SUBCASE("row sums within tolerance pass") {
    TempDir tmp("io");
    std::vector<float> a(9, 1.0f / 3.0f);
    a[0] += 0.0009f;
    write_by_hand(tmp.path(), a, {1, 3, 3});
    CHECK_NOTHROW(load_archive(tmp.path()));
  }
  SUBCASE("negative attention") {
    TempDir tmp("io");
    write_by_hand(tmp.path(), {-0.1f, 0.6f, 0.5f, 0.3f, 0.3f, 0.4f, 0.3f, 0.3f, 0.4f}, {1, 3, 3});
    CHECK(throws_kind([&] { load_archive(tmp.path()); }, ErrorKind::NegativeWeight));
  }
  SUBCASE("header problems") {
    TempDir tmp("io");
    CHECK(throws_kind([&] { load_archive(tmp.path()); }, ErrorKind::MalformedHeader));
    write_by_hand(tmp.path(), std::vector<float>(9, 1.0f / 3.0f), {1, 3, 3});
    put(tmp / "meta.json", "{ not json");
    CHECK(throws_kind([&] { load_archive(tmp.path()); }, ErrorKind::MalformedHeader));
    put(tmp / "meta.json", R"({"sample_id": "x", "tokens": 3, "layers": 1, "heads": 1, "hidden_width": 4,
      "arrays": [{"name": "attn/0", "shape": [1,3,3], "dtype": "float16", "file": "attn/0.bin"}]})");
    CHECK(throws_kind([&] { load_archive(tmp.path()); }, ErrorKind::MalformedHeader));
    put(tmp / "meta.json", R"({"sample_id": "x", "tokens": 3, "layers": 1, "heads": 1, "hidden_width": 4,
      "arrays": [{"name": "attn/0", "shape": [1,3,3], "file": "../escape.bin"}]})");
    CHECK(throws_kind([&] { load_archive(tmp.path()); }, ErrorKind::MalformedHeader));
    put(tmp / "meta.json", R"({"sample_id": "x", "tokens": 3, "layers": 1, "heads": 1, "hidden_width": 4,
      "arrays": [{"name": "attn/0", "shape": [1,3,3], "file": "attn/0.bin"}]})");
    CHECK(throws_kind([&] { load_archive(tmp.path()); }, ErrorKind::MalformedHeader));  // no hidden/0
  }
}

TEST_CASE("write then load round-trips byte for byte") {
  SyntheticArchiveSpec spec;
  spec.sample_id = "rt";
  spec.label = Label::invalid;
  spec.tokens = 7;
  spec.layers = 3;
  spec.heads = 2;
  spec.hidden_width = 5;
  spec.seed = 8;
  const auto a = make_synthetic_archive(spec);
  TempDir tmp("io");
  write_archive(a, tmp / "one");
  const auto b = load_archive(tmp / "one");
  CHECK(b.manifest() == a.manifest());
  CHECK(b.arrays() == a.arrays());
  write_archive(b, tmp / "two");
  for (const auto* f : {"meta.json", "attn/0.bin", "attn/2.bin", "hidden/1.bin"}) {
    CHECK(slurp(tmp / "one" / f) == slurp(tmp / "two" / f));
  }
  CHECK(fs::file_size(tmp / "one" / "attn/0.bin") == 2 * 7 * 7 * 4);
  CHECK(fs::exists(tmp / "one" / ".lock"));
}

TEST_CASE("corpus manifests") {
  TempDir tmp("io");
  for (const auto* id : {"p1", "p2", "p3"}) fs::create_directories(tmp / "archives" / id);
  put(tmp / "corpus.json", R"({"entries": [
      {"id": "p1", "archive": "archives/p1", "label": "valid", "groups": ["amc"], "split": "train"},
      {"id": "p2", "archive": "archives/p2", "label": "invalid"},
      {"id": "p3", "archive": "archives/p3", "label": "unlabeled", "split": "test"}]})");
  const auto c = load_corpus(tmp / "corpus.json");
  REQUIRE(c.entries.size() == 3);
  CHECK(c.entries[0].groups == std::vector<std::string>{"amc"});
  CHECK(c.entries[0].split == Split::train);
  CHECK_FALSE(c.entries[1].split.has_value());
  CHECK(c.entries[2].label == Label::unlabeled);
  CHECK(fs::equivalent(c.entries[1].archive, tmp / "archives" / "p2"));
  REQUIRE(c.find("p3") != nullptr);
  CHECK(c.find("p4") == nullptr);

  write_corpus(c, tmp / "copy.json");
  CHECK(load_corpus(tmp / "copy.json") == c);

  put(tmp / "dup.json", R"({"entries": [{"id": "p1", "archive": "archives/p1"},
                                        {"id": "p1", "archive": "archives/p2"}]})");
  CHECK(throws_kind([&] { load_corpus(tmp / "dup.json"); }, ErrorKind::DuplicateSampleId));

  put(tmp / "missing.json", R"({"entries": [{"id": "a", "archive": "nope1"}, {"id": "b", "archive": "archives/p1"},
                                            {"id": "c", "archive": "nope2"}]})");
  const auto msg = error_detail([&] { load_corpus(tmp / "missing.json"); });
  CHECK(throws_kind([&] { load_corpus(tmp / "missing.json"); }, ErrorKind::MissingArchive));
  CHECK(msg.find("nope1") != std::string::npos);
  CHECK(msg.find("nope2") != std::string::npos);
}

TEST_CASE("diagnostics csv round-trips") {
  std::vector<DiagnosticRow> rows = {{"a", 0, "hfer", 0.1},
                                     {"a", 0, "fiedler", 1.0 / 3.0},
                                     {"b,c", 12, "energy", 1e-300},
                                     {"b,c", 12, "smoothness", -0.0}};
  TempDir tmp("io");
  write_diagnostics_csv(tmp / "d.csv", rows);
  const auto back = read_diagnostics_csv(tmp / "d.csv");
  CHECK(back == rows);
  CHECK(slurp(tmp / "d.csv").rfind("sample_id,layer,metric,value\n", 0) == 0);
  CHECK(format_diagnostics_csv(back) == slurp(tmp / "d.csv"));
}

TEST_CASE("result bundles round-trip") {
  PlantedCorpusSpec spec;
  spec.n_per_class = 30;
  spec.layers = 3;
  spec.informative = {{"hfer", 1, 2.0, true}};
  const auto p = make_planted_corpus(spec);
  ResultBundle bundle;
  bundle.metadata = {{"command", "eval"}, {"seed", 0}};
  bundle.scan = scan(p.table);
  bundle.eval = eval_nested_cv(p.table);
  bundle.eval->robustness = threshold_robustness(eval_calibrated(p.table).rules.at(0), p.table, default_multipliers());

  TempDir tmp("io");
  write_results(bundle, tmp / "out");
  CHECK(read_results(tmp / "out") == bundle);
  for (const auto* f : {"report.json", "scan.csv", "curve.csv"}) CHECK(fs::exists(tmp / "out" / f));

  const auto csv_rows = read_scan_csv(tmp / "out" / "scan.csv");
  REQUIRE(csv_rows.size() == bundle.scan.size());
  CHECK(csv_rows[0].p_bh == bundle.scan[0].p_bh);
  CHECK(csv_rows[0].cohens_d == bundle.scan[0].cohens_d);

  const ResultBundle empty;
  write_results(empty, tmp / "empty");
  CHECK(read_results(tmp / "empty") == empty);

  put(tmp / "bad" / "report.json", "[1, 2");
  CHECK(throws_kind([&] { read_results(tmp / "bad"); }, ErrorKind::MalformedHeader));
}

TEST_CASE("unwritable destinations") {
  TempDir tmp("io");
  put(tmp / "file", "x");
  CHECK(throws_kind([&] { write_results(ResultBundle{}, tmp / "file" / "out"); }, ErrorKind::IoFailure));
  const auto a = make_synthetic_archive({});
  CHECK(throws_kind([&] { write_archive(a, tmp / "file" / "a"); }, ErrorKind::IoFailure));
  CHECK(throws_kind([&] { write_diagnostics_csv(tmp / "file" / "d.csv", {}); }, ErrorKind::IoFailure));
}

}
