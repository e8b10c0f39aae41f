#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "hiertopics/corpus.hpp"
#include "hiertopics/errors.hpp"
#include "hiertopics/manifest.hpp"

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("fnv1a matches published reference digests") {
  CHECK(hiertopics::fnv1a_hex(nullptr, 0) == "cbf29ce484222325");
  CHECK(hiertopics::fnv1a_hex("a", 1) == "af63dc4c8601ec8c");
  CHECK(hiertopics::fnv1a_hex("foobar", 6) == "85944171f73967e8");
}

TEST_CASE("file fingerprints hash raw bytes") {
  const auto path = temp_file("hiertopics_fp_test.bin");
  std::ofstream(path, std::ios::binary) << "foobar";
  CHECK(hiertopics::file_fingerprint(path) == "85944171f73967e8");
  std::filesystem::remove(path);
  CHECK_THROWS_AS(hiertopics::file_fingerprint(path), hiertopics::DataError);
}

TEST_CASE("corpus fingerprints track content not seed labels") {
  hiertopics::SyntheticSpec spec{2, 2, 0.4};
  auto [a, pa] = hiertopics::generate_synthetic(spec, 15, 10, 50, 0.1, 3);
  auto [b, pb] = hiertopics::generate_synthetic(spec, 15, 10, 50, 0.1, 3);
  auto [c, pc] = hiertopics::generate_synthetic(spec, 15, 10, 50, 0.1, 4);
  CHECK(hiertopics::corpus_fingerprint(a) == hiertopics::corpus_fingerprint(b));
  CHECK(hiertopics::corpus_fingerprint(a) != hiertopics::corpus_fingerprint(c));
}

TEST_CASE("manifests round trip every field") {
  hiertopics::RunManifest manifest;
  manifest.command = "sweep";
  manifest.seed = 1234567890123456789ull;
  manifest.corpus_fingerprint = "85944171f73967e8";
  manifest.created_at = "2026-01-02T03:04:05Z";
  manifest.set("model", "hpam");
  manifest.set("eta", 0.2);
  manifest.set("restarts", std::uint64_t{6});
  manifest.set("note", "value=with=equals");

  const auto path = temp_file("hiertopics_manifest_test.txt");
  hiertopics::write_manifest(manifest, path);
  const auto loaded = hiertopics::read_manifest(path);
  std::filesystem::remove(path);

  CHECK(loaded.command == "sweep");
  CHECK(loaded.version == hiertopics::kToolkitVersion);
  CHECK(loaded.seed == manifest.seed);
  CHECK(loaded.corpus_fingerprint == manifest.corpus_fingerprint);
  CHECK(loaded.created_at == manifest.created_at);
  CHECK(loaded.get("model") == "hpam");
  CHECK(loaded.get_double("eta") == 0.2);
  CHECK(loaded.get_u64("restarts") == 6);
  CHECK(loaded.get("note") == "value=with=equals");
  CHECK(!loaded.has("absent"));
  CHECK_THROWS_AS(loaded.get("absent"), hiertopics::DataError);
}

TEST_CASE("manifest writes are deterministic and key sorted") {
  hiertopics::RunManifest first;
  first.command = "train";
  first.created_at = "2026-01-02T03:04:05Z";
  first.set("zeta", "1");
  first.set("alpha", "2");
  hiertopics::RunManifest second = first;
  second.entries = {{"alpha", "2"}, {"zeta", "1"}};

  const auto pa = temp_file("hiertopics_manifest_a.txt");
  const auto pb = temp_file("hiertopics_manifest_b.txt");
  hiertopics::write_manifest(first, pa);
  hiertopics::write_manifest(second, pb);
  const std::string a = slurp(pa);
  CHECK(a == slurp(pb));
  CHECK(a.find("alpha=2\nzeta=1\n") != std::string::npos);
  std::filesystem::remove(pa);
  std::filesystem::remove(pb);
}

TEST_CASE("doubles survive a manifest round trip bit exactly") {
  hiertopics::RunManifest manifest;
  manifest.command = "sweep";
  manifest.created_at = "2026-01-02T03:04:05Z";
  const double values[] = {0.1, 0.2, 1.0 / 3.0, 6.626e-34, -0.0, 1e308};
  for (std::size_t i = 0; i < std::size(values); ++i)
    manifest.set("v" + std::to_string(i), values[i]);
  const auto path = temp_file("hiertopics_manifest_doubles.txt");
  hiertopics::write_manifest(manifest, path);
  const auto loaded = hiertopics::read_manifest(path);
  std::filesystem::remove(path);
  for (std::size_t i = 0; i < std::size(values); ++i) {
    const double parsed = loaded.get_double("v" + std::to_string(i));
    CHECK(std::memcmp(&parsed, &values[i], sizeof(double)) == 0);
  }
}

TEST_CASE("malformed manifests are data errors") {
  const auto path = temp_file("hiertopics_manifest_bad.txt");
  std::ofstream(path) << "command=train\nnot a key value line\n";
  CHECK_THROWS_AS(hiertopics::read_manifest(path), hiertopics::DataError);
  std::ofstream(path) << "version=0.1.0\n";  // no command
  CHECK_THROWS_AS(hiertopics::read_manifest(path), hiertopics::DataError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(hiertopics::read_manifest(path), hiertopics::DataError);

  hiertopics::RunManifest reserved;
  reserved.command = "train";
  reserved.set("seed", "7");  // reserved keys may not appear as entries
  CHECK_THROWS_AS(hiertopics::write_manifest(reserved, path), hiertopics::DataError);
  std::filesystem::remove(path);
}
