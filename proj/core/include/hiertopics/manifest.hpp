#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hiertopics/corpus.hpp"

namespace hiertopics {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Flat key=value record of a command invocation with every default
// materialized. A manifest doubles as a config file: feeding it back through
// --config re-runs the command bit-identically (doubles round-trip via %.17g).
struct RunManifest {
  std::string command;
  std::string version = kToolkitVersion;
  std::uint64_t seed = 0;
  std::string corpus_fingerprint;
  std::string created_at;  // ISO 8601 UTC

  // Resolved configuration, stored sorted by key on write.
  std::vector<std::pair<std::string, std::string>> entries;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, double value);  // %.17g, round-trip exact

  bool has(const std::string& key) const;
  // Throws DataError when the key is absent or the value does not parse.
  std::string get(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::int64_t get_i64(const std::string& key) const;
  double get_double(const std::string& key) const;
};

// 64-bit FNV-1a over a byte stream, 16 lowercase hex digits.
std::string fnv1a_hex(const void* data, std::size_t size);
std::string file_fingerprint(const std::filesystem::path& path);

// Hash of the logical corpus content (W, D, token sequences), independent of
// surface term strings so renamed vocabularies with identical structure match.
std::string corpus_fingerprint(const Corpus& corpus);

std::string current_utc_timestamp();

// key=value lines: reserved keys first (command, version, seed,
// corpus_fingerprint, created_at), then config entries sorted by key.
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace hiertopics
