#include "hiertopics/manifest.hpp"

#include <algorithm>
#include <cerrno>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include "hiertopics/errors.hpp"

namespace hiertopics {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

std::uint64_t fnv1a_update(std::uint64_t h, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
  return h;
}

std::string to_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

const char* const kReservedKeys[] = {"command", "version", "seed", "corpus_fingerprint",
                                     "created_at"};

bool is_reserved(const std::string& key) {
  return std::find(std::begin(kReservedKeys), std::end(kReservedKeys), key) !=
         std::end(kReservedKeys);
}

}  // namespace

void RunManifest::set(const std::string& key, const std::string& value) {
  for (auto& entry : entries) {
    if (entry.first == key) {
      entry.second = value;
      return;
    }
  }
  entries.emplace_back(key, value);
}

void RunManifest::set(const std::string& key, std::uint64_t value) {
  set(key, std::to_string(value));
}

void RunManifest::set(const std::string& key, std::int64_t value) {
  set(key, std::to_string(value));
}

void RunManifest::set(const std::string& key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  set(key, std::string(buf));
}

bool RunManifest::has(const std::string& key) const {
  for (const auto& entry : entries)
    if (entry.first == key) return true;
  return false;
}

std::string RunManifest::get(const std::string& key) const {
  for (const auto& entry : entries)
    if (entry.first == key) return entry.second;
  throw DataError("manifest: missing key: " + key);
}

std::uint64_t RunManifest::get_u64(const std::string& key) const {
  const std::string value = get(key);
  errno = 0;
  char* end = nullptr;
  const std::uint64_t parsed = std::strtoull(value.c_str(), &end, 10);
  if (errno != 0 || end == value.c_str() || *end != '\0')
    throw DataError("manifest: bad integer for " + key + ": " + value);
  return parsed;
}

std::int64_t RunManifest::get_i64(const std::string& key) const {
  const std::string value = get(key);
  errno = 0;
  char* end = nullptr;
  const std::int64_t parsed = std::strtoll(value.c_str(), &end, 10);
  if (errno != 0 || end == value.c_str() || *end != '\0')
    throw DataError("manifest: bad integer for " + key + ": " + value);
  return parsed;
}

double RunManifest::get_double(const std::string& key) const {
  const std::string value = get(key);
  errno = 0;
  char* end = nullptr;
  const double parsed = std::strtod(value.c_str(), &end);
  if (errno != 0 || end == value.c_str() || *end != '\0')
    throw DataError("manifest: bad number for " + key + ": " + value);
  return parsed;
}

std::string fnv1a_hex(const void* data, std::size_t size) {
  return to_hex(fnv1a_update(kFnvOffset, data, size));
}

std::string file_fingerprint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read file for fingerprint: " + path.string());
  std::uint64_t h = kFnvOffset;
  char buf[65536];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    h = fnv1a_update(h, buf, static_cast<std::size_t>(in.gcount()));
  return to_hex(h);
}

std::string corpus_fingerprint(const Corpus& corpus) {
  std::uint64_t h = kFnvOffset;
  const std::uint64_t header[2] = {corpus.vocab_size(), corpus.num_documents()};
  h = fnv1a_update(h, header, sizeof header);
  for (const Document& doc : corpus.documents) {
    const std::uint64_t len = doc.length();
    h = fnv1a_update(h, &len, sizeof len);
    h = fnv1a_update(h, doc.tokens.data(), doc.tokens.size() * sizeof(std::uint32_t));
  }
  return to_hex(h);
}

std::string current_utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path.string());
  out << "command=" << manifest.command << '\n'
      << "version=" << manifest.version << '\n'
      << "seed=" << manifest.seed << '\n'
      << "corpus_fingerprint=" << manifest.corpus_fingerprint << '\n'
      << "created_at=" << manifest.created_at << '\n';
  auto sorted = manifest.entries;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [key, value] : sorted) {
    if (is_reserved(key)) throw DataError("manifest: reserved key in entries: " + key);
    out << key << '=' << value << '\n';
  }
  if (!out) throw DataError("manifest write failed: " + path.string());
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read manifest: " + path.string());
  RunManifest manifest;
  manifest.version.clear();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("manifest: line " + std::to_string(line_no) + " is not key=value: " +
                      line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key.empty())
      throw DataError("manifest: empty key on line " + std::to_string(line_no));
    if (key == "command") {
      manifest.command = value;
    } else if (key == "version") {
      manifest.version = value;
    } else if (key == "seed") {
      errno = 0;
      char* end = nullptr;
      manifest.seed = std::strtoull(value.c_str(), &end, 10);
      if (errno != 0 || end == value.c_str() || *end != '\0')
        throw DataError("manifest: bad seed: " + value);
    } else if (key == "corpus_fingerprint") {
      manifest.corpus_fingerprint = value;
    } else if (key == "created_at") {
      manifest.created_at = value;
    } else {
      manifest.set(key, value);
    }
  }
  if (manifest.command.empty()) throw DataError("manifest: missing command: " + path.string());
  return manifest;
}

}  // namespace hiertopics
