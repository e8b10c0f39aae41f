#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace hiertopics {

struct Vocabulary {
  std::vector<std::string> terms;  // term id == index

  std::size_t size() const { return terms.size(); }
};

struct Document {
  std::vector<std::uint32_t> tokens;

  std::size_t length() const { return tokens.size(); }
};

struct Corpus {
  std::vector<Document> documents;
  Vocabulary vocabulary;
  std::size_t total_tokens = 0;

  std::size_t num_documents() const { return documents.size(); }
  std::size_t vocab_size() const { return vocabulary.size(); }

  // n_d^w for document d, sorted by term id.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> term_counts(std::size_t d) const;

  // D(v): number of documents containing each term at least once.
  std::vector<std::uint32_t> document_frequencies() const;

  // Corpus-wide term frequencies.
  std::vector<std::uint64_t> term_frequencies() const;

  // Checks the structural invariants (token ids in range, token totals,
  // non-empty documents, W >= 2). Throws std::invalid_argument.
  void validate() const;
};

struct LoadReport {
  std::size_t dropped_documents = 0;
  std::size_t dropped_terms = 0;
};

// One document per line, whitespace-separated tokens. Terms occurring fewer
// than min_count times corpus-wide are dropped; documents left empty are
// removed (and counted in the report).
Corpus load_plaintext(const std::filesystem::path& path, std::size_t min_count,
                      LoadReport* report = nullptr);

// UCI bag-of-words: three header lines (D, W, NNZ) followed by NNZ
// "docId termId count" triples with 1-based ids.
Corpus load_uci_bow(const std::filesystem::path& docword_path,
                    const std::filesystem::path& vocab_path);

void write_uci_bow(const Corpus& corpus, const std::filesystem::path& docword_path,
                   const std::filesystem::path& vocab_path);

// ---------------------------------------------------------------------------
// Synthetic corpora with a planted two-level hierarchy.

struct SyntheticSpec {
  int level1_count = 0;          // parent topics
  int children_per_parent = 0;   // children under each parent
  double parent_word_share = 0;  // token probability of the parent block
};

// Every node owns a disjoint contiguous block of term ids: parents first,
// then children in (parent-major) order. Document labels record the planted
// (parent, child) pair.
struct PlantedHierarchy {
  SyntheticSpec spec;
  double noise = 0.0;
  std::size_t vocab = 0;
  std::size_t block_size = 0;
  std::vector<int> label_level1;  // per document: parent id
  std::vector<int> label_level2;  // per document: global child id

  int num_parents() const { return spec.level1_count; }
  int num_children() const { return spec.level1_count * spec.children_per_parent; }
  int parent_of_child(int child) const { return child / spec.children_per_parent; }

  // Half-open term-id ranges.
  std::pair<std::uint32_t, std::uint32_t> parent_block(int parent) const;
  std::pair<std::uint32_t, std::uint32_t> child_block(int child) const;
};

// Each document draws a (parent, child) pair uniformly, then each token comes
// from the parent block with probability parent_word_share, from the child
// block with probability 1 - parent_word_share - noise, and uniformly from
// the whole vocabulary otherwise. Deterministic per seed.
std::pair<Corpus, PlantedHierarchy> generate_synthetic(const SyntheticSpec& spec,
                                                       std::size_t docs, std::size_t doc_len,
                                                       std::size_t vocab, double noise,
                                                       std::uint64_t seed);

// Sidecar with the planted labels: {"level1":[...],"level2":[...],"spec":{...}}.
void write_labels_json(const PlantedHierarchy& planted, const std::filesystem::path& path);
PlantedHierarchy load_labels_json(const std::filesystem::path& path);

}  // namespace hiertopics
