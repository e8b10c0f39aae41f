#include "hiertopics/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "hiertopics/errors.hpp"
#include "hiertopics/rng.hpp"
#include "json.hpp"

namespace hiertopics {

std::vector<std::pair<std::uint32_t, std::uint32_t>> Corpus::term_counts(std::size_t d) const {
  std::map<std::uint32_t, std::uint32_t> counts;
  for (auto t : documents[d].tokens) ++counts[t];
  return {counts.begin(), counts.end()};
}

std::vector<std::uint32_t> Corpus::document_frequencies() const {
  std::vector<std::uint32_t> df(vocab_size(), 0);
  std::vector<std::uint32_t> seen(vocab_size(), 0);
  std::uint32_t stamp = 0;
  for (const auto& doc : documents) {
    ++stamp;
    for (auto t : doc.tokens) {
      if (seen[t] != stamp) {
        seen[t] = stamp;
        ++df[t];
      }
    }
  }
  return df;
}

std::vector<std::uint64_t> Corpus::term_frequencies() const {
  std::vector<std::uint64_t> tf(vocab_size(), 0);
  for (const auto& doc : documents) {
    for (auto t : doc.tokens) ++tf[t];
  }
  return tf;
}

void Corpus::validate() const {
  if (vocab_size() < 2) throw std::invalid_argument("corpus: vocabulary must have W >= 2");
  std::size_t total = 0;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    const auto& doc = documents[d];
    if (doc.tokens.empty()) {
      throw std::invalid_argument("corpus: document " + std::to_string(d) + " is empty");
    }
    for (auto t : doc.tokens) {
      if (t >= vocab_size()) {
        throw std::invalid_argument("corpus: token id out of range in document " +
                                    std::to_string(d));
      }
    }
    total += doc.length();
  }
  if (total != total_tokens) throw std::invalid_argument("corpus: total_tokens mismatch");
}

Corpus load_plaintext(const std::filesystem::path& path, std::size_t min_count,
                      LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read corpus file: " + path.string());

  std::vector<std::vector<std::string>> raw_docs;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    if (!tokens.empty()) raw_docs.push_back(std::move(tokens));
  }

  std::unordered_map<std::string, std::uint64_t> freq;
  for (const auto& doc : raw_docs) {
    for (const auto& tok : doc) ++freq[tok];
  }

  // Term ids in order of first occurrence among the kept terms.
  Corpus corpus;
  std::unordered_map<std::string, std::uint32_t> ids;
  LoadReport local;
  for (const auto& doc : raw_docs) {
    Document out;
    for (const auto& tok : doc) {
      if (freq[tok] < min_count) continue;
      auto it = ids.find(tok);
      if (it == ids.end()) {
        it = ids.emplace(tok, static_cast<std::uint32_t>(corpus.vocabulary.terms.size())).first;
        corpus.vocabulary.terms.push_back(tok);
      }
      out.tokens.push_back(it->second);
    }
    if (out.tokens.empty()) {
      ++local.dropped_documents;
      continue;
    }
    corpus.total_tokens += out.length();
    corpus.documents.push_back(std::move(out));
  }
  for (const auto& [term, count] : freq) {
    if (count < min_count) ++local.dropped_terms;
  }
  if (report) *report = local;
  if (corpus.documents.empty()) {
    throw DataError("corpus is empty after filtering (min_count=" + std::to_string(min_count) +
                    "): " + path.string());
  }
  return corpus;
}

Corpus load_uci_bow(const std::filesystem::path& docword_path,
                    const std::filesystem::path& vocab_path) {
  std::ifstream vin(vocab_path);
  if (!vin) throw DataError("cannot read vocab file: " + vocab_path.string());
  Corpus corpus;
  std::string term;
  while (std::getline(vin, term)) {
    while (!term.empty() && (term.back() == '\r' || term.back() == ' ')) term.pop_back();
    if (!term.empty()) corpus.vocabulary.terms.push_back(term);
  }

  std::ifstream in(docword_path);
  if (!in) throw DataError("cannot read docword file: " + docword_path.string());
  std::size_t num_docs = 0, num_words = 0, nnz = 0;
  if (!(in >> num_docs >> num_words >> nnz)) {
    throw DataError("bad UCI header in " + docword_path.string());
  }
  if (num_words != corpus.vocabulary.size()) {
    throw DataError("vocab size " + std::to_string(corpus.vocabulary.size()) +
                    " does not match header W=" + std::to_string(num_words));
  }

  corpus.documents.resize(num_docs);
  std::size_t doc_id = 0, term_id = 0, count = 0, read = 0;
  while (in >> doc_id >> term_id >> count) {
    ++read;
    if (read > nnz) break;
    if (doc_id < 1 || doc_id > num_docs) {
      throw DataError("docId " + std::to_string(doc_id) + " out of range [1," +
                      std::to_string(num_docs) + "]");
    }
    if (term_id < 1 || term_id > num_words) {
      throw DataError("termId " + std::to_string(term_id) + " out of range [1," +
                      std::to_string(num_words) + "]");
    }
    if (count < 1) throw DataError("non-positive count in triple");
    auto& doc = corpus.documents[doc_id - 1];
    for (std::size_t i = 0; i < count; ++i) {
      doc.tokens.push_back(static_cast<std::uint32_t>(term_id - 1));
    }
    corpus.total_tokens += count;
  }
  if (read != nnz) {
    throw DataError("expected " + std::to_string(nnz) + " triples, found " +
                    std::to_string(read) + " in " + docword_path.string());
  }
  return corpus;
}

void write_uci_bow(const Corpus& corpus, const std::filesystem::path& docword_path,
                   const std::filesystem::path& vocab_path) {
  {
    std::ofstream vout(vocab_path);
    if (!vout) throw DataError("cannot write vocab file: " + vocab_path.string());
    for (const auto& term : corpus.vocabulary.terms) vout << term << '\n';
  }
  std::ostringstream body;
  std::size_t nnz = 0;
  for (std::size_t d = 0; d < corpus.num_documents(); ++d) {
    for (const auto& [term, count] : corpus.term_counts(d)) {
      body << (d + 1) << ' ' << (term + 1) << ' ' << count << '\n';
      ++nnz;
    }
  }
  std::ofstream out(docword_path);
  if (!out) throw DataError("cannot write docword file: " + docword_path.string());
  out << corpus.num_documents() << '\n'
      << corpus.vocab_size() << '\n'
      << nnz << '\n'
      << body.str();
}

std::pair<std::uint32_t, std::uint32_t> PlantedHierarchy::parent_block(int parent) const {
  auto b = static_cast<std::uint32_t>(block_size);
  return {static_cast<std::uint32_t>(parent) * b, static_cast<std::uint32_t>(parent + 1) * b};
}

std::pair<std::uint32_t, std::uint32_t> PlantedHierarchy::child_block(int child) const {
  auto b = static_cast<std::uint32_t>(block_size);
  auto first = static_cast<std::uint32_t>(num_parents() + child) * b;
  return {first, first + b};
}

std::pair<Corpus, PlantedHierarchy> generate_synthetic(const SyntheticSpec& spec,
                                                       std::size_t docs, std::size_t doc_len,
                                                       std::size_t vocab, double noise,
                                                       std::uint64_t seed) {
  const int parents = spec.level1_count;
  const int per_parent = spec.children_per_parent;
  if (parents < 1 || per_parent < 1) {
    throw std::invalid_argument("synthetic: need at least one parent and one child per parent");
  }
  if (static_cast<std::size_t>(parents) * per_parent > vocab / 10) {
    throw std::invalid_argument("synthetic: too many topics for vocabulary size");
  }
  if (noise < 0.0 || noise >= 1.0) throw std::invalid_argument("synthetic: noise must be in [0,1)");
  if (spec.parent_word_share < 0.0 || spec.parent_word_share + noise > 1.0) {
    throw std::invalid_argument("synthetic: parent_word_share + noise must stay within [0,1]");
  }
  if (docs == 0 || doc_len == 0) throw std::invalid_argument("synthetic: docs and doc_len >= 1");

  PlantedHierarchy planted;
  planted.spec = spec;
  planted.noise = noise;
  planted.vocab = vocab;
  const int nodes = parents + parents * per_parent;
  planted.block_size = vocab / static_cast<std::size_t>(nodes);

  Corpus corpus;
  corpus.vocabulary.terms.reserve(vocab);
  for (std::size_t w = 0; w < vocab; ++w) corpus.vocabulary.terms.push_back("w" + std::to_string(w));

  Rng rng(seed);
  const double child_share = 1.0 - spec.parent_word_share - noise;
  corpus.documents.reserve(docs);
  for (std::size_t d = 0; d < docs; ++d) {
    int parent = static_cast<int>(rng.below(static_cast<std::size_t>(parents)));
    int child = parent * per_parent + static_cast<int>(rng.below(static_cast<std::size_t>(per_parent)));
    planted.label_level1.push_back(parent);
    planted.label_level2.push_back(child);
    Document doc;
    doc.tokens.reserve(doc_len);
    auto [p_lo, p_hi] = planted.parent_block(parent);
    auto [c_lo, c_hi] = planted.child_block(child);
    for (std::size_t n = 0; n < doc_len; ++n) {
      double u = rng.uniform();
      std::uint32_t w;
      if (u < spec.parent_word_share) {
        w = p_lo + static_cast<std::uint32_t>(rng.below(p_hi - p_lo));
      } else if (u < spec.parent_word_share + child_share) {
        w = c_lo + static_cast<std::uint32_t>(rng.below(c_hi - c_lo));
      } else {
        w = static_cast<std::uint32_t>(rng.below(vocab));
      }
      doc.tokens.push_back(w);
    }
    corpus.total_tokens += doc.length();
    corpus.documents.push_back(std::move(doc));
  }
  return {std::move(corpus), std::move(planted)};
}

void write_labels_json(const PlantedHierarchy& planted, const std::filesystem::path& path) {
  nlohmann::json j;
  j["level1"] = planted.label_level1;
  j["level2"] = planted.label_level2;
  j["spec"] = {{"level1_count", planted.spec.level1_count},
               {"children_per_parent", planted.spec.children_per_parent},
               {"parent_word_share", planted.spec.parent_word_share},
               {"noise", planted.noise},
               {"vocab", planted.vocab},
               {"block_size", planted.block_size}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write labels file: " + path.string());
  out << j.dump(2) << '\n';
}

PlantedHierarchy load_labels_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read labels file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad labels json: " + std::string(e.what()));
  }
  PlantedHierarchy planted;
  planted.label_level1 = j.at("level1").get<std::vector<int>>();
  planted.label_level2 = j.at("level2").get<std::vector<int>>();
  const auto& s = j.at("spec");
  planted.spec.level1_count = s.at("level1_count").get<int>();
  planted.spec.children_per_parent = s.at("children_per_parent").get<int>();
  planted.spec.parent_word_share = s.at("parent_word_share").get<double>();
  planted.noise = s.at("noise").get<double>();
  planted.vocab = s.at("vocab").get<std::size_t>();
  planted.block_size = s.at("block_size").get<std::size_t>();
  return planted;
}

}  // namespace hiertopics
