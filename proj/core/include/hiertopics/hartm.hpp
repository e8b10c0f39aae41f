#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hiertopics/corpus.hpp"
#include "hiertopics/flat.hpp"
#include "hiertopics/matrix.hpp"
#include "hiertopics/metrics.hpp"

namespace hiertopics {

struct HartmConfig {
  std::vector<std::size_t> level_topics;  // strictly increasing
  double tau_link = 0.5;                  // parent pseudo-document weight
  FlatModelConfig em = default_em();      // template; topics and seed resolved per level
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument

  // Resolved EM settings for a 0-based level; level 0 keeps the run seed so a
  // single-level config reproduces em_train exactly.
  FlatModelConfig level_config(std::size_t level) const;

  static FlatModelConfig default_em();
};

// Parent mass below this is treated as a degenerate parent: no pseudo-doc,
// uniform interlevel column.
inline constexpr double kParentMassEpsilon = 1e-9;

struct HartmLevel {
  TopicWordMatrix phi;
  DocTopicMatrix theta;  // real documents only
  std::vector<double> ll_trace;
  std::size_t iterations_run = 0;
  std::size_t reseeded_columns = 0;

  // Tie to the next level; only filled when a next level exists.
  Matrix psi;                                 // T^{l+1} rows x T^l columns
  std::vector<double> reconstruction_error;   // per parent column, L1
  std::vector<std::size_t> degenerate_parents;
  bool psi_uniform_fallback = false;  // tau_link == 0: no tying information
};

struct HartmResult {
  std::vector<HartmLevel> levels;
  std::vector<std::string> warnings;
};

// Expected token mass per topic: n_t = sum_d N_d * theta[t,d].
std::vector<double> expected_topic_mass(const DocTopicMatrix& theta, const Corpus& corpus);

// Pseudo-documents for the next level, one per parent topic with mass above
// kParentMassEpsilon; kept[i] records the parent index of pseudo-doc i.
std::vector<PseudoDocument> parent_pseudo_documents(const TopicWordMatrix& phi,
                                                    const std::vector<double>& parent_mass,
                                                    double tau_link,
                                                    std::vector<std::size_t>& kept);

HartmResult hartm_train(const Corpus& corpus, const HartmConfig& config);

// renyi_entropy(phi^l, level = l+1) for every level.
std::vector<LevelEntropyReport> hartm_level_entropy(const HartmResult& result);

// Per-parent L1 distance between phi_parent columns and (phi_child * psi).
std::vector<double> reconstruction_errors(const TopicWordMatrix& phi_parent,
                                          const TopicWordMatrix& phi_child, const Matrix& psi);

// CSV rows "child,parent,prob" over all psi entries of every tied level pair.
void write_psi_csv(const Matrix& psi, const std::filesystem::path& path);

// Summary JSON: per tied level pair, each child's argmax parent and weight.
void write_hierarchy_json(const HartmResult& result, const std::filesystem::path& path);

}  // namespace hiertopics
