#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "hiertopics/corpus.hpp"
#include "hiertopics/matrix.hpp"
#include "hiertopics/numerics.hpp"
#include "hiertopics/rng.hpp"

namespace hiertopics {

struct HldaConfig {
  int depth = 3;  // levels including the root
  double gamma = 1.0;
  double eta = 0.1;
  double alpha = 1.0;
  std::size_t iterations = 1000;
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument
};

// Table-choice probabilities for one nested-CRP decision: existing tables in
// order, then the new-table option. The incoming customer is included in the
// total, so the denominator is gamma + sum(m).
std::vector<double> ncrp_table_probabilities(std::span<const int> m_counts, double gamma);

struct NcrpNode {
  int id = -1;
  int parent = -1;
  int depth = 0;
  int customers = 0;  // m_i: documents whose path passes through this node
  std::vector<int> children;
  std::vector<std::int32_t> word_counts;  // b_{c,v}
  std::int64_t total = 0;                 // s_c
};

// A scored path option: the existing node ids from the root downward. Fewer
// than `depth` entries means the remainder of the path is freshly created
// under the last listed node.
struct PathCandidate {
  std::vector<int> nodes;
};

// Fixed-depth tree under the nested-CRP prior. The root (id 0, depth 0) is
// never pruned; every other node disappears as soon as its customer count
// drops to zero, so all leaves sit at depth L-1.
class NcrpTree {
 public:
  NcrpTree() = default;
  NcrpTree(std::size_t vocab, int depth);

  int depth() const { return depth_; }
  std::size_t vocab() const { return vocab_; }
  static constexpr int kRootId = 0;

  bool contains(int id) const { return nodes_.count(id) > 0; }
  const NcrpNode& node(int id) const { return nodes_.at(id); }
  NcrpNode& node(int id) { return nodes_.at(id); }
  const std::map<int, NcrpNode>& nodes() const { return nodes_; }

  int create_child(int parent_id);

  // Erases the zero-customer chain from `id` upward, stopping at the first
  // node still in use; the root is kept regardless.
  void prune_upward(int id);

  // Existing full paths plus one new-branch option per internal node
  // (including the root), in depth-first order.
  std::vector<PathCandidate> path_candidates() const;

  std::vector<int> nodes_at_depth(int depth) const;

  // Structural invariants: child customer sums, counter totals, no
  // zero-customer nodes, root holds every document.
  void validate(std::size_t expected_docs) const;

 private:
  std::map<int, NcrpNode> nodes_;
  std::size_t vocab_ = 0;
  int depth_ = 0;
  int next_id_ = 1;
};

// Level-assignment weights for one token: (a_l+alpha)(b_l+eta)/(s_l+W*eta).
void hlda_level_weights(std::span<const std::int32_t> doc_level_counts,
                        std::span<const std::int32_t> word_counts_at_levels,
                        std::span<const std::int64_t> node_totals, double alpha, double eta,
                        std::size_t vocab, std::span<double> out);

// Log of the collapsed word likelihood of placing doc_counts (distinct term,
// count pairs summing over the level's tokens) into a node with the given
// counters. node_counts may be empty for a fresh node. lg_word memoizes
// lgamma(k+eta), lg_total memoizes lgamma(k+W*eta).
double log_level_word_score(std::span<const std::int32_t> node_counts, std::int64_t node_total,
                            std::span<const std::pair<std::uint32_t, std::int32_t>> doc_counts,
                            LgammaOffsetTable& lg_word, LgammaOffsetTable& lg_total);

// Column estimate from one node's counters: (c_w+eta)/(total+eta*V).
std::vector<double> estimate_phi_hlda(std::span<const std::int32_t> counts, double eta);

class HldaSampler {
 public:
  HldaSampler(const Corpus& corpus, const HldaConfig& config);

  void initialize();
  void z_sweep();  // resample per-token level assignments
  void c_sweep();  // resample per-document paths
  void run();      // initialize + iterations x (z_sweep, c_sweep)

  // Recomputes every counter from the assignments and compares; throws
  // std::logic_error on any mismatch.
  void validate_state() const;

  const NcrpTree& tree() const { return tree_; }
  std::vector<std::size_t> level_topics() const;
  std::vector<TopicWordMatrix> level_phi() const;
  const std::vector<double>& ll_trace() const { return trace_; }

  // In-sample token log-likelihood under the smoothed current state.
  double token_log_likelihood() const;

 private:
  using LevelCounts = std::vector<std::pair<std::uint32_t, std::int32_t>>;

  void collect_level_counts(std::size_t d, std::vector<LevelCounts>& cnt) const;
  void remove_document(std::size_t d, const std::vector<LevelCounts>& cnt);
  void add_document(std::size_t d, const std::vector<int>& path,
                    const std::vector<LevelCounts>& cnt);
  double score_candidate(const PathCandidate& cand, const std::vector<LevelCounts>& cnt,
                         std::span<const double> fresh_scores,
                         std::map<int, double>& node_score_cache);
  void resample_path(std::size_t d);

  const Corpus& corpus_;
  HldaConfig config_;
  Rng rng_;
  NcrpTree tree_;
  std::vector<std::size_t> doc_offsets_;
  std::vector<std::uint8_t> z_;           // per-token level
  std::vector<std::vector<int>> paths_;   // per-doc node ids, length depth
  std::vector<std::int32_t> level_doc_;   // a_dl, [d * depth + l]
  LgammaOffsetTable lg_word_;
  LgammaOffsetTable lg_total_;
  std::vector<double> trace_;
};

struct HldaResult {
  NcrpTree tree;
  std::vector<TopicWordMatrix> level_phi;  // index l = tree depth l = level l+1
  std::vector<std::size_t> level_topics;
  std::vector<double> ll_trace;
};

HldaResult hlda_train(const Corpus& corpus, const HldaConfig& config);

// JSON dump: one record per node with id, parent, level (depth+1), customer
// count, and the top 15 words of its smoothed column.
void write_tree_json(const HldaResult& result, const Vocabulary& vocabulary, double eta,
                     const std::filesystem::path& path);

}  // namespace hiertopics
