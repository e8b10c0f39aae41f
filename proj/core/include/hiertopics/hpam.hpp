#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hiertopics/corpus.hpp"
#include "hiertopics/matrix.hpp"
#include "hiertopics/rng.hpp"

namespace hiertopics {

struct HpamConfig {
  std::size_t super_topics = 1;  // T1
  std::size_t sub_topics = 1;    // T2
  double eta = 0.2;
  double alpha_init = 1.0;  // initial value of every alpha component
  std::size_t iterations = 500;
  std::size_t burn_in = 300;
  std::size_t alpha_optimize_interval = 25;  // 0 disables optimization
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument

  // Flat topic count: root + supers + shared subs.
  std::size_t flat_topics() const { return 1 + super_topics + sub_topics; }
  // Effective sampling cells: (x=0) plus (x,y) for x>=1, y in 0..T2.
  std::size_t grid_cells() const { return 1 + super_topics * (sub_topics + 1); }
};

// Flat topic index of a sampling cell: the root emits at k=0, super x emits
// at k=x when y=0, and sub y emits at k=T1+y (subs are shared across supers).
inline std::size_t hpam_flat_topic(std::size_t t1, std::size_t x, std::size_t y) {
  if (x == 0) return 0;
  return y == 0 ? x : t1 + y;
}

// Unnormalized sampling weights over the effective cell grid, ordered cell 0
// = (x=0), then for each x>=1 the (T2+1) choices of y. doc_super holds a_dx
// (length T1+1); doc_super_sub holds b_dxy flattened [(x-1)*(T2+1)+y];
// word_topic holds c_wk for the current word; topic_total holds the per-k
// token totals; alpha_sub is flattened like doc_super_sub.
void hpam_token_weights(std::span<const std::int32_t> doc_super,
                        std::span<const std::int32_t> doc_super_sub,
                        std::span<const std::int32_t> word_topic,
                        std::span<const std::int64_t> topic_total,
                        std::span<const double> alpha0, std::span<const double> alpha_sub,
                        double eta, std::size_t vocab, std::size_t t1, std::size_t t2,
                        std::span<double> out);

// One Minka fixed-point step for a Dirichlet prior over per-document count
// vectors; components are clipped below at 1e-6.
std::vector<double> optimize_alpha(const std::vector<std::vector<std::int32_t>>& doc_counts,
                                   std::span<const double> alpha);

// Column-wise smoothing of the word-topic counters: (c_wk+eta)/(c_k+eta*W).
TopicWordMatrix estimate_phi_hpam(std::span<const std::int32_t> word_topic,
                                  std::span<const std::int64_t> topic_totals, std::size_t vocab,
                                  double eta);

class HpamSampler {
 public:
  HpamSampler(const Corpus& corpus, const HpamConfig& config);

  void initialize();
  void sweep();
  void optimize_alphas();  // one fixed-point step for alpha0 and every alpha_x
  void run();

  // Throws std::logic_error when any counter identity is broken.
  void validate_counters() const;

  TopicWordMatrix phi_full() const;
  DocTopicMatrix theta() const;
  double token_log_likelihood() const;

  // Sampling weights on the current counters, identical to what sweep() draws
  // from; out must hold grid_cells() entries.
  void token_weights(std::size_t d, std::uint32_t w, std::span<double> out) const;

  std::span<const std::int32_t> doc_super_row(std::size_t d) const;
  std::span<const std::int32_t> doc_sub_row(std::size_t d) const;
  std::span<const std::int32_t> word_topic_row(std::uint32_t w) const;
  std::span<const std::int64_t> topic_totals() const { return topic_total_; }

  const std::vector<double>& alpha0() const { return alpha0_; }
  const std::vector<double>& alpha_sub() const { return alpha_sub_; }
  const std::vector<double>& ll_trace() const { return trace_; }

 private:
  void remove_token(std::size_t d, std::uint32_t w, std::uint16_t cell);
  void add_token(std::size_t d, std::uint32_t w, std::uint16_t cell);
  void refresh_inverses();
  void fill_theta(std::size_t d, std::span<double> out) const;

  const Corpus& corpus_;
  HpamConfig config_;
  Rng rng_;
  double word_smoothing_total_;            // eta * W
  std::vector<std::size_t> doc_offsets_;
  std::vector<std::uint16_t> cells_;       // per-token cell index
  std::vector<std::int32_t> doc_super_;    // a_dx, [d*(T1+1)+x]
  std::vector<std::int32_t> doc_sub_;      // b_dxy, [d*T1*(T2+1)+(x-1)*(T2+1)+y]
  std::vector<std::int32_t> word_topic_;   // c_wk, [w*K+k]
  std::vector<std::int64_t> topic_total_;  // [k]
  std::vector<double> alpha0_;             // length T1+1
  std::vector<double> alpha_sub_;          // [(x-1)*(T2+1)+y]
  std::vector<double> alpha_sub_sum_;      // per super, sum over y
  // 1/(c_k+eta*W) and 1/(a_dx+sum alpha_x), kept current so the per-cell
  // weight evaluation is division free.
  std::vector<double> inv_topic_;
  std::vector<double> inv_super_;  // [d*T1+(x-1)]
  std::vector<double> weights_;
  std::vector<double> trace_;
};

struct HpamResult {
  TopicWordMatrix phi_full;    // W x (1+T1+T2)
  TopicWordMatrix phi_level2;  // super-topic block
  TopicWordMatrix phi_level3;  // sub-topic block
  DocTopicMatrix theta;        // flat-topic mixtures per document
  std::vector<double> ll_trace;
  std::vector<double> alpha0;
  std::vector<double> alpha_sub;
};

HpamResult hpam_train(const Corpus& corpus, const HpamConfig& config);

// Header comment for phi_full dumps spelling out the k-index mapping.
std::string hpam_k_map_comment(std::size_t t1, std::size_t t2);

}  // namespace hiertopics
