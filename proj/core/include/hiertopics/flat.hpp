#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hiertopics/corpus.hpp"
#include "hiertopics/matrix.hpp"
#include "hiertopics/rng.hpp"

namespace hiertopics {

struct FlatModelConfig {
  std::size_t topics = 1;  // T
  double alpha = 1.0;      // doc-topic smoothing
  double eta = 1.0;        // topic-word smoothing
  std::size_t iterations = 500;
  std::size_t burn_in = 300;
  std::uint64_t seed = 1;
  double sparsing_strength = 0.0;  // tau_s, EM only

  void validate() const;  // throws std::invalid_argument
};

// Collapsed Gibbs sampler for LDA. Counters are exact integers; phi/theta
// come from counters accumulated after burn-in.
class GibbsLda {
 public:
  GibbsLda(const Corpus& corpus, const FlatModelConfig& config);

  void initialize();
  void sweep();
  void run();  // initialize + iterations sweeps, accumulating past burn-in

  // Throws std::logic_error when any counter identity is broken.
  void validate_counters() const;

  TopicWordMatrix phi() const;
  DocTopicMatrix theta() const;
  std::size_t samples_accumulated() const { return samples_; }

 private:
  void accumulate();

  const Corpus& corpus_;
  FlatModelConfig config_;
  Rng rng_;
  std::vector<std::size_t> doc_offsets_;
  std::vector<std::uint32_t> assignments_;
  std::vector<std::int32_t> word_topic_;   // [w*T + t]
  std::vector<std::int32_t> topic_doc_;    // [d*T + t]
  std::vector<std::int32_t> topic_total_;  // [t]
  std::vector<std::int64_t> acc_word_topic_;
  std::vector<std::int64_t> acc_topic_doc_;
  std::size_t samples_ = 0;
  std::vector<double> weights_;
};

std::pair<TopicWordMatrix, DocTopicMatrix> lda_train(const Corpus& corpus,
                                                     const FlatModelConfig& config);

// Document-shaped bag of fractional term counts; used to tie hierarchy
// levels together during EM.
struct PseudoDocument {
  std::vector<std::pair<std::uint32_t, double>> term_weights;
  double total = 0.0;
};

struct EmResult {
  TopicWordMatrix phi;
  DocTopicMatrix theta;   // real documents only
  Matrix pseudo_theta;    // T x P topic mixtures of the pseudo documents
  std::vector<double> ll_trace;
  std::size_t reseeded_columns = 0;
  std::size_t iterations_run = 0;
};

// PLSA-style EM with an optional sparsing regularizer: tau_s is subtracted
// from every expected word-topic count, clipped at zero. Stops at the
// iteration cap or when the relative log-likelihood change drops below 1e-6.
EmResult em_train(const Corpus& corpus, const FlatModelConfig& config,
                  std::span<const PseudoDocument> pseudo_docs = {});

}  // namespace hiertopics
