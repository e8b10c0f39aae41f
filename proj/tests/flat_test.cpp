#include "hiertopics/flat.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "hiertopics/corpus.hpp"
#include "hiertopics/metrics.hpp"
#include "hiertopics/rng.hpp"

using hiertopics::Corpus;
using hiertopics::FlatModelConfig;
using hiertopics::GibbsLda;
using hiertopics::Rng;

namespace {

// Two groups of documents over disjoint term blocks [0,10) and [10,20).
Corpus two_block_corpus(std::uint64_t seed) {
  Corpus c;
  for (int w = 0; w < 20; ++w) c.vocabulary.terms.push_back("w" + std::to_string(w));
  Rng rng(seed);
  for (int d = 0; d < 40; ++d) {
    hiertopics::Document doc;
    const std::uint32_t base = d < 20 ? 0 : 10;
    for (int i = 0; i < 30; ++i) {
      doc.tokens.push_back(base + static_cast<std::uint32_t>(rng.below(10)));
    }
    c.total_tokens += doc.length();
    c.documents.push_back(std::move(doc));
  }
  return c;
}

double two_block_purity(const hiertopics::DocTopicMatrix& theta) {
  // Majority agreement between argmax-topic clusters and the two doc groups.
  int counts[2][2] = {};
  for (std::size_t d = 0; d < theta.docs; ++d) {
    const int group = d < 20 ? 0 : 1;
    const int cluster = theta.at(0, d) >= theta.at(1, d) ? 0 : 1;
    ++counts[cluster][group];
  }
  const int agree =
      std::max(counts[0][0], counts[0][1]) + std::max(counts[1][0], counts[1][1]);
  return static_cast<double>(agree) / static_cast<double>(theta.docs);
}

}  // namespace

TEST_CASE("flat config validation") {
  FlatModelConfig config;
  config.topics = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.topics = 2;
  config.burn_in = 500;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.burn_in = 300;
  CHECK_NOTHROW(config.validate());
}

TEST_CASE("gibbs lda separates disjoint vocabulary groups") {
  Corpus c = two_block_corpus(123);
  double purity_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    FlatModelConfig config;
    config.topics = 2;
    config.alpha = 0.5;
    config.eta = 0.1;
    config.iterations = 120;
    config.burn_in = 80;
    config.seed = seed;
    auto [phi, theta] = hiertopics::lda_train(c, config);
    phi.validate();
    theta.validate();
    purity_sum += two_block_purity(theta);
  }
  CHECK(purity_sum / 6.0 > 0.9);
}

TEST_CASE("gibbs lda with one topic matches the smoothed unigram distribution") {
  Corpus c = two_block_corpus(5);
  FlatModelConfig config;
  config.topics = 1;
  config.eta = 0.7;
  config.iterations = 4;
  config.burn_in = 1;
  auto [phi, theta] = hiertopics::lda_train(c, config);

  auto tf = c.term_frequencies();
  const double denom = static_cast<double>(c.total_tokens) +
                       static_cast<double>(c.vocab_size()) * config.eta;
  for (std::size_t w = 0; w < c.vocab_size(); ++w) {
    const double expected = (static_cast<double>(tf[w]) + config.eta) / denom;
    CHECK(std::abs(phi.at(w, 0) - expected) < 1e-12);
  }
  for (std::size_t d = 0; d < c.num_documents(); ++d) CHECK(theta.at(0, d) == 1.0);
}

TEST_CASE("gibbs lda is deterministic per seed") {
  Corpus c = two_block_corpus(9);
  FlatModelConfig config;
  config.topics = 3;
  config.iterations = 30;
  config.burn_in = 10;
  config.seed = 77;
  auto [phi1, theta1] = hiertopics::lda_train(c, config);
  auto [phi2, theta2] = hiertopics::lda_train(c, config);
  CHECK(phi1.probs.data() == phi2.probs.data());
  CHECK(theta1.probs.data() == theta2.probs.data());
}

TEST_CASE("gibbs counters stay conserved across sweeps") {
  Corpus c = two_block_corpus(31);
  FlatModelConfig config;
  config.topics = 4;
  config.iterations = 10;
  config.burn_in = 5;
  GibbsLda sampler(c, config);
  sampler.initialize();
  sampler.validate_counters();
  for (int pass = 0; pass < 10; ++pass) {
    sampler.sweep();
    sampler.validate_counters();
  }
}

TEST_CASE("em with one topic recovers the unigram distribution exactly") {
  Corpus c = two_block_corpus(2);
  FlatModelConfig config;
  config.topics = 1;
  config.iterations = 20;
  config.burn_in = 0;
  auto result = hiertopics::em_train(c, config);

  auto tf = c.term_frequencies();
  for (std::size_t w = 0; w < c.vocab_size(); ++w) {
    const double expected = static_cast<double>(tf[w]) / static_cast<double>(c.total_tokens);
    CHECK(std::abs(result.phi.at(w, 0) - expected) < 1e-12);
  }
}

TEST_CASE("em log-likelihood is monotone without sparsing") {
  Corpus c = two_block_corpus(17);
  FlatModelConfig config;
  config.topics = 4;
  config.iterations = 60;
  config.burn_in = 0;
  config.seed = 3;
  auto result = hiertopics::em_train(c, config);
  REQUIRE(result.ll_trace.size() >= 2);
  for (std::size_t i = 1; i < result.ll_trace.size(); ++i) {
    CHECK(result.ll_trace[i] >= result.ll_trace[i - 1] - 1e-9 * std::abs(result.ll_trace[i - 1]));
  }
  result.phi.validate();
  result.theta.validate();
}

TEST_CASE("em with sparsing recovers planted topic blocks") {
  hiertopics::SyntheticSpec spec{5, 1, 0.95};
  auto [corpus, planted] = hiertopics::generate_synthetic(spec, 300, 60, 1000, 0.05, 21);

  FlatModelConfig config;
  config.topics = 5;
  config.iterations = 120;
  config.burn_in = 0;
  config.seed = 4;
  config.sparsing_strength = 0.1;
  auto result = hiertopics::em_train(corpus, config);
  result.phi.validate();

  int pure_topics = 0;
  for (std::size_t t = 0; t < 5; ++t) {
    auto top = result.phi.top_words(t, 10);
    std::set<int> parents;
    for (auto w : top) {
      parents.insert(static_cast<int>(w / planted.block_size));
    }
    if (parents.size() == 1 && *parents.begin() < planted.num_parents()) ++pure_topics;
  }
  CHECK(pure_topics >= 4);
}

TEST_CASE("em treats pseudo documents as part of the fit") {
  Corpus c = two_block_corpus(8);
  hiertopics::PseudoDocument pseudo;
  for (std::uint32_t w = 0; w < 10; ++w) pseudo.term_weights.emplace_back(w, 3.0);
  pseudo.total = 30.0;

  FlatModelConfig config;
  config.topics = 2;
  config.iterations = 60;
  config.burn_in = 0;
  config.seed = 12;
  std::vector<hiertopics::PseudoDocument> pseudos = {pseudo};
  auto result = hiertopics::em_train(c, config, pseudos);

  REQUIRE(result.pseudo_theta.cols() == 1);
  double column = 0.0;
  for (std::size_t t = 0; t < 2; ++t) column += result.pseudo_theta.at(t, 0);
  CHECK(std::abs(column - 1.0) < 1e-9);
  CHECK(result.theta.docs == c.num_documents());

  // The pseudo doc lives entirely in block [0,10); its mixture must favor
  // whichever topic owns that block.
  double max_component = std::max(result.pseudo_theta.at(0, 0), result.pseudo_theta.at(1, 0));
  CHECK(max_component > 0.9);
}
