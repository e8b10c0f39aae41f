#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "hiertopics/corpus.hpp"
#include "hiertopics/matrix.hpp"

namespace hiertopics {

struct ThresholdStats {
  std::size_t n = 0;  // entries with phi strictly above 1/W
  double ptilde = 0.0;
};

ThresholdStats threshold_stats(const TopicWordMatrix& phi);

// Entropic summary of one hierarchy level. All logs are natural.
struct LevelEntropyReport {
  int level = 1;
  std::size_t topics = 0;
  std::size_t n = 0;
  double ptilde = 0.0;
  double q = 0.0;
  double energy = 0.0;
  double shannon = 0.0;
  double free_energy = 0.0;
  double renyi = 0.0;
  bool degenerate = false;  // no entry above the 1/W threshold; renyi is +inf
};

// Requires T >= 2 (q=1 is a singularity) and W >= 2. A solution where no
// entry clears the uniform threshold yields the +inf sentinel, not an error.
LevelEntropyReport renyi_entropy(const TopicWordMatrix& phi, int level = 1);

inline constexpr const char* kLevelEntropyCsvHeader = "level,T,N,Ptilde,energy,shannon,renyi";
std::string level_entropy_csv_row(const LevelEntropyReport& report);

// Tokens whose mixture mass is exactly zero contribute -inf and are tallied
// into *zero_mass_tokens when provided.
double log_likelihood(const TopicWordMatrix& phi, const DocTopicMatrix& theta,
                      const Corpus& corpus, std::size_t* zero_mass_tokens = nullptr);

double perplexity(const TopicWordMatrix& phi, const DocTopicMatrix& theta, const Corpus& corpus);

// Pairwise top-word co-occurrence score; words are ranked, earlier words act
// as conditioning terms. Every listed word must occur in the corpus.
double coherence(std::span<const std::uint32_t> top_words, const Corpus& corpus);

double mean_topic_coherence(const TopicWordMatrix& phi, const Corpus& corpus, std::size_t m = 10);

}  // namespace hiertopics
