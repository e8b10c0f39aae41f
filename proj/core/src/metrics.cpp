#include "hiertopics/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace hiertopics {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ThresholdStats threshold_stats(const TopicWordMatrix& phi) {
  const double threshold = 1.0 / static_cast<double>(phi.vocab);
  ThresholdStats stats;
  for (double p : phi.probs.data()) {
    if (p > threshold) {
      ++stats.n;
      stats.ptilde += p;
    }
  }
  return stats;
}

LevelEntropyReport renyi_entropy(const TopicWordMatrix& phi, int level) {
  if (phi.topics < 2) throw std::invalid_argument("renyi_entropy: requires T >= 2");
  if (phi.vocab < 2) throw std::invalid_argument("renyi_entropy: requires W >= 2");

  const auto stats = threshold_stats(phi);
  LevelEntropyReport report;
  report.level = level;
  report.topics = phi.topics;
  report.n = stats.n;
  report.ptilde = stats.ptilde;
  report.q = 1.0 / static_cast<double>(phi.topics);

  if (stats.n == 0 || stats.ptilde <= 0.0) {
    report.degenerate = true;
    report.energy = kInf;
    report.shannon = -kInf;
    report.free_energy = kInf;
    report.renyi = kInf;
    return report;
  }

  const double t = static_cast<double>(phi.topics);
  const double rho = static_cast<double>(stats.n) / (static_cast<double>(phi.vocab) * t);
  report.shannon = std::log(rho);
  // + 0.0 folds a negative zero into +0 so formatted output is stable.
  report.energy = -std::log(stats.ptilde / t) + 0.0;
  report.free_energy = report.energy - t * report.shannon;
  report.renyi = (report.q * std::log(report.q * stats.ptilde) +
                  std::log(rho) / report.q) /
                 (report.q - 1.0);
  return report;
}

std::string level_entropy_csv_row(const LevelEntropyReport& report) {
  char buf[192];
  std::snprintf(buf, sizeof buf, "%d,%zu,%zu,%.6f,%.6f,%.6f,%.6f", report.level, report.topics,
                report.n, report.ptilde, report.energy, report.shannon, report.renyi);
  return buf;
}

double log_likelihood(const TopicWordMatrix& phi, const DocTopicMatrix& theta,
                      const Corpus& corpus, std::size_t* zero_mass_tokens) {
  if (phi.topics != theta.topics) throw std::invalid_argument("log_likelihood: T mismatch");
  if (phi.vocab != corpus.vocab_size()) throw std::invalid_argument("log_likelihood: W mismatch");
  if (theta.docs != corpus.num_documents()) throw std::invalid_argument("log_likelihood: D mismatch");

  const std::size_t t_count = phi.topics;
  double ll = 0.0;
  std::size_t zeros = 0;
  for (std::size_t d = 0; d < corpus.num_documents(); ++d) {
    for (const auto& [w, count] : corpus.term_counts(d)) {
      double mass = 0.0;
      for (std::size_t t = 0; t < t_count; ++t) {
        mass += phi.probs.at(w, t) * theta.probs.at(t, d);
      }
      if (mass <= 0.0) {
        zeros += count;
        ll = -kInf;
      } else if (std::isfinite(ll)) {
        ll += static_cast<double>(count) * std::log(mass);
      }
    }
  }
  if (zero_mass_tokens) *zero_mass_tokens = zeros;
  return ll;
}

double perplexity(const TopicWordMatrix& phi, const DocTopicMatrix& theta, const Corpus& corpus) {
  const double ll = log_likelihood(phi, theta, corpus);
  return std::exp(-ll / static_cast<double>(corpus.total_tokens));
}

double coherence(std::span<const std::uint32_t> top_words, const Corpus& corpus) {
  const std::size_t m_count = top_words.size();
  if (m_count < 2 || m_count > corpus.vocab_size()) {
    throw std::invalid_argument("coherence: need 2 <= M <= W top words");
  }
  std::unordered_map<std::uint32_t, std::size_t> slot;
  for (std::size_t m = 0; m < m_count; ++m) {
    if (top_words[m] >= corpus.vocab_size()) {
      throw std::invalid_argument("coherence: word id out of range");
    }
    slot[top_words[m]] = m;
  }

  const std::size_t docs = corpus.num_documents();
  std::vector<char> presence(m_count * docs, 0);
  for (std::size_t d = 0; d < docs; ++d) {
    for (auto tok : corpus.documents[d].tokens) {
      auto it = slot.find(tok);
      if (it != slot.end()) presence[it->second * docs + d] = 1;
    }
  }

  std::vector<std::size_t> df(m_count, 0);
  for (std::size_t m = 0; m < m_count; ++m) {
    for (std::size_t d = 0; d < docs; ++d) df[m] += presence[m * docs + d];
    if (df[m] == 0) throw std::invalid_argument("coherence: word absent from corpus");
  }

  double score = 0.0;
  for (std::size_t m = 1; m < m_count; ++m) {
    for (std::size_t l = 0; l < m; ++l) {
      std::size_t co = 0;
      for (std::size_t d = 0; d < docs; ++d) {
        co += presence[m * docs + d] & presence[l * docs + d];
      }
      score += std::log(static_cast<double>(co + 1) / static_cast<double>(df[l]));
    }
  }
  return score;
}

double mean_topic_coherence(const TopicWordMatrix& phi, const Corpus& corpus, std::size_t m) {
  if (phi.vocab != corpus.vocab_size()) {
    throw std::invalid_argument("mean_topic_coherence: W mismatch");
  }
  const std::size_t take = std::min(m, phi.vocab);
  double total = 0.0;
  for (std::size_t t = 0; t < phi.topics; ++t) {
    total += coherence(phi.top_words(t, take), corpus);
  }
  return total / static_cast<double>(phi.topics);
}

}  // namespace hiertopics
