#include "hiertopics/flat.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hiertopics {

namespace {
constexpr double kEmRelTol = 1e-6;
}

void FlatModelConfig::validate() const {
  if (topics < 1) throw std::invalid_argument("flat config: T >= 1 required");
  if (alpha <= 0.0) throw std::invalid_argument("flat config: alpha must be positive");
  if (eta <= 0.0) throw std::invalid_argument("flat config: eta must be positive");
  if (burn_in >= iterations) throw std::invalid_argument("flat config: burn_in < iterations");
  if (sparsing_strength < 0.0) throw std::invalid_argument("flat config: tau_s >= 0 required");
}

GibbsLda::GibbsLda(const Corpus& corpus, const FlatModelConfig& config)
    : corpus_(corpus), config_(config), rng_(config.seed) {
  config_.validate();
  doc_offsets_.reserve(corpus.num_documents() + 1);
  std::size_t offset = 0;
  for (const auto& doc : corpus.documents) {
    doc_offsets_.push_back(offset);
    offset += doc.length();
  }
  doc_offsets_.push_back(offset);
  assignments_.resize(offset);
  weights_.resize(config_.topics);
}

void GibbsLda::initialize() {
  const std::size_t t_count = config_.topics;
  word_topic_.assign(corpus_.vocab_size() * t_count, 0);
  topic_doc_.assign(corpus_.num_documents() * t_count, 0);
  topic_total_.assign(t_count, 0);
  acc_word_topic_.assign(word_topic_.size(), 0);
  acc_topic_doc_.assign(topic_doc_.size(), 0);
  samples_ = 0;

  for (std::size_t d = 0; d < corpus_.num_documents(); ++d) {
    const auto& doc = corpus_.documents[d];
    for (std::size_t i = 0; i < doc.length(); ++i) {
      auto t = static_cast<std::uint32_t>(rng_.below(t_count));
      assignments_[doc_offsets_[d] + i] = t;
      ++word_topic_[doc.tokens[i] * t_count + t];
      ++topic_doc_[d * t_count + t];
      ++topic_total_[t];
    }
  }
}

void GibbsLda::sweep() {
  const std::size_t t_count = config_.topics;
  const double w_eta = static_cast<double>(corpus_.vocab_size()) * config_.eta;
  for (std::size_t d = 0; d < corpus_.num_documents(); ++d) {
    const auto& doc = corpus_.documents[d];
    std::int32_t* n_d = &topic_doc_[d * t_count];
    for (std::size_t i = 0; i < doc.length(); ++i) {
      const std::uint32_t w = doc.tokens[i];
      const std::size_t pos = doc_offsets_[d] + i;
      const std::uint32_t old = assignments_[pos];
      std::int32_t* n_w = &word_topic_[w * t_count];
      --n_w[old];
      --n_d[old];
      --topic_total_[old];

      for (std::size_t t = 0; t < t_count; ++t) {
        weights_[t] = (n_d[t] + config_.alpha) * (n_w[t] + config_.eta) /
                      (topic_total_[t] + w_eta);
      }
      const auto next = static_cast<std::uint32_t>(rng_.categorical(weights_));
      assignments_[pos] = next;
      ++n_w[next];
      ++n_d[next];
      ++topic_total_[next];
    }
  }
}

void GibbsLda::accumulate() {
  for (std::size_t i = 0; i < word_topic_.size(); ++i) acc_word_topic_[i] += word_topic_[i];
  for (std::size_t i = 0; i < topic_doc_.size(); ++i) acc_topic_doc_[i] += topic_doc_[i];
  ++samples_;
}

void GibbsLda::run() {
  initialize();
  for (std::size_t iter = 0; iter < config_.iterations; ++iter) {
    sweep();
    if (iter >= config_.burn_in) accumulate();
  }
}

void GibbsLda::validate_counters() const {
  const std::size_t t_count = config_.topics;
  std::int64_t grand_total = 0;
  for (std::size_t t = 0; t < t_count; ++t) {
    std::int64_t column = 0;
    for (std::size_t w = 0; w < corpus_.vocab_size(); ++w) {
      const auto v = word_topic_[w * t_count + t];
      if (v < 0) throw std::logic_error("gibbs: negative word-topic counter");
      column += v;
    }
    if (column != topic_total_[t]) {
      throw std::logic_error("gibbs: word-topic column does not match topic total");
    }
    grand_total += topic_total_[t];
  }
  for (std::size_t d = 0; d < corpus_.num_documents(); ++d) {
    std::int64_t row = 0;
    for (std::size_t t = 0; t < t_count; ++t) {
      const auto v = topic_doc_[d * t_count + t];
      if (v < 0) throw std::logic_error("gibbs: negative topic-doc counter");
      row += v;
    }
    if (row != static_cast<std::int64_t>(corpus_.documents[d].length())) {
      throw std::logic_error("gibbs: topic-doc row does not match document length");
    }
  }
  if (grand_total != static_cast<std::int64_t>(corpus_.total_tokens)) {
    throw std::logic_error("gibbs: topic totals do not sum to corpus tokens");
  }
}

TopicWordMatrix GibbsLda::phi() const {
  const std::size_t t_count = config_.topics;
  const std::size_t w_count = corpus_.vocab_size();
  const double denom_samples = samples_ > 0 ? static_cast<double>(samples_) : 1.0;
  TopicWordMatrix phi(w_count, t_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    double total = 0.0;
    for (std::size_t w = 0; w < w_count; ++w) {
      const double count = samples_ > 0
                               ? static_cast<double>(acc_word_topic_[w * t_count + t])
                               : static_cast<double>(word_topic_[w * t_count + t]);
      total += count / denom_samples;
    }
    const double denom = total + static_cast<double>(w_count) * config_.eta;
    for (std::size_t w = 0; w < w_count; ++w) {
      const double count = samples_ > 0
                               ? static_cast<double>(acc_word_topic_[w * t_count + t])
                               : static_cast<double>(word_topic_[w * t_count + t]);
      phi.at(w, t) = (count / denom_samples + config_.eta) / denom;
    }
  }
  return phi;
}

DocTopicMatrix GibbsLda::theta() const {
  const std::size_t t_count = config_.topics;
  const std::size_t d_count = corpus_.num_documents();
  const double denom_samples = samples_ > 0 ? static_cast<double>(samples_) : 1.0;
  DocTopicMatrix theta(t_count, d_count);
  for (std::size_t d = 0; d < d_count; ++d) {
    const double denom = static_cast<double>(corpus_.documents[d].length()) +
                         static_cast<double>(t_count) * config_.alpha;
    for (std::size_t t = 0; t < t_count; ++t) {
      const double count = samples_ > 0
                               ? static_cast<double>(acc_topic_doc_[d * t_count + t])
                               : static_cast<double>(topic_doc_[d * t_count + t]);
      theta.at(t, d) = (count / denom_samples + config_.alpha) / denom;
    }
  }
  return theta;
}

std::pair<TopicWordMatrix, DocTopicMatrix> lda_train(const Corpus& corpus,
                                                     const FlatModelConfig& config) {
  GibbsLda sampler(corpus, config);
  sampler.run();
  return {sampler.phi(), sampler.theta()};
}

namespace {

struct EmDoc {
  std::vector<std::pair<std::uint32_t, double>> terms;
  double total = 0.0;
};

void reseed_column(Matrix& phi, std::size_t t, Rng& rng) {
  const std::size_t w_count = phi.rows();
  double total = 0.0;
  for (std::size_t w = 0; w < w_count; ++w) {
    phi.at(w, t) = 1.0 + rng.uniform();
    total += phi.at(w, t);
  }
  for (std::size_t w = 0; w < w_count; ++w) phi.at(w, t) /= total;
}

}  // namespace

EmResult em_train(const Corpus& corpus, const FlatModelConfig& config,
                  std::span<const PseudoDocument> pseudo_docs) {
  config.validate();
  const std::size_t t_count = config.topics;
  const std::size_t w_count = corpus.vocab_size();
  const std::size_t d_count = corpus.num_documents();
  const std::size_t p_count = pseudo_docs.size();

  std::vector<EmDoc> docs(d_count + p_count);
  for (std::size_t d = 0; d < d_count; ++d) {
    for (const auto& [w, n] : corpus.term_counts(d)) {
      docs[d].terms.emplace_back(w, static_cast<double>(n));
    }
    docs[d].total = static_cast<double>(corpus.documents[d].length());
  }
  for (std::size_t p = 0; p < p_count; ++p) {
    auto& doc = docs[d_count + p];
    for (const auto& [w, weight] : pseudo_docs[p].term_weights) {
      if (w >= w_count) throw std::invalid_argument("em: pseudo-doc term id out of range");
      if (weight > 0.0) {
        doc.terms.emplace_back(w, weight);
        doc.total += weight;
      }
    }
    if (doc.terms.empty()) throw std::invalid_argument("em: pseudo-doc has no mass");
  }

  Rng rng(config.seed);
  Matrix phi(w_count, t_count);
  for (std::size_t t = 0; t < t_count; ++t) reseed_column(phi, t, rng);
  Matrix theta(t_count, docs.size(), 1.0 / static_cast<double>(t_count));

  EmResult result;
  std::vector<double> nwt(w_count * t_count);
  std::vector<double> ntd(t_count);
  double prev_ll = 0.0;

  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    std::fill(nwt.begin(), nwt.end(), 0.0);
    for (std::size_t j = 0; j < docs.size(); ++j) {
      std::fill(ntd.begin(), ntd.end(), 0.0);
      for (const auto& [w, n] : docs[j].terms) {
        double denom = 0.0;
        for (std::size_t t = 0; t < t_count; ++t) denom += phi.at(w, t) * theta.at(t, j);
        if (denom <= 0.0) {
          // Sparsed-out word: spread its mass uniformly to keep EM moving.
          const double r = n / static_cast<double>(t_count);
          for (std::size_t t = 0; t < t_count; ++t) {
            nwt[w * t_count + t] += r;
            ntd[t] += r;
          }
          continue;
        }
        for (std::size_t t = 0; t < t_count; ++t) {
          const double r = n * phi.at(w, t) * theta.at(t, j) / denom;
          nwt[w * t_count + t] += r;
          ntd[t] += r;
        }
      }
      for (std::size_t t = 0; t < t_count; ++t) theta.at(t, j) = ntd[t] / docs[j].total;
    }

    for (std::size_t t = 0; t < t_count; ++t) {
      double column = 0.0;
      for (std::size_t w = 0; w < w_count; ++w) {
        double v = nwt[w * t_count + t];
        if (config.sparsing_strength > 0.0) {
          v = std::max(0.0, v - config.sparsing_strength);
          nwt[w * t_count + t] = v;
        }
        column += v;
      }
      if (column <= 0.0) {
        reseed_column(phi, t, rng);
        ++result.reseeded_columns;
      } else {
        for (std::size_t w = 0; w < w_count; ++w) phi.at(w, t) = nwt[w * t_count + t] / column;
      }
    }

    double ll = 0.0;
    for (std::size_t j = 0; j < docs.size(); ++j) {
      for (const auto& [w, n] : docs[j].terms) {
        double mass = 0.0;
        for (std::size_t t = 0; t < t_count; ++t) mass += phi.at(w, t) * theta.at(t, j);
        ll += mass > 0.0 ? n * std::log(mass) : -1e300 * n;
      }
    }
    result.ll_trace.push_back(ll);
    result.iterations_run = iter + 1;
    if (iter > 0 && std::abs(ll - prev_ll) <= kEmRelTol * std::abs(prev_ll)) break;
    prev_ll = ll;
  }

  result.phi.vocab = w_count;
  result.phi.topics = t_count;
  result.phi.probs = std::move(phi);
  result.theta.topics = t_count;
  result.theta.docs = d_count;
  result.theta.probs = Matrix(t_count, d_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t d = 0; d < d_count; ++d) result.theta.probs.at(t, d) = theta.at(t, d);
  }
  result.pseudo_theta = Matrix(t_count, p_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t p = 0; p < p_count; ++p) {
      result.pseudo_theta.at(t, p) = theta.at(t, d_count + p);
    }
  }
  return result;
}

}  // namespace hiertopics
