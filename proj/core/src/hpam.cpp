#include "hiertopics/hpam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "hiertopics/numerics.hpp"

namespace hiertopics {

void HpamConfig::validate() const {
  if (super_topics < 1) throw std::invalid_argument("hpam: T1 must be >= 1");
  if (sub_topics < 1) throw std::invalid_argument("hpam: T2 must be >= 1");
  if (!(eta > 0.0)) throw std::invalid_argument("hpam: eta must be > 0");
  if (!(alpha_init > 0.0)) throw std::invalid_argument("hpam: alpha_init must be > 0");
  if (iterations == 0) throw std::invalid_argument("hpam: iterations must be >= 1");
  if (burn_in >= iterations) throw std::invalid_argument("hpam: burn_in must be < iterations");
  if (alpha_optimize_interval > iterations)
    throw std::invalid_argument("hpam: alpha_optimize_interval must be <= iterations");
}

void hpam_token_weights(std::span<const std::int32_t> doc_super,
                        std::span<const std::int32_t> doc_super_sub,
                        std::span<const std::int32_t> word_topic,
                        std::span<const std::int64_t> topic_total,
                        std::span<const double> alpha0, std::span<const double> alpha_sub,
                        double eta, std::size_t vocab, std::size_t t1, std::size_t t2,
                        std::span<double> out) {
  const double smooth_total = eta * static_cast<double>(vocab);
  out[0] = (doc_super[0] + alpha0[0]) * (word_topic[0] + eta) /
           (static_cast<double>(topic_total[0]) + smooth_total);
  std::size_t cell = 1;
  for (std::size_t x = 1; x <= t1; ++x) {
    const std::size_t off = (x - 1) * (t2 + 1);
    double bsum = 0.0;
    for (std::size_t y = 0; y <= t2; ++y) bsum += doc_super_sub[off + y] + alpha_sub[off + y];
    const double base = (doc_super[x] + alpha0[x]) / bsum;
    for (std::size_t y = 0; y <= t2; ++y) {
      const std::size_t k = hpam_flat_topic(t1, x, y);
      out[cell++] = base * (doc_super_sub[off + y] + alpha_sub[off + y]) *
                    (word_topic[k] + eta) / (static_cast<double>(topic_total[k]) + smooth_total);
    }
  }
}

std::vector<double> optimize_alpha(const std::vector<std::vector<std::int32_t>>& doc_counts,
                                   std::span<const double> alpha) {
  constexpr double kFloor = 1e-6;
  const std::size_t k = alpha.size();
  if (k == 0) throw std::invalid_argument("optimize_alpha: alpha is empty");
  const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  std::vector<double> numer(k, 0.0);
  double denom = 0.0;
  for (const auto& row : doc_counts) {
    if (row.size() != k) throw std::invalid_argument("optimize_alpha: row length mismatch");
    std::int64_t total = 0;
    for (std::int32_t v : row) {
      if (v < 0) throw std::invalid_argument("optimize_alpha: negative count");
      total += v;
    }
    if (total == 0) continue;
    denom += digamma(static_cast<double>(total) + alpha_sum) - digamma(alpha_sum);
    for (std::size_t i = 0; i < k; ++i)
      if (row[i] > 0) numer[i] += digamma(row[i] + alpha[i]) - digamma(alpha[i]);
  }
  std::vector<double> next(alpha.begin(), alpha.end());
  if (denom <= 0.0) return next;  // no informative documents
  for (std::size_t i = 0; i < k; ++i) next[i] = std::max(kFloor, alpha[i] * numer[i] / denom);
  return next;
}

TopicWordMatrix estimate_phi_hpam(std::span<const std::int32_t> word_topic,
                                  std::span<const std::int64_t> topic_totals, std::size_t vocab,
                                  double eta) {
  const std::size_t k_count = topic_totals.size();
  if (word_topic.size() != vocab * k_count)
    throw std::invalid_argument("estimate_phi_hpam: counter shape mismatch");
  TopicWordMatrix phi(vocab, k_count);
  const double smooth_total = eta * static_cast<double>(vocab);
  std::vector<double> inv(k_count);
  for (std::size_t k = 0; k < k_count; ++k)
    inv[k] = 1.0 / (static_cast<double>(topic_totals[k]) + smooth_total);
  for (std::size_t w = 0; w < vocab; ++w)
    for (std::size_t k = 0; k < k_count; ++k)
      phi.at(w, k) = (word_topic[w * k_count + k] + eta) * inv[k];
  return phi;
}

namespace {

// cell 0 is (x=0); cell 1+(x-1)*(T2+1)+y is (x,y) for x >= 1.
inline std::pair<std::size_t, std::size_t> cell_to_xy(std::uint16_t cell, std::size_t t2) {
  if (cell == 0) return {0, 0};
  const std::size_t c = cell - 1;
  return {c / (t2 + 1) + 1, c % (t2 + 1)};
}

}  // namespace

HpamSampler::HpamSampler(const Corpus& corpus, const HpamConfig& config)
    : corpus_(corpus), config_(config), rng_(config.seed) {
  config_.validate();
  corpus_.validate();
  word_smoothing_total_ = config_.eta * static_cast<double>(corpus_.vocab_size());
  doc_offsets_.reserve(corpus_.num_documents() + 1);
  std::size_t offset = 0;
  for (const auto& doc : corpus_.documents) {
    doc_offsets_.push_back(offset);
    offset += doc.tokens.size();
  }
  doc_offsets_.push_back(offset);
}

void HpamSampler::initialize() {
  const std::size_t t1 = config_.super_topics;
  const std::size_t t2 = config_.sub_topics;
  const std::size_t k_count = config_.flat_topics();
  const std::size_t d_count = corpus_.num_documents();
  cells_.assign(corpus_.total_tokens, 0);
  doc_super_.assign(d_count * (t1 + 1), 0);
  doc_sub_.assign(d_count * t1 * (t2 + 1), 0);
  word_topic_.assign(corpus_.vocab_size() * k_count, 0);
  topic_total_.assign(k_count, 0);
  alpha0_.assign(t1 + 1, config_.alpha_init);
  alpha_sub_.assign(t1 * (t2 + 1), config_.alpha_init);
  weights_.assign(config_.grid_cells(), 0.0);
  trace_.clear();
  for (std::size_t d = 0; d < d_count; ++d) {
    const auto& doc = corpus_.documents[d];
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      const auto cell = static_cast<std::uint16_t>(rng_.below(config_.grid_cells()));
      cells_[doc_offsets_[d] + i] = cell;
      add_token(d, doc.tokens[i], cell);
    }
  }
  refresh_inverses();
}

void HpamSampler::refresh_inverses() {
  const std::size_t t1 = config_.super_topics;
  const std::size_t t2 = config_.sub_topics;
  alpha_sub_sum_.assign(t1, 0.0);
  for (std::size_t x = 1; x <= t1; ++x)
    for (std::size_t y = 0; y <= t2; ++y) alpha_sub_sum_[x - 1] += alpha_sub_[(x - 1) * (t2 + 1) + y];
  inv_topic_.resize(topic_total_.size());
  for (std::size_t k = 0; k < topic_total_.size(); ++k)
    inv_topic_[k] = 1.0 / (static_cast<double>(topic_total_[k]) + word_smoothing_total_);
  inv_super_.resize(corpus_.num_documents() * t1);
  for (std::size_t d = 0; d < corpus_.num_documents(); ++d)
    for (std::size_t x = 1; x <= t1; ++x)
      inv_super_[d * t1 + (x - 1)] =
          1.0 / (doc_super_[d * (t1 + 1) + x] + alpha_sub_sum_[x - 1]);
}

void HpamSampler::remove_token(std::size_t d, std::uint32_t w, std::uint16_t cell) {
  const std::size_t t1 = config_.super_topics;
  const std::size_t t2 = config_.sub_topics;
  const auto [x, y] = cell_to_xy(cell, t2);
  --doc_super_[d * (t1 + 1) + x];
  if (x >= 1) {
    --doc_sub_[(d * t1 + (x - 1)) * (t2 + 1) + y];
    inv_super_[d * t1 + (x - 1)] =
        1.0 / (doc_super_[d * (t1 + 1) + x] + alpha_sub_sum_[x - 1]);
  }
  const std::size_t k = hpam_flat_topic(t1, x, y);
  --word_topic_[w * config_.flat_topics() + k];
  --topic_total_[k];
  inv_topic_[k] = 1.0 / (static_cast<double>(topic_total_[k]) + word_smoothing_total_);
}

void HpamSampler::add_token(std::size_t d, std::uint32_t w, std::uint16_t cell) {
  const std::size_t t1 = config_.super_topics;
  const std::size_t t2 = config_.sub_topics;
  const auto [x, y] = cell_to_xy(cell, t2);
  ++doc_super_[d * (t1 + 1) + x];
  if (x >= 1 && !inv_super_.empty()) {
    ++doc_sub_[(d * t1 + (x - 1)) * (t2 + 1) + y];
    inv_super_[d * t1 + (x - 1)] =
        1.0 / (doc_super_[d * (t1 + 1) + x] + alpha_sub_sum_[x - 1]);
  } else if (x >= 1) {
    ++doc_sub_[(d * t1 + (x - 1)) * (t2 + 1) + y];
  }
  const std::size_t k = hpam_flat_topic(t1, x, y);
  ++word_topic_[w * config_.flat_topics() + k];
  ++topic_total_[k];
  if (!inv_topic_.empty())
    inv_topic_[k] = 1.0 / (static_cast<double>(topic_total_[k]) + word_smoothing_total_);
}

void HpamSampler::token_weights(std::size_t d, std::uint32_t w, std::span<double> out) const {
  const std::size_t t1 = config_.super_topics;
  const std::size_t t2 = config_.sub_topics;
  const double eta = config_.eta;
  const std::int32_t* a = &doc_super_[d * (t1 + 1)];
  const std::int32_t* b = &doc_sub_[d * t1 * (t2 + 1)];
  const std::int32_t* c = &word_topic_[w * config_.flat_topics()];
  out[0] = (a[0] + alpha0_[0]) * (c[0] + eta) * inv_topic_[0];
  std::size_t cell = 1;
  for (std::size_t x = 1; x <= t1; ++x) {
    const std::size_t off = (x - 1) * (t2 + 1);
    const double base = (a[x] + alpha0_[x]) * inv_super_[d * t1 + (x - 1)];
    out[cell++] = base * (b[off] + alpha_sub_[off]) * (c[x] + eta) * inv_topic_[x];
    for (std::size_t y = 1; y <= t2; ++y)
      out[cell++] = base * (b[off + y] + alpha_sub_[off + y]) * (c[t1 + y] + eta) *
                    inv_topic_[t1 + y];
  }
}

void HpamSampler::sweep() {
  for (std::size_t d = 0; d < corpus_.num_documents(); ++d) {
    const auto& doc = corpus_.documents[d];
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      const std::uint32_t w = doc.tokens[i];
      const std::size_t pos = doc_offsets_[d] + i;
      remove_token(d, w, cells_[pos]);
      token_weights(d, w, weights_);
      double total = 0.0;
      for (double v : weights_) total += v;
      const auto next = static_cast<std::uint16_t>(rng_.categorical(weights_, total));
      cells_[pos] = next;
      add_token(d, w, next);
    }
  }
}

void HpamSampler::optimize_alphas() {
  const std::size_t t1 = config_.super_topics;
  const std::size_t t2 = config_.sub_topics;
  const std::size_t d_count = corpus_.num_documents();
  std::vector<std::vector<std::int32_t>> rows(d_count);
  for (std::size_t d = 0; d < d_count; ++d)
    rows[d].assign(doc_super_.begin() + static_cast<std::ptrdiff_t>(d * (t1 + 1)),
                   doc_super_.begin() + static_cast<std::ptrdiff_t>((d + 1) * (t1 + 1)));
  alpha0_ = optimize_alpha(rows, alpha0_);
  for (std::size_t x = 1; x <= t1; ++x) {
    for (std::size_t d = 0; d < d_count; ++d) {
      const std::size_t off = (d * t1 + (x - 1)) * (t2 + 1);
      rows[d].assign(doc_sub_.begin() + static_cast<std::ptrdiff_t>(off),
                     doc_sub_.begin() + static_cast<std::ptrdiff_t>(off + t2 + 1));
    }
    const std::span<const double> cur(alpha_sub_.data() + (x - 1) * (t2 + 1), t2 + 1);
    const std::vector<double> next = optimize_alpha(rows, cur);
    std::copy(next.begin(), next.end(), alpha_sub_.begin() + static_cast<std::ptrdiff_t>((x - 1) * (t2 + 1)));
  }
  refresh_inverses();
}

void HpamSampler::run() {
  initialize();
  for (std::size_t it = 0; it < config_.iterations; ++it) {
    sweep();
    trace_.push_back(token_log_likelihood());
    const std::size_t s = it + 1;
    if (config_.alpha_optimize_interval > 0 && s >= config_.burn_in && s >= 1 &&
        (s - config_.burn_in) % config_.alpha_optimize_interval == 0)
      optimize_alphas();
  }
}

void HpamSampler::validate_counters() const {
  const std::size_t t1 = config_.super_topics;
  const std::size_t t2 = config_.sub_topics;
  const std::size_t k_count = config_.flat_topics();
  std::vector<std::int32_t> a(doc_super_.size(), 0);
  std::vector<std::int32_t> b(doc_sub_.size(), 0);
  std::vector<std::int32_t> c(word_topic_.size(), 0);
  std::vector<std::int64_t> ct(topic_total_.size(), 0);
  for (std::size_t d = 0; d < corpus_.num_documents(); ++d) {
    const auto& doc = corpus_.documents[d];
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      const auto [x, y] = cell_to_xy(cells_[doc_offsets_[d] + i], t2);
      ++a[d * (t1 + 1) + x];
      if (x >= 1) ++b[(d * t1 + (x - 1)) * (t2 + 1) + y];
      const std::size_t k = hpam_flat_topic(t1, x, y);
      ++c[doc.tokens[i] * k_count + k];
      ++ct[k];
    }
  }
  if (a != doc_super_) throw std::logic_error("hpam: doc-super counters diverged");
  if (b != doc_sub_) throw std::logic_error("hpam: doc-sub counters diverged");
  if (c != word_topic_) throw std::logic_error("hpam: word-topic counters diverged");
  if (ct != topic_total_) throw std::logic_error("hpam: topic totals diverged");
  std::int64_t grand = 0;
  for (std::size_t d = 0; d < corpus_.num_documents(); ++d) {
    std::int64_t a_sum = 0;
    for (std::size_t x = 0; x <= t1; ++x) a_sum += doc_super_[d * (t1 + 1) + x];
    if (a_sum != static_cast<std::int64_t>(corpus_.documents[d].tokens.size()))
      throw std::logic_error("hpam: doc-super row does not sum to doc length");
    for (std::size_t x = 1; x <= t1; ++x) {
      std::int64_t b_sum = 0;
      for (std::size_t y = 0; y <= t2; ++y) b_sum += doc_sub_[(d * t1 + (x - 1)) * (t2 + 1) + y];
      if (b_sum != doc_super_[d * (t1 + 1) + x])
        throw std::logic_error("hpam: doc-sub row does not sum to its super count");
    }
    grand += a_sum;
  }
  if (grand != static_cast<std::int64_t>(corpus_.total_tokens))
    throw std::logic_error("hpam: counters do not sum to corpus tokens");
  for (std::size_t k = 0; k < k_count; ++k) {
    if (inv_topic_[k] != 1.0 / (static_cast<double>(topic_total_[k]) + word_smoothing_total_))
      throw std::logic_error("hpam: stale topic inverse");
  }
  for (std::size_t d = 0; d < corpus_.num_documents(); ++d)
    for (std::size_t x = 1; x <= t1; ++x)
      if (inv_super_[d * t1 + (x - 1)] !=
          1.0 / (doc_super_[d * (t1 + 1) + x] + alpha_sub_sum_[x - 1]))
        throw std::logic_error("hpam: stale super inverse");
}

TopicWordMatrix HpamSampler::phi_full() const {
  return estimate_phi_hpam(word_topic_, topic_total_, corpus_.vocab_size(), config_.eta);
}

void HpamSampler::fill_theta(std::size_t d, std::span<double> out) const {
  const std::size_t t1 = config_.super_topics;
  const std::size_t t2 = config_.sub_topics;
  std::fill(out.begin(), out.end(), 0.0);
  const std::int32_t* a = &doc_super_[d * (t1 + 1)];
  const std::int32_t* b = &doc_sub_[d * t1 * (t2 + 1)];
  const double alpha0_sum = std::accumulate(alpha0_.begin(), alpha0_.end(), 0.0);
  const double a_norm = 1.0 / (static_cast<double>(corpus_.documents[d].tokens.size()) + alpha0_sum);
  out[0] = (a[0] + alpha0_[0]) * a_norm;
  for (std::size_t x = 1; x <= t1; ++x) {
    const std::size_t off = (x - 1) * (t2 + 1);
    const double px = (a[x] + alpha0_[x]) * a_norm;
    const double b_norm = 1.0 / (a[x] + alpha_sub_sum_[x - 1]);
    out[x] += px * (b[off] + alpha_sub_[off]) * b_norm;
    for (std::size_t y = 1; y <= t2; ++y)
      out[t1 + y] += px * (b[off + y] + alpha_sub_[off + y]) * b_norm;
  }
}

DocTopicMatrix HpamSampler::theta() const {
  const std::size_t k_count = config_.flat_topics();
  const std::size_t d_count = corpus_.num_documents();
  DocTopicMatrix theta(k_count, d_count);
  std::vector<double> column(k_count);
  for (std::size_t d = 0; d < d_count; ++d) {
    fill_theta(d, column);
    for (std::size_t k = 0; k < k_count; ++k) theta.at(k, d) = column[k];
  }
  return theta;
}

double HpamSampler::token_log_likelihood() const {
  const std::size_t k_count = config_.flat_topics();
  const TopicWordMatrix phi = phi_full();
  std::vector<double> column(k_count);
  double ll = 0.0;
  for (std::size_t d = 0; d < corpus_.num_documents(); ++d) {
    fill_theta(d, column);
    for (const std::uint32_t w : corpus_.documents[d].tokens) {
      const auto row = phi.probs.row(w);
      double p = 0.0;
      for (std::size_t k = 0; k < k_count; ++k) p += column[k] * row[k];
      ll += std::log(p);
    }
  }
  return ll;
}

std::span<const std::int32_t> HpamSampler::doc_super_row(std::size_t d) const {
  const std::size_t width = config_.super_topics + 1;
  return {doc_super_.data() + d * width, width};
}

std::span<const std::int32_t> HpamSampler::doc_sub_row(std::size_t d) const {
  const std::size_t width = config_.super_topics * (config_.sub_topics + 1);
  return {doc_sub_.data() + d * width, width};
}

std::span<const std::int32_t> HpamSampler::word_topic_row(std::uint32_t w) const {
  const std::size_t width = config_.flat_topics();
  return {word_topic_.data() + w * width, width};
}

HpamResult hpam_train(const Corpus& corpus, const HpamConfig& config) {
  HpamSampler sampler(corpus, config);
  sampler.run();
  HpamResult result;
  result.phi_full = sampler.phi_full();
  result.phi_level2 = result.phi_full.column_block(1, config.super_topics);
  result.phi_level3 = result.phi_full.column_block(1 + config.super_topics, config.sub_topics);
  result.theta = sampler.theta();
  result.ll_trace = sampler.ll_trace();
  result.alpha0 = sampler.alpha0();
  result.alpha_sub = sampler.alpha_sub();
  return result;
}

std::string hpam_k_map_comment(std::size_t t1, std::size_t t2) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "k=0 root (level 1) | k=1..%zu level-2 super topics | k=%zu..%zu level-3 sub topics",
                t1, t1 + 1, t1 + t2);
  return buf;
}

}  // namespace hiertopics
