#include "hiertopics/hlda.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "hiertopics/errors.hpp"
#include "json.hpp"

namespace hiertopics {

void HldaConfig::validate() const {
  if (depth < 2) throw std::invalid_argument("hlda config: depth >= 2 required");
  if (gamma <= 0.0) throw std::invalid_argument("hlda config: gamma must be positive");
  if (eta <= 0.0) throw std::invalid_argument("hlda config: eta must be positive");
  if (alpha <= 0.0) throw std::invalid_argument("hlda config: alpha must be positive");
  if (iterations < 1) throw std::invalid_argument("hlda config: iterations >= 1 required");
}

std::vector<double> ncrp_table_probabilities(std::span<const int> m_counts, double gamma) {
  double occupied = 0.0;
  for (int m : m_counts) occupied += static_cast<double>(m);
  // With the incoming customer counted in m, the denominator gamma + m - 1
  // equals gamma + (existing customers).
  const double denom = gamma + occupied;
  std::vector<double> probs(m_counts.size() + 1);
  for (std::size_t i = 0; i < m_counts.size(); ++i) {
    probs[i] = static_cast<double>(m_counts[i]) / denom;
  }
  probs.back() = gamma / denom;
  return probs;
}

NcrpTree::NcrpTree(std::size_t vocab, int depth) : vocab_(vocab), depth_(depth) {
  NcrpNode root;
  root.id = kRootId;
  root.parent = -1;
  root.depth = 0;
  root.word_counts.assign(vocab, 0);
  nodes_.emplace(kRootId, std::move(root));
}

int NcrpTree::create_child(int parent_id) {
  auto& parent = nodes_.at(parent_id);
  if (parent.depth + 1 >= depth_) throw std::logic_error("ncrp: cannot grow below leaf depth");
  NcrpNode child;
  child.id = next_id_++;
  child.parent = parent_id;
  child.depth = parent.depth + 1;
  child.word_counts.assign(vocab_, 0);
  parent.children.push_back(child.id);
  const int id = child.id;
  nodes_.emplace(id, std::move(child));
  return id;
}

void NcrpTree::prune_upward(int id) {
  while (id != kRootId) {
    auto it = nodes_.find(id);
    if (it == nodes_.end() || it->second.customers > 0) return;
    if (!it->second.children.empty()) {
      throw std::logic_error("ncrp: zero-customer node still has children");
    }
    const int parent = it->second.parent;
    auto& siblings = nodes_.at(parent).children;
    siblings.erase(std::find(siblings.begin(), siblings.end(), id));
    nodes_.erase(it);
    id = parent;
  }
}

std::vector<PathCandidate> NcrpTree::path_candidates() const {
  std::vector<PathCandidate> out;
  std::vector<int> trail;
  auto dfs = [&](auto&& self, int id) -> void {
    trail.push_back(id);
    const auto& n = nodes_.at(id);
    out.push_back({trail});  // full path at a leaf, new-branch option otherwise
    if (n.depth < depth_ - 1) {
      for (int child : n.children) self(self, child);
    }
    trail.pop_back();
  };
  dfs(dfs, kRootId);
  return out;
}

std::vector<int> NcrpTree::nodes_at_depth(int depth) const {
  std::vector<int> out;
  for (const auto& [id, n] : nodes_) {
    if (n.depth == depth) out.push_back(id);
  }
  return out;
}

void NcrpTree::validate(std::size_t expected_docs) const {
  if (!contains(kRootId)) throw std::logic_error("ncrp: missing root");
  if (nodes_.at(kRootId).customers != static_cast<int>(expected_docs)) {
    throw std::logic_error("ncrp: root customers != document count");
  }
  std::int64_t leaf_mass = 0;
  for (const auto& [id, n] : nodes_) {
    if (id != kRootId && n.customers <= 0) throw std::logic_error("ncrp: unpruned empty node");
    std::int64_t words = 0;
    for (auto c : n.word_counts) {
      if (c < 0) throw std::logic_error("ncrp: negative word counter");
      words += c;
    }
    if (words != n.total) throw std::logic_error("ncrp: word counters do not match total");
    if (n.depth == depth_ - 1) {
      if (!n.children.empty()) throw std::logic_error("ncrp: leaf with children");
      leaf_mass += n.customers;
    } else {
      int child_sum = 0;
      for (int child : n.children) {
        const auto& c = nodes_.at(child);
        if (c.parent != id || c.depth != n.depth + 1) {
          throw std::logic_error("ncrp: broken child linkage");
        }
        child_sum += c.customers;
      }
      if (child_sum != n.customers) {
        throw std::logic_error("ncrp: children customers do not sum to parent");
      }
    }
  }
  if (leaf_mass != static_cast<std::int64_t>(expected_docs)) {
    throw std::logic_error("ncrp: leaf customer mass != document count");
  }
}

void hlda_level_weights(std::span<const std::int32_t> doc_level_counts,
                        std::span<const std::int32_t> word_counts_at_levels,
                        std::span<const std::int64_t> node_totals, double alpha, double eta,
                        std::size_t vocab, std::span<double> out) {
  const double w_eta = static_cast<double>(vocab) * eta;
  for (std::size_t l = 0; l < out.size(); ++l) {
    out[l] = (doc_level_counts[l] + alpha) * (word_counts_at_levels[l] + eta) /
             (static_cast<double>(node_totals[l]) + w_eta);
  }
}

double log_level_word_score(std::span<const std::int32_t> node_counts, std::int64_t node_total,
                            std::span<const std::pair<std::uint32_t, std::int32_t>> doc_counts,
                            LgammaOffsetTable& lg_word, LgammaOffsetTable& lg_total) {
  double score = 0.0;
  std::int64_t added = 0;
  for (const auto& [w, c] : doc_counts) {
    const std::int32_t b = node_counts.empty() ? 0 : node_counts[w];
    score += lg_word(b + c) - lg_word(b);
    added += c;
  }
  score -= lg_total(node_total + added) - lg_total(node_total);
  return score;
}

std::vector<double> estimate_phi_hlda(std::span<const std::int32_t> counts, double eta) {
  if (counts.empty()) throw std::invalid_argument("estimate_phi: empty counter vector");
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  const double denom = total + eta * static_cast<double>(counts.size());
  std::vector<double> phi(counts.size());
  for (std::size_t w = 0; w < counts.size(); ++w) {
    phi[w] = (static_cast<double>(counts[w]) + eta) / denom;
  }
  return phi;
}

HldaSampler::HldaSampler(const Corpus& corpus, const HldaConfig& config)
    : corpus_(corpus),
      config_(config),
      rng_(config.seed),
      tree_(corpus.vocab_size(), config.depth),
      lg_word_(config.eta),
      lg_total_(static_cast<double>(corpus.vocab_size()) * config.eta) {
  config_.validate();
  doc_offsets_.reserve(corpus.num_documents() + 1);
  std::size_t offset = 0;
  for (const auto& doc : corpus.documents) {
    doc_offsets_.push_back(offset);
    offset += doc.length();
  }
  doc_offsets_.push_back(offset);
  z_.resize(offset);
  paths_.assign(corpus.num_documents(), std::vector<int>(config.depth, -1));
  level_doc_.assign(corpus.num_documents() * static_cast<std::size_t>(config.depth), 0);
}

void HldaSampler::initialize() {
  const auto levels = static_cast<std::size_t>(config_.depth);
  tree_ = NcrpTree(corpus_.vocab_size(), config_.depth);
  std::fill(level_doc_.begin(), level_doc_.end(), 0);
  trace_.clear();

  std::vector<int> m_counts;
  for (std::size_t d = 0; d < corpus_.num_documents(); ++d) {
    auto& path = paths_[d];
    path[0] = NcrpTree::kRootId;
    for (std::size_t q = 1; q < levels; ++q) {
      const auto& children = tree_.node(path[q - 1]).children;
      m_counts.clear();
      for (int child : children) m_counts.push_back(tree_.node(child).customers);
      auto probs = ncrp_table_probabilities(m_counts, config_.gamma);
      const std::size_t pick = rng_.categorical(probs);
      path[q] = pick < children.size() ? children[pick] : tree_.create_child(path[q - 1]);
    }
    for (std::size_t q = 0; q < levels; ++q) ++tree_.node(path[q]).customers;

    const auto& doc = corpus_.documents[d];
    for (std::size_t i = 0; i < doc.length(); ++i) {
      const auto l = static_cast<std::uint8_t>(rng_.below(levels));
      z_[doc_offsets_[d] + i] = l;
      ++level_doc_[d * levels + l];
      auto& node = tree_.node(path[l]);
      ++node.word_counts[doc.tokens[i]];
      ++node.total;
    }
  }
}

void HldaSampler::z_sweep() {
  const auto levels = static_cast<std::size_t>(config_.depth);
  const double w_eta = static_cast<double>(corpus_.vocab_size()) * config_.eta;
  std::vector<NcrpNode*> nodes(levels);
  std::vector<double> weights(levels);
  for (std::size_t d = 0; d < corpus_.num_documents(); ++d) {
    for (std::size_t l = 0; l < levels; ++l) nodes[l] = &tree_.node(paths_[d][l]);
    std::int32_t* a = &level_doc_[d * levels];
    const auto& doc = corpus_.documents[d];
    for (std::size_t i = 0; i < doc.length(); ++i) {
      const std::uint32_t w = doc.tokens[i];
      const std::size_t pos = doc_offsets_[d] + i;
      const std::uint8_t old = z_[pos];
      --a[old];
      --nodes[old]->word_counts[w];
      --nodes[old]->total;
      for (std::size_t l = 0; l < levels; ++l) {
        weights[l] = (a[l] + config_.alpha) * (nodes[l]->word_counts[w] + config_.eta) /
                     (static_cast<double>(nodes[l]->total) + w_eta);
      }
      const auto next = static_cast<std::uint8_t>(rng_.categorical(weights));
      z_[pos] = next;
      ++a[next];
      ++nodes[next]->word_counts[w];
      ++nodes[next]->total;
    }
  }
}

void HldaSampler::collect_level_counts(std::size_t d, std::vector<LevelCounts>& cnt) const {
  const auto levels = static_cast<std::size_t>(config_.depth);
  std::vector<std::map<std::uint32_t, std::int32_t>> maps(levels);
  const auto& doc = corpus_.documents[d];
  for (std::size_t i = 0; i < doc.length(); ++i) {
    ++maps[z_[doc_offsets_[d] + i]][doc.tokens[i]];
  }
  cnt.assign(levels, {});
  for (std::size_t l = 0; l < levels; ++l) {
    cnt[l].assign(maps[l].begin(), maps[l].end());
  }
}

void HldaSampler::remove_document(std::size_t d, const std::vector<LevelCounts>& cnt) {
  const auto levels = static_cast<std::size_t>(config_.depth);
  for (std::size_t l = 0; l < levels; ++l) {
    auto& node = tree_.node(paths_[d][l]);
    --node.customers;
    for (const auto& [w, c] : cnt[l]) {
      node.word_counts[w] -= c;
      node.total -= c;
    }
  }
  tree_.prune_upward(paths_[d][levels - 1]);
}

void HldaSampler::add_document(std::size_t d, const std::vector<int>& path,
                               const std::vector<LevelCounts>& cnt) {
  const auto levels = static_cast<std::size_t>(config_.depth);
  for (std::size_t l = 0; l < levels; ++l) {
    auto& node = tree_.node(path[l]);
    ++node.customers;
    for (const auto& [w, c] : cnt[l]) {
      node.word_counts[w] += c;
      node.total += c;
    }
  }
  paths_[d] = path;
}

double HldaSampler::score_candidate(const PathCandidate& cand,
                                    const std::vector<LevelCounts>& cnt,
                                    std::span<const double> fresh_scores,
                                    std::map<int, double>& node_score_cache) {
  const auto levels = static_cast<std::size_t>(config_.depth);
  double log_prior = 0.0;
  double log_lik = 0.0;
  for (std::size_t q = 0; q < cand.nodes.size(); ++q) {
    const auto& n = tree_.node(cand.nodes[q]);
    auto it = node_score_cache.find(n.id);
    if (it == node_score_cache.end()) {
      const double s = log_level_word_score(n.word_counts, n.total, cnt[q], lg_word_, lg_total_);
      it = node_score_cache.emplace(n.id, s).first;
    }
    log_lik += it->second;

    if (q + 1 < levels) {
      const double denom = config_.gamma + static_cast<double>(n.customers);
      if (q + 1 < cand.nodes.size()) {
        log_prior += std::log(static_cast<double>(tree_.node(cand.nodes[q + 1]).customers) / denom);
      } else {
        // Branch point: new table here; fresh tables below are chosen with
        // probability 1.
        log_prior += std::log(config_.gamma / denom);
      }
    }
  }
  for (std::size_t q = cand.nodes.size(); q < levels; ++q) log_lik += fresh_scores[q];
  return log_prior + log_lik;
}

void HldaSampler::resample_path(std::size_t d) {
  const auto levels = static_cast<std::size_t>(config_.depth);
  std::vector<LevelCounts> cnt;
  collect_level_counts(d, cnt);
  remove_document(d, cnt);

  std::vector<double> fresh(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    fresh[l] = log_level_word_score({}, 0, cnt[l], lg_word_, lg_total_);
  }

  const auto candidates = tree_.path_candidates();
  std::vector<double> scores(candidates.size());
  std::map<int, double> cache;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    scores[i] = score_candidate(candidates[i], cnt, fresh, cache);
  }
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> weights(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) weights[i] = std::exp(scores[i] - top);
  const std::size_t pick = rng_.categorical(weights);

  std::vector<int> path = candidates[pick].nodes;
  while (path.size() < levels) path.push_back(tree_.create_child(path.back()));
  add_document(d, path, cnt);
}

void HldaSampler::c_sweep() {
  for (std::size_t d = 0; d < corpus_.num_documents(); ++d) resample_path(d);
}

void HldaSampler::run() {
  initialize();
  for (std::size_t iter = 0; iter < config_.iterations; ++iter) {
    z_sweep();
    c_sweep();
    trace_.push_back(token_log_likelihood());
  }
}

double HldaSampler::token_log_likelihood() const {
  const auto levels = static_cast<std::size_t>(config_.depth);
  const double w_eta = static_cast<double>(corpus_.vocab_size()) * config_.eta;
  double ll = 0.0;
  std::vector<const NcrpNode*> nodes(levels);
  for (std::size_t d = 0; d < corpus_.num_documents(); ++d) {
    for (std::size_t l = 0; l < levels; ++l) nodes[l] = &tree_.node(paths_[d][l]);
    const auto& doc = corpus_.documents[d];
    const double denom_theta = static_cast<double>(doc.length()) +
                               static_cast<double>(levels) * config_.alpha;
    for (std::size_t i = 0; i < doc.length(); ++i) {
      const std::uint32_t w = doc.tokens[i];
      double p = 0.0;
      for (std::size_t l = 0; l < levels; ++l) {
        const double theta = (level_doc_[d * levels + l] + config_.alpha) / denom_theta;
        const double phi = (nodes[l]->word_counts[w] + config_.eta) /
                           (static_cast<double>(nodes[l]->total) + w_eta);
        p += theta * phi;
      }
      ll += std::log(p);
    }
  }
  return ll;
}

void HldaSampler::validate_state() const {
  const auto levels = static_cast<std::size_t>(config_.depth);
  tree_.validate(corpus_.num_documents());

  std::map<int, std::vector<std::int32_t>> words;
  std::map<int, int> customers;
  for (std::size_t d = 0; d < corpus_.num_documents(); ++d) {
    std::vector<std::int32_t> a(levels, 0);
    for (std::size_t l = 0; l < levels; ++l) {
      const int id = paths_[d][l];
      if (!tree_.contains(id)) throw std::logic_error("hlda: path references missing node");
      if (tree_.node(id).depth != static_cast<int>(l)) {
        throw std::logic_error("hlda: path node at wrong depth");
      }
      ++customers[id];
      words.try_emplace(id, std::vector<std::int32_t>(corpus_.vocab_size(), 0));
    }
    const auto& doc = corpus_.documents[d];
    for (std::size_t i = 0; i < doc.length(); ++i) {
      const std::uint8_t l = z_[doc_offsets_[d] + i];
      if (l >= levels) throw std::logic_error("hlda: level assignment out of range");
      ++a[l];
      ++words.at(paths_[d][l])[doc.tokens[i]];
    }
    for (std::size_t l = 0; l < levels; ++l) {
      if (a[l] != level_doc_[d * levels + l]) {
        throw std::logic_error("hlda: per-doc level counters drifted");
      }
    }
  }
  for (const auto& [id, n] : tree_.nodes()) {
    const int expected_customers = id == NcrpTree::kRootId && !customers.count(id)
                                       ? 0
                                       : customers[id];
    if (n.customers != expected_customers) {
      throw std::logic_error("hlda: customer counter drifted");
    }
    auto it = words.find(id);
    for (std::size_t w = 0; w < corpus_.vocab_size(); ++w) {
      const std::int32_t expected = it == words.end() ? 0 : it->second[w];
      if (n.word_counts[w] != expected) {
        throw std::logic_error("hlda: word counter drifted");
      }
    }
  }
}

std::vector<std::size_t> HldaSampler::level_topics() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(config_.depth));
  for (int l = 0; l < config_.depth; ++l) {
    counts[static_cast<std::size_t>(l)] = tree_.nodes_at_depth(l).size();
  }
  return counts;
}

std::vector<TopicWordMatrix> HldaSampler::level_phi() const {
  std::vector<TopicWordMatrix> out;
  for (int l = 0; l < config_.depth; ++l) {
    const auto ids = tree_.nodes_at_depth(l);
    TopicWordMatrix phi(corpus_.vocab_size(), ids.size());
    for (std::size_t t = 0; t < ids.size(); ++t) {
      const auto column = estimate_phi_hlda(tree_.node(ids[t]).word_counts, config_.eta);
      for (std::size_t w = 0; w < column.size(); ++w) phi.at(w, t) = column[w];
    }
    out.push_back(std::move(phi));
  }
  return out;
}

HldaResult hlda_train(const Corpus& corpus, const HldaConfig& config) {
  HldaSampler sampler(corpus, config);
  sampler.run();
  HldaResult result;
  result.tree = sampler.tree();
  result.level_phi = sampler.level_phi();
  result.level_topics = sampler.level_topics();
  result.ll_trace = sampler.ll_trace();
  return result;
}

void write_tree_json(const HldaResult& result, const Vocabulary& vocabulary, double eta,
                     const std::filesystem::path& path) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [id, n] : result.tree.nodes()) {
    const auto column = estimate_phi_hlda(n.word_counts, eta);
    std::vector<std::uint32_t> order(column.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t take = std::min<std::size_t>(15, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                      order.end(), [&](std::uint32_t a, std::uint32_t b) {
                        if (column[a] != column[b]) return column[a] > column[b];
                        return a < b;
                      });
    nlohmann::json words = nlohmann::json::array();
    for (std::size_t i = 0; i < take; ++i) words.push_back(vocabulary.terms[order[i]]);
    nodes.push_back({{"id", n.id},
                     {"parent", n.parent},
                     {"level", n.depth + 1},
                     {"customers", n.customers},
                     {"top_words", words}});
  }
  nlohmann::json j = {{"depth", result.tree.depth()}, {"nodes", nodes}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write tree file: " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace hiertopics
