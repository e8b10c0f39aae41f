#include "hiertopics/hartm.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "hiertopics/errors.hpp"
#include "hiertopics/rng.hpp"
#include "json.hpp"

namespace hiertopics {

FlatModelConfig HartmConfig::default_em() {
  FlatModelConfig config;
  config.iterations = 200;
  config.burn_in = 0;  // unused by EM
  return config;
}

void HartmConfig::validate() const {
  if (level_topics.empty()) throw std::invalid_argument("hartm: level_topics is empty");
  for (std::size_t l = 0; l < level_topics.size(); ++l) {
    if (level_topics[l] < 1) throw std::invalid_argument("hartm: level topic count must be >= 1");
    if (l > 0 && level_topics[l] <= level_topics[l - 1])
      throw std::invalid_argument("hartm: level topic counts must strictly increase");
  }
  if (!(tau_link >= 0.0) || !std::isfinite(tau_link))
    throw std::invalid_argument("hartm: tau_link must be finite and >= 0");
  for (std::size_t l = 0; l < level_topics.size(); ++l) level_config(l).validate();
}

FlatModelConfig HartmConfig::level_config(std::size_t level) const {
  FlatModelConfig config = em;
  config.topics = level_topics.at(level);
  config.seed = level == 0 ? seed : mix64(seed + 0x9e3779b97f4a7c15ull * level);
  return config;
}

std::vector<double> expected_topic_mass(const DocTopicMatrix& theta, const Corpus& corpus) {
  if (theta.docs != corpus.num_documents())
    throw std::invalid_argument("expected_topic_mass: document count mismatch");
  std::vector<double> mass(theta.topics, 0.0);
  for (std::size_t d = 0; d < theta.docs; ++d) {
    const auto n_d = static_cast<double>(corpus.documents[d].tokens.size());
    for (std::size_t t = 0; t < theta.topics; ++t) mass[t] += n_d * theta.at(t, d);
  }
  return mass;
}

std::vector<PseudoDocument> parent_pseudo_documents(const TopicWordMatrix& phi,
                                                    const std::vector<double>& parent_mass,
                                                    double tau_link,
                                                    std::vector<std::size_t>& kept) {
  if (parent_mass.size() != phi.topics)
    throw std::invalid_argument("parent_pseudo_documents: mass length mismatch");
  kept.clear();
  std::vector<PseudoDocument> pseudo;
  for (std::size_t p = 0; p < phi.topics; ++p) {
    if (!(parent_mass[p] > kParentMassEpsilon)) continue;
    PseudoDocument doc;
    doc.term_weights.reserve(phi.vocab);
    const double scale = tau_link * parent_mass[p];
    for (std::uint32_t w = 0; w < phi.vocab; ++w) {
      const double weight = scale * phi.at(w, p);
      if (weight > 0.0) doc.term_weights.emplace_back(w, weight);
    }
    for (const auto& [w, weight] : doc.term_weights) doc.total += weight;
    if (doc.total <= 0.0) continue;
    kept.push_back(p);
    pseudo.push_back(std::move(doc));
  }
  return pseudo;
}

std::vector<double> reconstruction_errors(const TopicWordMatrix& phi_parent,
                                          const TopicWordMatrix& phi_child, const Matrix& psi) {
  if (psi.rows() != phi_child.topics || psi.cols() != phi_parent.topics)
    throw std::invalid_argument("reconstruction_errors: psi shape mismatch");
  if (phi_parent.vocab != phi_child.vocab)
    throw std::invalid_argument("reconstruction_errors: vocab mismatch");
  std::vector<double> errors(phi_parent.topics, 0.0);
  for (std::size_t p = 0; p < phi_parent.topics; ++p) {
    for (std::size_t w = 0; w < phi_parent.vocab; ++w) {
      double rebuilt = 0.0;
      for (std::size_t s = 0; s < phi_child.topics; ++s)
        rebuilt += phi_child.at(w, s) * psi.at(s, p);
      errors[p] += std::abs(phi_parent.at(w, p) - rebuilt);
    }
  }
  return errors;
}

HartmResult hartm_train(const Corpus& corpus, const HartmConfig& config) {
  config.validate();
  corpus.validate();
  HartmResult result;
  for (std::size_t l = 0; l < config.level_topics.size(); ++l) {
    std::vector<PseudoDocument> pseudo;
    std::vector<std::size_t> kept;
    const bool tied = l > 0 && config.tau_link > 0.0;
    if (tied) {
      const HartmLevel& parent = result.levels[l - 1];
      const auto mass = expected_topic_mass(parent.theta, corpus);
      pseudo = parent_pseudo_documents(parent.phi, mass, config.tau_link, kept);
      for (std::size_t p = 0; p < mass.size(); ++p) {
        if (mass[p] > kParentMassEpsilon) continue;
        char buf[96];
        std::snprintf(buf, sizeof buf, "level %zu parent %zu has no token mass; psi column uniform",
                      l, p);
        result.warnings.emplace_back(buf);
      }
    }
    const EmResult em = em_train(corpus, config.level_config(l), pseudo);
    HartmLevel level;
    level.phi = em.phi;
    level.theta = em.theta;
    level.ll_trace = em.ll_trace;
    level.iterations_run = em.iterations_run;
    level.reseeded_columns = em.reseeded_columns;
    if (l > 0) {
      HartmLevel& parent = result.levels[l - 1];
      const std::size_t parents = parent.phi.topics;
      const std::size_t children = level.phi.topics;
      parent.psi = Matrix(children, parents, 1.0 / static_cast<double>(children));
      parent.psi_uniform_fallback = !tied;
      if (tied) {
        std::vector<bool> filled(parents, false);
        for (std::size_t i = 0; i < kept.size(); ++i) {
          double total = 0.0;
          for (std::size_t s = 0; s < children; ++s) total += em.pseudo_theta.at(s, i);
          if (total <= 0.0) continue;
          for (std::size_t s = 0; s < children; ++s)
            parent.psi.at(s, kept[i]) = em.pseudo_theta.at(s, i) / total;
          filled[kept[i]] = true;
        }
        for (std::size_t p = 0; p < parents; ++p)
          if (!filled[p]) parent.degenerate_parents.push_back(p);
      }
      parent.reconstruction_error = reconstruction_errors(parent.phi, level.phi, parent.psi);
    }
    result.levels.push_back(std::move(level));
  }
  return result;
}

std::vector<LevelEntropyReport> hartm_level_entropy(const HartmResult& result) {
  std::vector<LevelEntropyReport> reports;
  reports.reserve(result.levels.size());
  for (std::size_t l = 0; l < result.levels.size(); ++l)
    reports.push_back(renyi_entropy(result.levels[l].phi, static_cast<int>(l + 1)));
  return reports;
}

void write_psi_csv(const Matrix& psi, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write psi file: " + path.string());
  out << "child,parent,prob\n";
  char buf[96];
  for (std::size_t s = 0; s < psi.rows(); ++s)
    for (std::size_t p = 0; p < psi.cols(); ++p) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.9g\n", s, p, psi.at(s, p));
      out << buf;
    }
}

void write_hierarchy_json(const HartmResult& result, const std::filesystem::path& path) {
  nlohmann::json j;
  j["levels"] = nlohmann::json::array();
  for (std::size_t l = 0; l + 1 < result.levels.size(); ++l) {
    const HartmLevel& parent = result.levels[l];
    nlohmann::json tie;
    tie["parent_level"] = l + 1;
    tie["child_level"] = l + 2;
    tie["uniform_fallback"] = parent.psi_uniform_fallback;
    tie["degenerate_parents"] = parent.degenerate_parents;
    tie["children"] = nlohmann::json::array();
    for (std::size_t s = 0; s < parent.psi.rows(); ++s) {
      std::size_t best = 0;
      for (std::size_t p = 1; p < parent.psi.cols(); ++p)
        if (parent.psi.at(s, p) > parent.psi.at(s, best)) best = p;
      tie["children"].push_back(
          {{"child", s}, {"parent", best}, {"prob", parent.psi.at(s, best)}});
    }
    j["levels"].push_back(std::move(tie));
  }
  if (!result.warnings.empty()) j["warnings"] = result.warnings;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write hierarchy file: " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace hiertopics
