#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "hiertopics/corpus.hpp"
#include "hiertopics/hartm.hpp"
#include "json.hpp"

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

// Maps a trained topic to the planted block with the largest probability mass.
int best_block(const hiertopics::TopicWordMatrix& phi, std::size_t t,
               const hiertopics::PlantedHierarchy& planted, bool children) {
  const int count = children ? planted.num_children() : planted.num_parents();
  int best = 0;
  double best_mass = -1.0;
  for (int b = 0; b < count; ++b) {
    const auto [lo, hi] = children ? planted.child_block(b) : planted.parent_block(b);
    double mass = 0.0;
    for (std::uint32_t w = lo; w < hi; ++w) mass += phi.at(w, t);
    if (mass > best_mass) {
      best_mass = mass;
      best = b;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("hartm config validates ordering and resolves per level settings") {
  hiertopics::HartmConfig config;
  config.level_topics = {3, 9};
  config.seed = 77;
  CHECK_NOTHROW(config.validate());
  CHECK(config.level_config(0).topics == 3);
  CHECK(config.level_config(0).seed == 77);
  CHECK(config.level_config(1).topics == 9);
  CHECK(config.level_config(1).seed != 77);
  CHECK(config.em.iterations == 200);

  auto bad = config;
  bad.level_topics = {};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = config;
  bad.level_topics = {5, 5};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = config;
  bad.level_topics = {9, 3};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = config;
  bad.tau_link = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("expected topic mass weights theta columns by document length") {
  hiertopics::Corpus corpus;
  corpus.vocabulary.terms = {"a"};
  corpus.documents.resize(2);
  corpus.documents[0].tokens = {0, 0, 0};
  corpus.documents[1].tokens = {0, 0, 0, 0, 0};
  corpus.total_tokens = 8;
  hiertopics::DocTopicMatrix theta(2, 2);
  theta.at(0, 0) = 0.5;
  theta.at(1, 0) = 0.5;
  theta.at(0, 1) = 0.2;
  theta.at(1, 1) = 0.8;
  const auto mass = hiertopics::expected_topic_mass(theta, corpus);
  CHECK(std::abs(mass[0] - 2.5) < 1e-12);
  CHECK(std::abs(mass[1] - 5.5) < 1e-12);
}

TEST_CASE("pseudo documents carry tau scaled parent mass and skip empty parents") {
  hiertopics::TopicWordMatrix phi(3, 2);
  phi.at(0, 0) = 0.5;
  phi.at(1, 0) = 0.25;
  phi.at(2, 0) = 0.25;
  phi.at(0, 1) = 1.0;
  std::vector<std::size_t> kept;
  const auto pseudo =
      hiertopics::parent_pseudo_documents(phi, {2.0, 0.0}, 0.5, kept);
  REQUIRE(pseudo.size() == 1);
  CHECK(kept == std::vector<std::size_t>{0});
  CHECK(pseudo[0].term_weights.size() == 3);
  CHECK(std::abs(pseudo[0].term_weights[0].second - 0.5) < 1e-12);
  CHECK(std::abs(pseudo[0].term_weights[1].second - 0.25) < 1e-12);
  CHECK(std::abs(pseudo[0].total - 1.0) < 1e-12);
}

TEST_CASE("a single level run is exactly the flat em trainer") {
  hiertopics::SyntheticSpec spec{2, 2, 0.4};
  auto [corpus, planted] = hiertopics::generate_synthetic(spec, 60, 30, 300, 0.1, 5);
  hiertopics::HartmConfig config;
  config.level_topics = {4};
  config.seed = 19;
  config.em.iterations = 50;
  const auto result = hiertopics::hartm_train(corpus, config);
  REQUIRE(result.levels.size() == 1);
  const auto em = hiertopics::em_train(corpus, config.level_config(0));
  CHECK(result.levels[0].phi.probs.data() == em.phi.probs.data());
  CHECK(result.levels[0].theta.probs.data() == em.theta.probs.data());
  CHECK(result.levels[0].psi.rows() == 0);
  CHECK(result.levels[0].reconstruction_error.empty());
}

TEST_CASE("tau zero trains an untied flat level and flags uniform psi") {
  hiertopics::SyntheticSpec spec{2, 2, 0.4};
  auto [corpus, planted] = hiertopics::generate_synthetic(spec, 60, 30, 300, 0.1, 6);
  hiertopics::HartmConfig config;
  config.level_topics = {2, 4};
  config.tau_link = 0.0;
  config.seed = 23;
  config.em.iterations = 50;
  const auto result = hiertopics::hartm_train(corpus, config);
  REQUIRE(result.levels.size() == 2);
  CHECK(result.levels[0].psi_uniform_fallback);
  for (std::size_t s = 0; s < 4; ++s)
    for (std::size_t p = 0; p < 2; ++p) CHECK(result.levels[0].psi.at(s, p) == 0.25);
  const auto em = hiertopics::em_train(corpus, config.level_config(1));
  CHECK(result.levels[1].phi.probs.data() == em.phi.probs.data());
  CHECK(result.levels[0].reconstruction_error.size() == 2);
}

TEST_CASE("psi columns and the reconstruction product stay stochastic") {
  hiertopics::SyntheticSpec spec{2, 2, 0.35};
  auto [corpus, planted] = hiertopics::generate_synthetic(spec, 120, 40, 400, 0.1, 9);
  hiertopics::HartmConfig config;
  config.level_topics = {2, 5};
  config.seed = 3;
  config.em.iterations = 80;
  const auto result = hiertopics::hartm_train(corpus, config);
  const auto& psi = result.levels[0].psi;
  REQUIRE(psi.rows() == 5);
  REQUIRE(psi.cols() == 2);
  for (std::size_t p = 0; p < psi.cols(); ++p) {
    CHECK(std::abs(psi.column_sum(p) - 1.0) < 1e-8);
    double product_sum = 0.0;
    for (std::size_t w = 0; w < corpus.vocab_size(); ++w)
      for (std::size_t s = 0; s < psi.rows(); ++s)
        product_sum += result.levels[1].phi.at(w, s) * psi.at(s, p);
    CHECK(std::abs(product_sum - 1.0) < 1e-8);
  }
}

TEST_CASE("interlevel links recover the planted parent of most children") {
  hiertopics::SyntheticSpec spec{3, 2, 0.4};
  auto [corpus, planted] = hiertopics::generate_synthetic(spec, 400, 80, 600, 0.05, 41);
  hiertopics::HartmConfig config;
  config.level_topics = {3, 6};
  config.tau_link = 0.5;
  config.seed = 11;
  config.em.iterations = 200;
  const auto result = hiertopics::hartm_train(corpus, config);
  const auto& parent_level = result.levels[0];
  const auto& child_level = result.levels[1];

  int correct = 0;
  for (std::size_t s = 0; s < child_level.phi.topics; ++s) {
    std::size_t argmax = 0;
    for (std::size_t p = 1; p < parent_level.phi.topics; ++p)
      if (parent_level.psi.at(s, p) > parent_level.psi.at(s, argmax)) argmax = p;
    const int planted_child = best_block(child_level.phi, s, planted, true);
    const int planted_parent = best_block(parent_level.phi, argmax, planted, false);
    if (planted.parent_of_child(planted_child) == planted_parent) ++correct;
  }
  CHECK(correct >= 5);
}

TEST_CASE("stronger tying does not worsen the reconstruction error") {
  hiertopics::SyntheticSpec spec{2, 2, 0.35};
  auto [corpus, planted] = hiertopics::generate_synthetic(spec, 150, 40, 400, 0.1, 17);
  const std::vector<double> taus{0.0, 0.25, 0.5, 1.0};
  std::vector<double> mean_errors;
  for (const double tau : taus) {
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      hiertopics::HartmConfig config;
      config.level_topics = {2, 4};
      config.tau_link = tau;
      config.seed = seed;
      config.em.iterations = 80;
      const auto result = hiertopics::hartm_train(corpus, config);
      for (const double err : result.levels[0].reconstruction_error) total += err;
    }
    mean_errors.push_back(total / (6.0 * 2.0));
  }
  for (std::size_t i = 1; i < mean_errors.size(); ++i)
    CHECK(mean_errors[i] <= mean_errors[i - 1] * 1.02);
}

TEST_CASE("hartm is deterministic per seed") {
  hiertopics::SyntheticSpec spec{2, 2, 0.4};
  auto [corpus, planted] = hiertopics::generate_synthetic(spec, 80, 30, 300, 0.1, 29);
  hiertopics::HartmConfig config;
  config.level_topics = {2, 4};
  config.seed = 31;
  config.em.iterations = 60;
  const auto first = hiertopics::hartm_train(corpus, config);
  const auto second = hiertopics::hartm_train(corpus, config);
  CHECK(first.levels[1].phi.probs.data() == second.levels[1].phi.probs.data());
  CHECK(first.levels[0].psi.data() == second.levels[0].psi.data());
  config.seed = 32;
  const auto third = hiertopics::hartm_train(corpus, config);
  CHECK(first.levels[1].phi.probs.data() != third.levels[1].phi.probs.data());
}

TEST_CASE("level entropy reports delegate to the metric per level") {
  hiertopics::SyntheticSpec spec{2, 2, 0.4};
  auto [corpus, planted] = hiertopics::generate_synthetic(spec, 80, 30, 300, 0.1, 43);
  hiertopics::HartmConfig config;
  config.level_topics = {2, 4};
  config.seed = 7;
  config.em.iterations = 60;
  const auto result = hiertopics::hartm_train(corpus, config);
  const auto reports = hiertopics::hartm_level_entropy(result);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].level == 1);
  CHECK(reports[1].level == 2);
  const auto direct = hiertopics::renyi_entropy(result.levels[1].phi, 2);
  CHECK(reports[1].renyi == direct.renyi);
  CHECK(reports[1].n == direct.n);
}

TEST_CASE("psi csv and hierarchy json round trip the link structure") {
  hiertopics::Matrix psi(2, 2);
  psi.at(0, 0) = 0.75;
  psi.at(1, 0) = 0.25;
  psi.at(0, 1) = 0.1;
  psi.at(1, 1) = 0.9;
  const auto csv_path = temp_file("hiertopics_psi_test.csv");
  hiertopics::write_psi_csv(psi, csv_path);
  std::ifstream in(csv_path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  CHECK(buffer.str() == "child,parent,prob\n0,0,0.75\n0,1,0.1\n1,0,0.25\n1,1,0.9\n");
  std::filesystem::remove(csv_path);

  hiertopics::SyntheticSpec spec{2, 2, 0.4};
  auto [corpus, planted] = hiertopics::generate_synthetic(spec, 60, 30, 300, 0.1, 47);
  hiertopics::HartmConfig config;
  config.level_topics = {2, 4};
  config.seed = 13;
  config.em.iterations = 40;
  const auto result = hiertopics::hartm_train(corpus, config);
  const auto json_path = temp_file("hiertopics_hierarchy_test.json");
  hiertopics::write_hierarchy_json(result, json_path);
  std::ifstream jin(json_path);
  nlohmann::json j;
  jin >> j;
  REQUIRE(j["levels"].size() == 1);
  CHECK(j["levels"][0]["parent_level"] == 1);
  CHECK(j["levels"][0]["child_level"] == 2);
  CHECK(j["levels"][0]["children"].size() == 4);
  for (const auto& child : j["levels"][0]["children"]) {
    const std::size_t s = child["child"];
    const std::size_t p = child["parent"];
    CHECK(result.levels[0].psi.at(s, p) == doctest::Approx(child["prob"].get<double>()));
  }
  std::filesystem::remove(json_path);
}
