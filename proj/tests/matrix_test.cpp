#include "hiertopics/matrix.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "doctest.h"

using hiertopics::DocTopicMatrix;
using hiertopics::Matrix;
using hiertopics::TopicWordMatrix;

namespace {

TopicWordMatrix make_phi() {
  TopicWordMatrix phi(4, 2);
  const double col0[] = {0.7, 0.1, 0.1, 0.1};
  const double col1[] = {0.1, 0.7, 0.1, 0.1};
  for (std::size_t w = 0; w < 4; ++w) {
    phi.at(w, 0) = col0[w];
    phi.at(w, 1) = col1[w];
  }
  return phi;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("column helpers") {
  Matrix m(2, 3);
  m.at(0, 1) = 2.0;
  m.at(1, 1) = 3.0;
  CHECK(m.column_sum(1) == 5.0);
  CHECK(m.column_sum(0) == 0.0);
  m.scale_column(1, 0.5);
  CHECK(m.at(0, 1) == 1.0);
  CHECK(m.at(1, 1) == 1.5);
}

TEST_CASE("topic-word validation enforces stochastic non-negative columns") {
  TopicWordMatrix phi = make_phi();
  CHECK_NOTHROW(phi.validate());

  TopicWordMatrix bad_sum = make_phi();
  bad_sum.at(0, 0) = 0.8;
  CHECK_THROWS_AS(bad_sum.validate(), std::invalid_argument);

  TopicWordMatrix negative = make_phi();
  negative.at(0, 0) = 1.1;
  negative.at(1, 0) = -0.3;
  CHECK_THROWS_AS(negative.validate(), std::invalid_argument);
}

TEST_CASE("top_words orders by probability with ties toward smaller id") {
  TopicWordMatrix phi(5, 1);
  phi.at(0, 0) = 0.2;
  phi.at(1, 0) = 0.3;
  phi.at(2, 0) = 0.2;
  phi.at(3, 0) = 0.25;
  phi.at(4, 0) = 0.05;
  auto top = phi.top_words(0, 4);
  REQUIRE(top.size() == 4);
  CHECK(top[0] == 1);
  CHECK(top[1] == 3);
  CHECK(top[2] == 0);  // ties 0.2 vs 0.2: smaller id first
  CHECK(top[3] == 2);
}

TEST_CASE("column_block slices standalone matrices") {
  TopicWordMatrix phi = make_phi();
  auto block = phi.column_block(1, 1);
  CHECK(block.vocab == 4);
  CHECK(block.topics == 1);
  CHECK(block.at(1, 0) == 0.7);
}

TEST_CASE("matrix text round-trip preserves values") {
  Matrix m(3, 2);
  double v = 0.0123456789;
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 2; ++c) {
      m.at(r, c) = v;
      v *= 3.7;
    }
  }
  auto path = temp_file("hiertopics_matrix_test.txt");
  hiertopics::write_matrix(m, path, "test matrix");
  Matrix back = hiertopics::read_matrix(path);
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 2);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(std::abs(back.at(r, c) - m.at(r, c)) <= 1e-9 * std::abs(m.at(r, c)));
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("phi and theta files round-trip with dimensions") {
  TopicWordMatrix phi = make_phi();
  auto phi_path = temp_file("hiertopics_phi_test.txt");
  hiertopics::write_phi(phi, phi_path);
  TopicWordMatrix phi_back = hiertopics::read_phi(phi_path);
  CHECK(phi_back.vocab == 4);
  CHECK(phi_back.topics == 2);
  CHECK_NOTHROW(phi_back.validate());
  std::filesystem::remove(phi_path);

  DocTopicMatrix theta(2, 3);
  for (std::size_t d = 0; d < 3; ++d) {
    theta.at(0, d) = 0.25;
    theta.at(1, d) = 0.75;
  }
  auto theta_path = temp_file("hiertopics_theta_test.txt");
  hiertopics::write_theta(theta, theta_path);
  DocTopicMatrix theta_back = hiertopics::read_theta(theta_path);
  CHECK(theta_back.topics == 2);
  CHECK(theta_back.docs == 3);
  CHECK(theta_back.at(1, 2) == 0.75);
  std::filesystem::remove(theta_path);
}
