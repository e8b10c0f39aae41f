#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hiertopics {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  double column_sum(std::size_t c) const;
  void scale_column(std::size_t c, double factor);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// W x T distribution of words by topics; every topic column sums to 1.
struct TopicWordMatrix {
  std::size_t vocab = 0;   // W
  std::size_t topics = 0;  // T
  Matrix probs;            // vocab rows x topics cols

  TopicWordMatrix() = default;
  TopicWordMatrix(std::size_t w, std::size_t t) : vocab(w), topics(t), probs(w, t) {}

  double at(std::size_t w, std::size_t t) const { return probs.at(w, t); }
  double& at(std::size_t w, std::size_t t) { return probs.at(w, t); }

  // Throws std::invalid_argument when a column deviates from stochasticity
  // by more than tol or an entry is negative.
  void validate(double tol = 1e-8) const;

  // Selects a contiguous block of columns as a standalone matrix.
  TopicWordMatrix column_block(std::size_t first, std::size_t count) const;

  // Term ids of the top-n entries of a column, descending probability,
  // ties broken toward the smaller id.
  std::vector<std::uint32_t> top_words(std::size_t t, std::size_t n) const;
};

// T x D distribution of topics by documents; every document column sums to 1.
struct DocTopicMatrix {
  std::size_t topics = 0;  // T
  std::size_t docs = 0;    // D
  Matrix probs;            // topics rows x docs cols

  DocTopicMatrix() = default;
  DocTopicMatrix(std::size_t t, std::size_t d) : topics(t), docs(d), probs(t, d) {}

  double at(std::size_t t, std::size_t d) const { return probs.at(t, d); }
  double& at(std::size_t t, std::size_t d) { return probs.at(t, d); }

  void validate(double tol = 1e-8) const;
};

// Dense text format: one header line with the two dimensions, then one row
// per line with 9-significant-digit reals. An optional comment line starting
// with '#' may precede the header.
void write_matrix(const Matrix& m, const std::filesystem::path& path,
                  const std::string& header_comment = "");
Matrix read_matrix(const std::filesystem::path& path);

void write_phi(const TopicWordMatrix& phi, const std::filesystem::path& path,
               const std::string& header_comment = "");
TopicWordMatrix read_phi(const std::filesystem::path& path);

void write_theta(const DocTopicMatrix& theta, const std::filesystem::path& path);
DocTopicMatrix read_theta(const std::filesystem::path& path);

}  // namespace hiertopics
