#include "hiertopics/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hiertopics {

double Matrix::column_sum(std::size_t c) const {
  double s = 0.0;
  for (std::size_t r = 0; r < rows_; ++r) s += at(r, c);
  return s;
}

void Matrix::scale_column(std::size_t c, double factor) {
  for (std::size_t r = 0; r < rows_; ++r) at(r, c) *= factor;
}

namespace {

void check_column_stochastic(const Matrix& m, double tol, const char* what) {
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      double v = m.at(r, c);
      if (v < 0.0) {
        throw std::invalid_argument(std::string(what) + ": negative entry");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) {
      throw std::invalid_argument(std::string(what) + ": column " + std::to_string(c) +
                                  " sums to " + std::to_string(sum));
    }
  }
}

}  // namespace

void TopicWordMatrix::validate(double tol) const {
  if (topics < 1) throw std::invalid_argument("TopicWordMatrix: T must be >= 1");
  if (probs.rows() != vocab || probs.cols() != topics) {
    throw std::invalid_argument("TopicWordMatrix: shape mismatch");
  }
  check_column_stochastic(probs, tol, "TopicWordMatrix");
}

TopicWordMatrix TopicWordMatrix::column_block(std::size_t first, std::size_t count) const {
  TopicWordMatrix out(vocab, count);
  for (std::size_t w = 0; w < vocab; ++w) {
    for (std::size_t t = 0; t < count; ++t) out.at(w, t) = at(w, first + t);
  }
  return out;
}

std::vector<std::uint32_t> TopicWordMatrix::top_words(std::size_t t, std::size_t n) const {
  std::vector<std::uint32_t> ids(vocab);
  std::iota(ids.begin(), ids.end(), 0u);
  n = std::min(n, vocab);
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      double pa = at(a, t), pb = at(b, t);
                      if (pa != pb) return pa > pb;
                      return a < b;
                    });
  ids.resize(n);
  return ids;
}

void DocTopicMatrix::validate(double tol) const {
  if (probs.rows() != topics || probs.cols() != docs) {
    throw std::invalid_argument("DocTopicMatrix: shape mismatch");
  }
  check_column_stochastic(probs, tol, "DocTopicMatrix");
}

void write_matrix(const Matrix& m, const std::filesystem::path& path,
                  const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << m.rows() << " " << m.cols() << "\n";
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.9g", m.at(r, c));
      if (c) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

Matrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  do {
    if (!std::getline(in, line)) throw std::runtime_error("empty matrix file: " + path.string());
  } while (!line.empty() && line[0] == '#');
  std::istringstream header(line);
  std::size_t rows = 0, cols = 0;
  if (!(header >> rows >> cols)) throw std::runtime_error("bad matrix header: " + path.string());
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (!(in >> m.at(r, c))) throw std::runtime_error("truncated matrix: " + path.string());
    }
  }
  return m;
}

void write_phi(const TopicWordMatrix& phi, const std::filesystem::path& path,
               const std::string& header_comment) {
  write_matrix(phi.probs, path, header_comment);
}

TopicWordMatrix read_phi(const std::filesystem::path& path) {
  TopicWordMatrix phi;
  phi.probs = read_matrix(path);
  phi.vocab = phi.probs.rows();
  phi.topics = phi.probs.cols();
  return phi;
}

void write_theta(const DocTopicMatrix& theta, const std::filesystem::path& path) {
  write_matrix(theta.probs, path);
}

DocTopicMatrix read_theta(const std::filesystem::path& path) {
  DocTopicMatrix theta;
  theta.probs = read_matrix(path);
  theta.topics = theta.probs.rows();
  theta.docs = theta.probs.cols();
  return theta;
}

}  // namespace hiertopics
