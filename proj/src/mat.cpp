#include "ddp/mat.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace ddp {

Mat::Mat(std::size_t r, std::size_t c, std::vector<double> data)
    : rows(r), cols(c), v(std::move(data)) {
  if (v.size() != r * c)
    throw std::invalid_argument("Mat: data length " + std::to_string(v.size()) +
                                " does not match shape " + std::to_string(r) + "x" +
                                std::to_string(c));
}

Mat Mat::row(const std::vector<double>& data) {
  return Mat(1, data.size(), data);
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

bool operator==(const Mat& a, const Mat& b) {
  return a.rows == b.rows && a.cols == b.cols && a.v == b.v;
}

namespace detail {

void gemm_acc(const double* a, const double* b, double* c,
              std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_nt_acc(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * n;
    double* ci = c + i * k;
    for (std::size_t j = 0; j < k; ++j) {
      const double* bj = b + j * n;
      double acc = 0.0;
      for (std::size_t p = 0; p < n; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

void gemm_tn_acc(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < m; ++p) {
    const double* ap = a + p * k;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < k; ++i) {
      const double api = ap[i];
      double* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

}  // namespace detail

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols != b.rows)
    throw std::invalid_argument("matmul: inner dimensions disagree: " +
                                std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                                " vs " + std::to_string(b.rows) + "x" +
                                std::to_string(b.cols));
  Mat c(a.rows, b.cols);
  detail::gemm_acc(a.v.data(), b.v.data(), c.v.data(), a.rows, a.cols, b.cols);
  return c;
}

Mat transpose(const Mat& a) {
  Mat t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

double max_abs_diff(const Mat& a, const Mat& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::fabs(a.v[i] - b.v[i]));
  return m;
}

}  // namespace ddp
