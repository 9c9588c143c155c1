#pragma once

#include <cstddef>
#include <vector>

namespace ddp {

// Plain dense row-major matrix of doubles. Carries no autodiff state; the
// tensor engine wraps these for differentiable computations.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}
  Mat(std::size_t r, std::size_t c, std::vector<double> data);

  double& at(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
  std::size_t size() const { return v.size(); }

  static Mat row(const std::vector<double>& data);       // 1 x n
  static Mat identity(std::size_t n);
};

bool operator==(const Mat& a, const Mat& b);

Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);
double max_abs_diff(const Mat& a, const Mat& b);

namespace detail {
// Accumulating kernels on raw row-major buffers; the backward pass leans on
// these. All loops run in a fixed order so results are deterministic.
void gemm_acc(const double* a, const double* b, double* c,
              std::size_t m, std::size_t k, std::size_t n);        // C += A*B
void gemm_nt_acc(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t n, std::size_t k);     // C[m,k] += A[m,n]*B[k,n]^T
void gemm_tn_acc(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n);     // C[k,n] += A[m,k]^T*B[m,n]
}  // namespace detail

}  // namespace ddp
