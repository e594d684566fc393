#pragma once

#include <cstddef>
#include <vector>

namespace sampcf {

// Dense row-major matrix of doubles. Small enough on purpose: all batch
// math in this project is plain loops over contiguous rows.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  void set_zero() { std::fill(data.begin(), data.end(), 0.0); }
  bool empty() const { return data.empty(); }
};

// GEMM kernels used by the batch forward/backward paths. Each comes in a
// serial reference form and an OpenMP form that parallelizes over output
// rows only; per-cell summation order is identical in both, so results are
// bitwise equal for any thread count.

// out = a * b^T         (a: m x d, b: n x d, out: m x n)
void serial_gemm_nt(const Matrix& a, const Matrix& b, Matrix& out);
void omp_gemm_nt(const Matrix& a, const Matrix& b, Matrix& out);

// out = a * b           (a: m x k, b: k x n, out: m x n)
void serial_gemm_nn(const Matrix& a, const Matrix& b, Matrix& out);
void omp_gemm_nn(const Matrix& a, const Matrix& b, Matrix& out);

// out = a^T * b         (a: k x m, b: k x n, out: m x n)
void serial_gemm_tn(const Matrix& a, const Matrix& b, Matrix& out);
void omp_gemm_tn(const Matrix& a, const Matrix& b, Matrix& out);

// scores[l] = dot(f.row(user_slot[l]), g.row(item_slot[l]))
void serial_link_dots(const Matrix& f, const Matrix& g,
                      const std::vector<std::uint32_t>& user_slot,
                      const std::vector<std::uint32_t>& item_slot,
                      std::vector<double>& scores);
void omp_link_dots(const Matrix& f, const Matrix& g,
                   const std::vector<std::uint32_t>& user_slot,
                   const std::vector<std::uint32_t>& item_slot,
                   std::vector<double>& scores);

// Dispatchers: pick the OpenMP kernel when `parallel` is set.
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out, bool parallel);
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& out, bool parallel);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out, bool parallel);
void link_dots(const Matrix& f, const Matrix& g,
               const std::vector<std::uint32_t>& user_slot,
               const std::vector<std::uint32_t>& item_slot,
               std::vector<double>& scores, bool parallel);

}  // namespace sampcf
