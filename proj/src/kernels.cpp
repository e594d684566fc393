#include "sampcf/kernels.hpp"

#include <cstdint>

#include "sampcf/common.hpp"

namespace sampcf {

namespace {

void check_dims(bool ok) {
  if (!ok) throw InternalError("kernel shape mismatch");
}

inline void gemm_nt_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  const double* ai = a.row(i);
  double* oi = out.row(i);
  for (std::size_t j = 0; j < b.rows; ++j) {
    const double* bj = b.row(j);
    double acc = 0.0;
    for (std::size_t k = 0; k < a.cols; ++k) acc += ai[k] * bj[k];
    oi[j] = acc;
  }
}

inline void gemm_nn_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  const double* ai = a.row(i);
  double* oi = out.row(i);
  for (std::size_t j = 0; j < b.cols; ++j) oi[j] = 0.0;
  // k outer keeps b-row access contiguous; per-cell additions still run in
  // ascending k, matching the j-inner formulation bit for bit.
  for (std::size_t k = 0; k < a.cols; ++k) {
    const double aik = ai[k];
    const double* bk = b.row(k);
    for (std::size_t j = 0; j < b.cols; ++j) oi[j] += aik * bk[j];
  }
}

inline void gemm_tn_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  double* oi = out.row(i);
  for (std::size_t j = 0; j < b.cols; ++j) oi[j] = 0.0;
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double aki = a.at(k, i);
    const double* bk = b.row(k);
    for (std::size_t j = 0; j < b.cols; ++j) oi[j] += aki * bk[j];
  }
}

inline double slot_dot(const Matrix& f, const Matrix& g, std::uint32_t u, std::uint32_t v) {
  const double* fu = f.row(u);
  const double* gv = g.row(v);
  double acc = 0.0;
  for (std::size_t k = 0; k < f.cols; ++k) acc += fu[k] * gv[k];
  return acc;
}

}  // namespace

void serial_gemm_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  check_dims(a.cols == b.cols && out.rows == a.rows && out.cols == b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) gemm_nt_row(a, b, out, i);
}

void omp_gemm_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  check_dims(a.cols == b.cols && out.rows == a.rows && out.cols == b.rows);
  const std::int64_t m = static_cast<std::int64_t>(a.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) gemm_nt_row(a, b, out, static_cast<std::size_t>(i));
}

void serial_gemm_nn(const Matrix& a, const Matrix& b, Matrix& out) {
  check_dims(a.cols == b.rows && out.rows == a.rows && out.cols == b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) gemm_nn_row(a, b, out, i);
}

void omp_gemm_nn(const Matrix& a, const Matrix& b, Matrix& out) {
  check_dims(a.cols == b.rows && out.rows == a.rows && out.cols == b.cols);
  const std::int64_t m = static_cast<std::int64_t>(a.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) gemm_nn_row(a, b, out, static_cast<std::size_t>(i));
}

void serial_gemm_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  check_dims(a.rows == b.rows && out.rows == a.cols && out.cols == b.cols);
  for (std::size_t i = 0; i < a.cols; ++i) gemm_tn_row(a, b, out, i);
}

void omp_gemm_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  check_dims(a.rows == b.rows && out.rows == a.cols && out.cols == b.cols);
  const std::int64_t m = static_cast<std::int64_t>(a.cols);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) gemm_tn_row(a, b, out, static_cast<std::size_t>(i));
}

void serial_link_dots(const Matrix& f, const Matrix& g,
                      const std::vector<std::uint32_t>& user_slot,
                      const std::vector<std::uint32_t>& item_slot,
                      std::vector<double>& scores) {
  check_dims(f.cols == g.cols && user_slot.size() == item_slot.size());
  scores.resize(user_slot.size());
  for (std::size_t l = 0; l < user_slot.size(); ++l)
    scores[l] = slot_dot(f, g, user_slot[l], item_slot[l]);
}

void omp_link_dots(const Matrix& f, const Matrix& g,
                   const std::vector<std::uint32_t>& user_slot,
                   const std::vector<std::uint32_t>& item_slot,
                   std::vector<double>& scores) {
  check_dims(f.cols == g.cols && user_slot.size() == item_slot.size());
  scores.resize(user_slot.size());
  const std::int64_t n = static_cast<std::int64_t>(user_slot.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t l = 0; l < n; ++l)
    scores[static_cast<std::size_t>(l)] =
        slot_dot(f, g, user_slot[static_cast<std::size_t>(l)], item_slot[static_cast<std::size_t>(l)]);
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out, bool parallel) {
  parallel ? omp_gemm_nt(a, b, out) : serial_gemm_nt(a, b, out);
}

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& out, bool parallel) {
  parallel ? omp_gemm_nn(a, b, out) : serial_gemm_nn(a, b, out);
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out, bool parallel) {
  parallel ? omp_gemm_tn(a, b, out) : serial_gemm_tn(a, b, out);
}

void link_dots(const Matrix& f, const Matrix& g,
               const std::vector<std::uint32_t>& user_slot,
               const std::vector<std::uint32_t>& item_slot,
               std::vector<double>& scores, bool parallel) {
  parallel ? omp_link_dots(f, g, user_slot, item_slot, scores)
           : serial_link_dots(f, g, user_slot, item_slot, scores);
}

}  // namespace sampcf
