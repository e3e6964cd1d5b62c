#include "parafit/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "parafit/error.hpp"

namespace parafit::kernels {

namespace {

void prepare(Matrix& out, std::size_t rows, std::size_t cols) {
  if (out.rows != rows || out.cols != cols) out = Matrix(rows, cols);
}

void require_cols(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) throw Error(ErrorKind::kInvalidArgument, "gram: column mismatch");
}

}  // namespace

void gram_serial(const Matrix& a, const Matrix& b, Matrix& out) {
  require_cols(a, b);
  prepare(out, a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.rows; ++j) out.at(i, j) = dot(a.row(i), b.row(j));
  }
}

void gram_omp(const Matrix& a, const Matrix& b, Matrix& out) {
  require_cols(a, b);
  prepare(out, a.rows, b.rows);
  const auto n = static_cast<std::ptrdiff_t>(a.rows);
  const std::size_t m = b.rows;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < m; ++j) out.at(ii, j) = dot(a.row(ii), b.row(j));
  }
}

Matrix gram(const Matrix& a, const Matrix& b, Exec exec) {
  Matrix out;
  if (exec == Exec::kParallel) {
    gram_omp(a, b, out);
  } else {
    gram_serial(a, b, out);
  }
  return out;
}

void scores_serial(std::span<const double> query, const Matrix& rows, std::span<double> out) {
  for (std::size_t i = 0; i < rows.rows; ++i) out[i] = dot(query, rows.row(i));
}

void scores_omp(std::span<const double> query, const Matrix& rows, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(rows.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = dot(query, rows.row(static_cast<std::size_t>(i)));
  }
}

void matmul_serial(const Matrix& g, const Matrix& b, Matrix& out) {
  if (g.cols != b.rows) throw Error(ErrorKind::kInvalidArgument, "matmul: inner dimension mismatch");
  prepare(out, g.rows, b.cols);
  for (std::size_t i = 0; i < g.rows; ++i) {
    auto dst = out.row(i);
    std::fill(dst.begin(), dst.end(), 0.0);
    for (std::size_t j = 0; j < g.cols; ++j) {
      const double w = g.at(i, j);
      auto src = b.row(j);
      for (std::size_t d = 0; d < b.cols; ++d) dst[d] += w * src[d];
    }
  }
}

void matmul_omp(const Matrix& g, const Matrix& b, Matrix& out) {
  if (g.cols != b.rows) throw Error(ErrorKind::kInvalidArgument, "matmul: inner dimension mismatch");
  prepare(out, g.rows, b.cols);
  const auto n = static_cast<std::ptrdiff_t>(g.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    auto dst = out.row(i);
    std::fill(dst.begin(), dst.end(), 0.0);
    for (std::size_t j = 0; j < g.cols; ++j) {
      const double w = g.at(i, j);
      auto src = b.row(j);
      for (std::size_t d = 0; d < b.cols; ++d) dst[d] += w * src[d];
    }
  }
}

void matmul_tn_serial(const Matrix& g, const Matrix& a, Matrix& out) {
  if (g.rows != a.rows) throw Error(ErrorKind::kInvalidArgument, "matmul_tn: inner dimension mismatch");
  prepare(out, g.cols, a.cols);
  for (std::size_t j = 0; j < g.cols; ++j) {
    auto dst = out.row(j);
    std::fill(dst.begin(), dst.end(), 0.0);
    for (std::size_t i = 0; i < g.rows; ++i) {
      const double w = g.at(i, j);
      auto src = a.row(i);
      for (std::size_t d = 0; d < a.cols; ++d) dst[d] += w * src[d];
    }
  }
}

void matmul_tn_omp(const Matrix& g, const Matrix& a, Matrix& out) {
  if (g.rows != a.rows) throw Error(ErrorKind::kInvalidArgument, "matmul_tn: inner dimension mismatch");
  prepare(out, g.cols, a.cols);
  const auto m = static_cast<std::ptrdiff_t>(g.cols);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t jj = 0; jj < m; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    auto dst = out.row(j);
    std::fill(dst.begin(), dst.end(), 0.0);
    for (std::size_t i = 0; i < g.rows; ++i) {
      const double w = g.at(i, j);
      auto src = a.row(i);
      for (std::size_t d = 0; d < a.cols; ++d) dst[d] += w * src[d];
    }
  }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace parafit::kernels
