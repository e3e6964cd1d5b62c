#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP version; both write every output element with the same sequential
// accumulation, so results are bit-identical regardless of thread count.

#include <cstddef>
#include <exception>
#include <span>

#include "parafit/datamodel.hpp"

namespace parafit::kernels {

enum class Exec { kSerial, kParallel };

// out(i, j) = dot(a.row(i), b.row(j)).
void gram_serial(const Matrix& a, const Matrix& b, Matrix& out);
void gram_omp(const Matrix& a, const Matrix& b, Matrix& out);
Matrix gram(const Matrix& a, const Matrix& b, Exec exec = Exec::kSerial);

// out[i] = dot(query, rows.row(i)).
void scores_serial(std::span<const double> query, const Matrix& rows, std::span<double> out);
void scores_omp(std::span<const double> query, const Matrix& rows, std::span<double> out);

// out = g * b (g: n x m, b: m x d), and out = g^T * a (g: n x m, a: n x d).
void matmul_serial(const Matrix& g, const Matrix& b, Matrix& out);
void matmul_omp(const Matrix& g, const Matrix& b, Matrix& out);
void matmul_tn_serial(const Matrix& g, const Matrix& a, Matrix& out);
void matmul_tn_omp(const Matrix& g, const Matrix& a, Matrix& out);

int max_threads();
void set_threads(int n);

// Runs fn(i) for i in [0, n). Iterations must write disjoint outputs.
template <typename Fn>
void for_each_index(std::size_t n, Exec exec, Fn&& fn) {
  if (exec == Exec::kSerial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  // Exceptions cannot cross the parallel region; the one from the lowest
  // index is rethrown afterwards, matching what the serial loop would throw.
  const auto count = static_cast<std::ptrdiff_t>(n);
  std::exception_ptr first;
  std::ptrdiff_t first_index = count;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(parafit_for_each_index)
      if (i < first_index) {
        first_index = i;
        first = std::current_exception();
      }
    }
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace parafit::kernels
