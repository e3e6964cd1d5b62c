// Serial reference vs OpenMP kernels. Each pair runs the same sizes; the
// "omp" variants honour OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "parafit/encoder.hpp"
#include "parafit/kernels.hpp"
#include "parafit/loss.hpp"
#include "parafit/rng.hpp"
#include "parafit/trainer.hpp"

using namespace parafit;

namespace {

Matrix random_matrix(std::uint64_t seed, std::size_t r, std::size_t c) {
  Rng rng(seed);
  Matrix m(r, c);
  for (auto& x : m.data) x = rng.uniform(-1, 1);
  return m;
}

Matrix unit_rows(std::uint64_t seed, std::size_t r, std::size_t c) {
  auto m = random_matrix(seed, r, c);
  for (std::size_t i = 0; i < r; ++i) {
    auto v = normalize(m.row(i));
    std::copy(v.values().begin(), v.values().end(), m.row(i).begin());
  }
  return m;
}

template <void (*Kernel)(const Matrix&, const Matrix&, Matrix&)>
void BM_gram(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(1, n, 64), b = random_matrix(2, n, 64);
  Matrix out(n, n);
  for (auto _ : state) {
    Kernel(a, b, out);
    benchmark::DoNotOptimize(out.data.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <void (*Kernel)(std::span<const double>, const Matrix&, std::span<double>)>
void BM_scores(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto rows = random_matrix(3, m, 64), q = random_matrix(4, 1, 64);
  std::vector<double> out(m);
  for (auto _ : state) {
    Kernel(q.row(0), rows, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m));
}

template <void (*Kernel)(const Matrix&, const Matrix&, Matrix&)>
void BM_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto g = random_matrix(5, n, n), b = random_matrix(6, n, 64);
  Matrix out(n, 64);
  for (auto _ : state) {
    Kernel(g, b, out);
    benchmark::DoNotOptimize(out.data.data());
  }
}

void BM_info_nce_grad(benchmark::State& state, kernels::Exec exec) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = unit_rows(7, n, 64), b = unit_rows(8, n, 64);
  const InfoNceOptions opts{0.07, true, exec};
  for (auto _ : state) benchmark::DoNotOptimize(info_nce_grad(a, b, opts).loss);
}

void BM_batch_loss_grad(benchmark::State& state, kernels::Exec exec) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto params = init_params(1, 4096, 64, 32);
  const auto images = unit_rows(9, n, 32);
  const char* words[] = {"red", "blue", "ceramic", "mug", "tiny", "steel", "lamp", "old", "woolen", "scarf"};
  Rng rng(10);
  const auto phrase = [&] {
    std::string s;
    for (int i = 0; i < 6; ++i) s += std::string(words[rng.below(10)]) + " ";
    return s;
  };
  std::vector<QuadrupleExample> batch;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> img(images.row(i).begin(), images.row(i).end());
    batch.push_back({static_cast<ItemId>(i), EmbeddingVector::unchecked(img), phrase(), phrase(), phrase()});
  }
  const std::span<const QuadrupleExample> view(batch);
  for (auto _ : state) benchmark::DoNotOptimize(batch_loss_grad(params, view, LossConfig(), exec).loss.total);
}

}  // namespace

BENCHMARK(BM_gram<kernels::gram_serial>)->Name("gram/serial")->Arg(256)->Arg(1024)->UseRealTime();
BENCHMARK(BM_gram<kernels::gram_omp>)->Name("gram/omp")->Arg(256)->Arg(1024)->UseRealTime();
BENCHMARK(BM_scores<kernels::scores_serial>)->Name("scores/serial")->Arg(10000)->Arg(100000)->UseRealTime();
BENCHMARK(BM_scores<kernels::scores_omp>)->Name("scores/omp")->Arg(10000)->Arg(100000)->UseRealTime();
BENCHMARK(BM_matmul<kernels::matmul_serial>)->Name("matmul/serial")->Arg(256)->Arg(1024)->UseRealTime();
BENCHMARK(BM_matmul<kernels::matmul_omp>)->Name("matmul/omp")->Arg(256)->Arg(1024)->UseRealTime();
BENCHMARK(BM_matmul<kernels::matmul_tn_serial>)->Name("matmul_tn/serial")->Arg(256)->Arg(1024)->UseRealTime();
BENCHMARK(BM_matmul<kernels::matmul_tn_omp>)->Name("matmul_tn/omp")->Arg(256)->Arg(1024)->UseRealTime();
BENCHMARK_CAPTURE(BM_info_nce_grad, serial, kernels::Exec::kSerial)->Arg(256)->Arg(1024)->UseRealTime();
BENCHMARK_CAPTURE(BM_info_nce_grad, omp, kernels::Exec::kParallel)->Arg(256)->Arg(1024)->UseRealTime();
BENCHMARK_CAPTURE(BM_batch_loss_grad, serial, kernels::Exec::kSerial)->Arg(64)->Arg(512)->UseRealTime();
BENCHMARK_CAPTURE(BM_batch_loss_grad, omp, kernels::Exec::kParallel)->Arg(64)->Arg(512)->UseRealTime();

BENCHMARK_MAIN();
