#include "parafit/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>
#include <unordered_set>

#include "parafit/error.hpp"

namespace parafit {

EmbeddingIndex build_index(std::span<const std::pair<ItemId, EmbeddingVector>> entries) {
  EmbeddingIndex index;
  if (entries.empty()) return index;
  const std::size_t dim = entries.front().second.dim();
  index.matrix_ = Matrix(entries.size(), dim);
  std::unordered_set<ItemId> seen;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& [id, vec] = entries[i];
    if (!seen.insert(id).second) throw Error(ErrorKind::kDuplicateId, fmt::format("index: duplicate id {}", id));
    if (vec.dim() != dim || dim == 0) throw Error(ErrorKind::kInvalidArgument, fmt::format("index: id {} has dim {}", id, vec.dim()));
    const double n = l2_norm(vec.values());
    if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitNormTolerance) {
      throw Error(ErrorKind::kInvalidArgument, fmt::format("index: id {} has norm {}", id, n));
    }
    index.ids_.push_back(id);
    std::copy(vec.values().begin(), vec.values().end(), index.matrix_.row(i).begin());
  }
  return index;
}

RankedList top_k(const EmbeddingVector& query, const EmbeddingIndex& index, std::size_t k, kernels::Exec exec) {
  if (k == 0 || k > index.size()) {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("top_k: k={} with index size {}", k, index.size()));
  }
  if (query.dim() != index.dim()) throw Error(ErrorKind::kInvalidArgument, "top_k: query dimension mismatch");

  std::vector<double> scores(index.size());
  if (exec == kernels::Exec::kParallel) {
    kernels::scores_omp(query.values(), index.matrix(), scores);
  } else {
    kernels::scores_serial(query.values(), index.matrix(), scores);
  }
  const auto ids = index.ids();
  std::vector<std::size_t> rows(index.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  };
  std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end(), better);

  std::vector<ItemId> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = ids[rows[i]];
  return RankedList(std::move(out));
}

}  // namespace parafit
