#pragma once

#include <span>
#include <utility>
#include <vector>

#include "parafit/datamodel.hpp"
#include "parafit/kernels.hpp"

namespace parafit {

class EmbeddingIndex {
 public:
  EmbeddingIndex() = default;

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return matrix_.cols; }
  bool empty() const noexcept { return ids_.empty(); }
  std::span<const ItemId> ids() const noexcept { return ids_; }
  const Matrix& matrix() const noexcept { return matrix_; }

 private:
  friend EmbeddingIndex build_index(std::span<const std::pair<ItemId, EmbeddingVector>> entries);
  std::vector<ItemId> ids_;
  Matrix matrix_;
};

// Keeps input order. Throws Error(kDuplicateId) on repeated ids and
// Error(kInvalidArgument) on mixed dimensions or non-unit vectors.
EmbeddingIndex build_index(std::span<const std::pair<ItemId, EmbeddingVector>> entries);

// Exhaustive scan: the k ids with the largest dot product, best first; exact
// score ties go to the smaller id. Throws for k == 0 or k > index size.
RankedList top_k(const EmbeddingVector& query, const EmbeddingIndex& index, std::size_t k,
                 kernels::Exec exec = kernels::Exec::kSerial);

}  // namespace parafit
