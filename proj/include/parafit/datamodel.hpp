#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace parafit {

using ItemId = std::uint32_t;

inline constexpr double kUnitNormTolerance = 1e-5;

// Unit-norm, finite vector. normalize() and from_unit() establish the
// invariant; unchecked() defers it to validation.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;

  static EmbeddingVector from_unit(std::vector<double> values,
                                   double tolerance = kUnitNormTolerance);
  // No checks. Used by ingestion paths whose output goes through
  // validate_corpus() before use.
  static EmbeddingVector unchecked(std::vector<double> values) {
    return EmbeddingVector(std::move(values));
  }

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const EmbeddingVector&) const = default;

 private:
  friend EmbeddingVector normalize(std::span<const double> v);
  explicit EmbeddingVector(std::vector<double> v) : values_(std::move(v)) {}
  std::vector<double> values_;
};

// Throws Error(kDegenerateVector) for zero or non-finite input.
EmbeddingVector normalize(std::span<const double> v);

double l2_norm(std::span<const double> v);

// Sequential accumulation in index order; every similarity in the toolkit
// goes through this so that scores are bit-reproducible.
double dot(std::span<const double> a, std::span<const double> b);

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool operator==(const Matrix&) const = default;
};

Matrix stack_rows(std::span<const EmbeddingVector> rows);

struct QuadrupleExample {
  ItemId item_id = 0;
  EmbeddingVector image_embedding;
  std::string caption;
  std::string paraphrase1;
  std::string paraphrase2;
};

// Four aligned N x D matrices of unit rows: images, captions, and the two
// paraphrase levels.
struct Batch {
  Matrix images;
  Matrix captions;
  Matrix para1;
  Matrix para2;

  std::size_t size() const noexcept { return images.rows; }
};

// Throws Error(kInvalidArgument) on shape mismatch or non-unit rows.
void validate_batch(const Batch& batch, double tolerance = kUnitNormTolerance);

// Ordered, duplicate-free list of ids; position 0 is the best match.
class RankedList {
 public:
  RankedList() = default;
  // Throws Error(kDuplicateId) if ids repeat.
  explicit RankedList(std::vector<ItemId> items);

  std::size_t size() const noexcept { return items_.size(); }
  std::span<const ItemId> items() const noexcept { return items_; }
  ItemId operator[](std::size_t i) const { return items_[i]; }

  bool operator==(const RankedList&) const = default;

 private:
  std::vector<ItemId> items_;
};

struct Violation {
  enum class Kind { kDuplicateId, kEmptyText, kNonFinite, kNonUnitNorm, kDimMismatch };
  Kind kind;
  std::size_t record_index;
  std::string message;

  bool operator==(const Violation&) const = default;
};

std::vector<Violation> validate_corpus(std::span<const QuadrupleExample> records);

std::string trim(std::string_view text);

}  // namespace parafit
