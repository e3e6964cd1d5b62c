#pragma once

#include <span>
#include <string>
#include <unordered_set>
#include <utility>

#include "parafit/datamodel.hpp"
#include "parafit/retrieval.hpp"

namespace parafit {

struct MetricValue {
  std::string name;
  double value = 0.0;
  std::size_t support = 0;

  bool operator==(const MetricValue&) const = default;
};

// (1/k) * sum_{d=1..k} |La[:d] & Lb[:d]| / d. Both lists need >= k entries.
double average_overlap_at_k(const RankedList& a, const RankedList& b, std::size_t k);

// |La[:k] & Lb[:k]| / |La[:k] | Lb[:k]|.
double jaccard_at_k(const RankedList& a, const RankedList& b, std::size_t k);

// Pearson correlation of average (mid) ranks.
double spearman(std::span<const double> x, std::span<const double> y);

// Average ranks, 1-based; ties share the mean of the positions they span.
std::vector<double> average_ranks(std::span<const double> values);

double recall_at_k(const RankedList& ranked, const std::unordered_set<ItemId>& gold, std::size_t k);

struct BinaryChoiceCase {
  EmbeddingVector image;
  EmbeddingVector positive;
  EmbeddingVector negative;
};

// Fraction with dot(image, positive) > dot(image, negative); ties are wrong.
double binary_choice_accuracy(std::span<const BinaryChoiceCase> cases);

struct ClassificationCase {
  EmbeddingVector query;
  ItemId gold_class = 0;
};

// Fraction of queries whose nearest class (top_k with k = 1) is the gold one.
double top1_accuracy(std::span<const ClassificationCase> cases, const EmbeddingIndex& class_index);

}  // namespace parafit
