#include "parafit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

#include "parafit/error.hpp"

namespace parafit {

namespace {

void check_depth(const RankedList& a, const RankedList& b, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::kInvalidArgument, "rank metric: k must be >= 1");
  if (a.size() < k || b.size() < k) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("rank metric: lists of length {} and {} are shorter than k={}", a.size(), b.size(), k));
  }
}

}  // namespace

double average_overlap_at_k(const RankedList& a, const RankedList& b, std::size_t k) {
  check_depth(a, b, k);
  // Walk both prefixes together; an id enters the intersection at the depth
  // where it has been seen in both lists.
  std::unordered_set<ItemId> seen_a, seen_b;
  std::size_t overlap = 0;
  double sum = 0.0;
  for (std::size_t d = 1; d <= k; ++d) {
    const ItemId x = a[d - 1], y = b[d - 1];
    seen_a.insert(x);
    seen_b.insert(y);
    if (x == y) {
      ++overlap;
    } else {
      overlap += seen_b.count(x) + seen_a.count(y);
    }
    sum += static_cast<double>(overlap) / static_cast<double>(d);
  }
  return sum / static_cast<double>(k);
}

double jaccard_at_k(const RankedList& a, const RankedList& b, std::size_t k) {
  check_depth(a, b, k);
  const std::unordered_set<ItemId> top_a(a.items().begin(), a.items().begin() + static_cast<std::ptrdiff_t>(k));
  std::size_t inter = 0;
  for (std::size_t i = 0; i < k; ++i) inter += top_a.count(b[i]);
  return static_cast<double>(inter) / static_cast<double>(2 * k - inter);
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::kInvalidArgument, "spearman: length mismatch");
  if (x.size() < 2) throw Error(ErrorKind::kInvalidArgument, "spearman: need at least 2 values");
  for (auto s : {x, y}) {
    for (double v : s) {
      if (!std::isfinite(v)) throw Error(ErrorKind::kInvalidArgument, "spearman: non-finite value");
    }
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx, dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::kInvalidArgument, "spearman: zero rank variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double recall_at_k(const RankedList& ranked, const std::unordered_set<ItemId>& gold, std::size_t k) {
  if (gold.empty()) throw Error(ErrorKind::kInvalidArgument, "recall_at_k: empty gold set");
  if (k == 0 || ranked.size() < k) throw Error(ErrorKind::kInvalidArgument, "recall_at_k: list shorter than k");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += gold.count(ranked[i]);
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

double binary_choice_accuracy(std::span<const BinaryChoiceCase> cases) {
  if (cases.empty()) throw Error(ErrorKind::kInvalidArgument, "binary_choice_accuracy: no cases");
  std::size_t correct = 0;
  for (const auto& c : cases) {
    if (dot(c.image.values(), c.positive.values()) > dot(c.image.values(), c.negative.values())) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(cases.size());
}

double top1_accuracy(std::span<const ClassificationCase> cases, const EmbeddingIndex& class_index) {
  if (cases.empty() || class_index.empty()) throw Error(ErrorKind::kInvalidArgument, "top1_accuracy: empty input");
  std::size_t correct = 0;
  for (const auto& c : cases) {
    if (top_k(c.query, class_index, 1)[0] == c.gold_class) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(cases.size());
}

}  // namespace parafit
