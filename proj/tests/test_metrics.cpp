#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "parafit/error.hpp"
#include "parafit/metrics.hpp"

using namespace parafit;

namespace {

std::vector<ItemId> random_list(Rng& rng, std::size_t universe, std::size_t len) {
  std::vector<ItemId> ids(universe);
  std::iota(ids.begin(), ids.end(), 0);
  rng.shuffle(std::span(ids));
  ids.resize(len);
  return ids;
}

std::vector<double> with_ties(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(rng.below(6)) * 0.5;
  return v;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("hand cases") {
    const RankedList a({1, 2}), b({2, 1});
    CHECK(average_overlap_at_k(a, b, 2) == 0.5);
    CHECK(jaccard_at_k(a, b, 2) == 1.0);
    CHECK(jaccard_at_k(RankedList({1, 2, 3}), RankedList({1, 4, 5}), 3) == 0.2);
    const RankedList x({4, 8, 15, 16}), y({23, 42, 7, 9});
    CHECK(average_overlap_at_k(x, x, 4) == 1.0);
    CHECK(jaccard_at_k(x, x, 4) == 1.0);
    CHECK(average_overlap_at_k(x, y, 4) == 0.0);
    CHECK(jaccard_at_k(x, y, 4) == 0.0);
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(average_overlap_at_k(RankedList({1}), RankedList({1, 2}), 2), Error);
    CHECK_THROWS_AS(jaccard_at_k(RankedList({1, 2}), RankedList({1, 2}), 0), Error);
    CHECK_THROWS_AS(spearman(std::vector<double>{1, 2}, std::vector<double>{1}), Error);
    CHECK_THROWS_AS(spearman(std::vector<double>{1}, std::vector<double>{1}), Error);
    CHECK_THROWS_AS(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), Error);
    CHECK_THROWS_AS(recall_at_k(RankedList({1, 2}), {}, 1), Error);
    CHECK_THROWS_AS(binary_choice_accuracy({}), Error);
  }

  TEST_CASE("AO and JS agree with set oracles") {
    Rng rng(41);
    for (int t = 0; t < 1000; ++t) {
      const auto la = random_list(rng, 50, 10), lb = random_list(rng, 50, 10);
      const RankedList a(la), b(lb);
      for (std::size_t k : {1, 5, 10}) {
        CHECK(std::abs(average_overlap_at_k(a, b, k) - oracle::average_overlap(la, lb, k)) <= 1e-12);
        CHECK(std::abs(jaccard_at_k(a, b, k) - oracle::jaccard(la, lb, k)) <= 1e-12);
      }
    }
  }

  TEST_CASE("properties: range, symmetry, order sensitivity") {
    Rng rng(42);
    for (int t = 0; t < 300; ++t) {
      const auto la = random_list(rng, 15, 10), lb = random_list(rng, 15, 10);
      const RankedList a(la), b(lb);
      for (std::size_t k = 1; k <= 10; ++k) {
        const double ao = average_overlap_at_k(a, b, k), js = jaccard_at_k(a, b, k);
        CHECK(ao >= 0.0);
        CHECK(ao <= 1.0);
        CHECK(js >= 0.0);
        CHECK(js <= 1.0);
        CHECK(ao == average_overlap_at_k(b, a, k));
        CHECK(js == jaccard_at_k(b, a, k));
      }
    }
    // Same top-10 set, reversed order: JS ignores the order, AO does not.
    std::vector<ItemId> fwd(10);
    std::iota(fwd.begin(), fwd.end(), 0);
    std::vector<ItemId> rev(fwd.rbegin(), fwd.rend());
    CHECK(jaccard_at_k(RankedList(fwd), RankedList(rev), 10) == 1.0);
    CHECK(average_overlap_at_k(RankedList(fwd), RankedList(rev), 10) < 1.0);
  }

  TEST_CASE("average ranks") {
    const std::vector<double> v{10, 20, 20, 5, 20};
    CHECK(average_ranks(v) == std::vector<double>{2, 4, 4, 1, 4});
  }

  TEST_CASE("spearman") {
    const std::vector<double> x{3.1, 0.2, 7.7};
    CHECK(spearman(x, x) == doctest::Approx(1.0).epsilon(1e-15));
    const std::vector<double> rev{-3.1, -0.2, -7.7};
    CHECK(spearman(x, rev) == doctest::Approx(-1.0).epsilon(1e-15));

    const std::vector<double> tx{1, 2, 2, 3}, ty{1, 2, 3, 4};
    // ranks (1, 2.5, 2.5, 4) vs (1, 2, 3, 4): 4.5 / sqrt(4.5 * 5)
    CHECK(std::abs(spearman(tx, ty) - 0.94868329805051377) <= 1e-12);
    CHECK(std::abs(spearman(tx, ty) - oracle::spearman(tx, ty)) <= 1e-12);

    Rng rng(43);
    for (int t = 0; t < 500; ++t) {
      const std::size_t n = 3 + rng.below(40);
      const auto a = with_ties(rng, n), b = with_ties(rng, n);
      const auto ra = oracle::midranks(a), rb = oracle::midranks(b);
      if (std::adjacent_find(ra.begin(), ra.end(), std::not_equal_to<>()) == ra.end()) continue;
      if (std::adjacent_find(rb.begin(), rb.end(), std::not_equal_to<>()) == rb.end()) continue;
      CHECK(std::abs(spearman(a, b) - oracle::spearman(a, b)) <= 1e-12);
      CHECK(average_ranks(a) == ra);
    }
  }

  TEST_CASE("recall_at_k") {
    const RankedList r({5, 6, 7, 8, 9, 10});
    CHECK(recall_at_k(r, {5, 7}, 5) == 1.0);
    CHECK(recall_at_k(r, {1, 2}, 5) == 0.0);
    CHECK(recall_at_k(r, {5, 9, 10, 11, 12}, 5) == 0.4);
  }

  TEST_CASE("binary choice") {
    const auto e1 = EmbeddingVector::from_unit({1, 0}), e2 = EmbeddingVector::from_unit({0, 1});
    CHECK(binary_choice_accuracy(std::vector<BinaryChoiceCase>{{e1, e1, e2}}) == 1.0);
    CHECK(binary_choice_accuracy(std::vector<BinaryChoiceCase>{{e1, e2, e2}}) == 0.0);

    Rng rng(44);
    std::vector<BinaryChoiceCase> cases;
    std::size_t expect = 0;
    for (int t = 0; t < 10; ++t) {
      BinaryChoiceCase c{EmbeddingVector::unchecked(testing_util::random_unit(rng, 4)),
                         EmbeddingVector::unchecked(testing_util::random_unit(rng, 4)),
                         EmbeddingVector::unchecked(testing_util::random_unit(rng, 4))};
      double sp = 0, sn = 0;
      for (std::size_t i = 0; i < 4; ++i) {
        sp += c.image[i] * c.positive[i];
        sn += c.image[i] * c.negative[i];
      }
      expect += sp > sn;
      cases.push_back(c);
    }
    CHECK(binary_choice_accuracy(cases) == static_cast<double>(expect) / 10.0);
  }

  TEST_CASE("top-1 classification") {
    std::vector<std::pair<ItemId, EmbeddingVector>> classes;
    for (ItemId c = 0; c < 3; ++c) {
      std::vector<double> v(4, 0.0);
      v[c] = 1.0;
      classes.emplace_back(c, EmbeddingVector::from_unit(v));
    }
    const auto idx = build_index(classes);
    std::vector<ClassificationCase> exact;
    for (const auto& [id, v] : classes) exact.push_back({v, id});
    CHECK(top1_accuracy(exact, idx) == 1.0);

    // Orthogonal to every class: all tie at 0 and class 0 wins.
    const auto off = EmbeddingVector::from_unit({0, 0, 0, 1});
    CHECK(top1_accuracy(std::vector<ClassificationCase>{{off, 0}}, idx) == 1.0);
    CHECK(top1_accuracy(std::vector<ClassificationCase>{{off, 2}}, idx) == 0.0);

    Rng rng(45);
    std::vector<std::pair<ItemId, EmbeddingVector>> rand_classes;
    for (ItemId c = 0; c < 7; ++c)
      rand_classes.emplace_back(c * 3, EmbeddingVector::unchecked(testing_util::random_unit(rng, 5)));
    const auto ridx = build_index(rand_classes);
    std::vector<ClassificationCase> cases;
    std::size_t correct = 0;
    for (int t = 0; t < 100; ++t) {
      const auto q = EmbeddingVector::unchecked(testing_util::random_unit(rng, 5));
      const ItemId gold = rand_classes[rng.below(7)].first;
      double best = -2;
      ItemId arg = 0;
      for (const auto& [id, v] : rand_classes) {
        const double s = dot(q.values(), v.values());
        if (s > best) {
          best = s;
          arg = id;
        }
      }
      correct += arg == gold;
      cases.push_back({q, gold});
    }
    CHECK(top1_accuracy(cases, ridx) == static_cast<double>(correct) / 100.0);
  }
}
