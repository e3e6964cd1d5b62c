#include <cmath>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"
#include "parafit/datamodel.hpp"
#include "parafit/error.hpp"

using namespace parafit;

namespace {

QuadrupleExample record(ItemId id, std::vector<double> emb) {
  return {id, EmbeddingVector::unchecked(std::move(emb)), "a red mug", "red mug", "crimson cup"};
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::kInvalidArgument;
}

}  // namespace

TEST_SUITE("datamodel") {
  TEST_CASE("normalize worked examples") {
    const std::vector<double> a{3, 4};
    auto na = normalize(a);
    CHECK(na[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(na[1] == doctest::Approx(0.8).epsilon(1e-15));

    const std::vector<double> b{0, 0, 5};
    auto nb = normalize(b);
    CHECK(nb[0] == 0.0);
    CHECK(nb[1] == 0.0);
    CHECK(nb[2] == 1.0);

    // 1 / sqrt(2)
    const std::vector<double> c{1, 1};
    auto nc = normalize(c);
    CHECK(std::abs(nc[0] - 0.70710678118654752) < 1e-15);
    CHECK(std::abs(nc[1] - 0.70710678118654752) < 1e-15);
  }

  TEST_CASE("normalize rejects zero and non-finite input") {
    const std::vector<double> zero{0, 0, 0};
    CHECK(kind_of([&] { normalize(zero); }) == ErrorKind::kDegenerateVector);
    const std::vector<double> nan{1, std::numeric_limits<double>::quiet_NaN()};
    CHECK(kind_of([&] { normalize(nan); }) == ErrorKind::kDegenerateVector);
    const std::vector<double> inf{std::numeric_limits<double>::infinity(), 0};
    CHECK(kind_of([&] { normalize(inf); }) == ErrorKind::kDegenerateVector);
  }

  TEST_CASE("normalize is idempotent and unit") {
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> v(1 + rng.below(40));
      for (auto& x : v) x = rng.uniform(-10, 10);
      auto once = normalize(v);
      CHECK(std::abs(l2_norm(once.values()) - 1.0) <= 1e-12);
      auto twice = normalize(once.values());
      for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(twice[i] - once[i]) <= 1e-15);
    }
  }

  TEST_CASE("from_unit checks the norm") {
    CHECK_NOTHROW(EmbeddingVector::from_unit({0.6, 0.8}));
    CHECK(kind_of([] { EmbeddingVector::from_unit({0.6, 0.9}); }) == ErrorKind::kNonUnitRow);
  }

  TEST_CASE("validate_corpus") {
    SUBCASE("well-formed") {
      std::vector<QuadrupleExample> rs{record(1, {1, 0}), record(2, {0, 1}), record(3, {0.6, 0.8})};
      CHECK(validate_corpus(rs).empty());
    }
    SUBCASE("duplicate id") {
      std::vector<QuadrupleExample> rs{record(7, {1, 0}), record(7, {0, 1}), record(8, {0.6, 0.8})};
      auto v = validate_corpus(rs);
      REQUIRE(v.size() == 1);
      CHECK(v[0].kind == Violation::Kind::kDuplicateId);
      CHECK(v[0].record_index == 1);
    }
    SUBCASE("zero embedding") {
      std::vector<QuadrupleExample> rs{record(1, {1, 0}), record(2, {0, 0})};
      auto v = validate_corpus(rs);
      REQUIRE(v.size() == 1);
      CHECK(v[0].kind == Violation::Kind::kNonUnitNorm);
    }
    SUBCASE("empty text, bad dim, non-finite") {
      auto blank = record(1, {1, 0});
      blank.paraphrase2 = "   ";
      std::vector<QuadrupleExample> rs{blank, record(2, {0, 0, 1}),
                                       record(3, {std::numeric_limits<double>::quiet_NaN(), 0})};
      auto v = validate_corpus(rs);
      REQUIRE(v.size() == 3);
      CHECK(v[0].kind == Violation::Kind::kEmptyText);
      CHECK(v[1].kind == Violation::Kind::kDimMismatch);
      CHECK(v[2].kind == Violation::Kind::kNonFinite);
    }
  }

  TEST_CASE("ranked list rejects duplicates") {
    CHECK_NOTHROW(RankedList({3, 1, 2}));
    CHECK(kind_of([] { RankedList({3, 1, 3}); }) == ErrorKind::kDuplicateId);
  }

  TEST_CASE("validate_batch") {
    Batch b{testing_util::basis(2, 2), testing_util::basis(2, 2), testing_util::basis(2, 2), testing_util::basis(2, 2)};
    CHECK_NOTHROW(validate_batch(b));
    b.para1 = testing_util::basis(3, 2);
    CHECK_THROWS_AS(validate_batch(b), Error);
    b.para1 = testing_util::basis(2, 2);
    b.captions.at(0, 0) = 2.0;
    CHECK_THROWS_AS(validate_batch(b), Error);
  }

  TEST_CASE("trim") {
    CHECK(trim("  a b \t\n") == "a b");
    CHECK(trim("   ").empty());
  }
}
