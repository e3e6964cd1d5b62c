#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "parafit/error.hpp"
#include "parafit/io.hpp"

using namespace parafit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  static inline int counter = 0;
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("parafit_io_" + std::to_string(++counter))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& path, const std::string& bytes) { std::ofstream(path, std::ios::binary) << bytes; }

ErrorKind parse_kind(const std::string& bytes) {
  try {
    parse_embeddings(bytes);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::kInvalidArgument;
}

std::string u32(std::uint32_t x) {
  std::string s(4, '\0');
  for (int i = 0; i < 4; ++i) s[i] = static_cast<char>((x >> (8 * i)) & 0xff);
  return s;
}

std::string f32(float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  return u32(bits);
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("corpus loading") {
    TempDir d;
    write(d.file("ok.jsonl"), "{\"id\":1,\"caption\":\"red mug\"}\n\n{\"id\":2,\"caption\":\"blue cup\",\"paraphrase1\":\"a blue cup\"}\n");
    const auto c = load_corpus(d.file("ok.jsonl"));
    REQUIRE(c.records.size() == 2);
    CHECK(c.records[1].paraphrase1 == "a blue cup");
    CHECK_FALSE(c.records[1].paraphrase2.has_value());

    write(d.file("bad.jsonl"),
          "{\"id\":1,\"caption\":\"a\"}\n{\"id\":2,\"caption\":\"b\"}\n{\"id\":3,\"caption\":\"c\"}\n"
          "{\"id\":4,\"caption\":\"d\"}\n{\"id\":5,\"caption\":\n");
    try {
      load_corpus(d.file("bad.jsonl"));
      FAIL("expected malformed input");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kMalformedInput);
      CHECK(std::string(e.what()).find(":5:") != std::string::npos);
    }

    write(d.file("dup.jsonl"), "{\"id\":1,\"caption\":\"a\"}\n{\"id\":1,\"caption\":\"b\"}\n");
    try {
      load_corpus(d.file("dup.jsonl"));
      FAIL("expected duplicate");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kDuplicateId);
    }
    write(d.file("extra.jsonl"), "{\"id\":1,\"caption\":\"a\",\"colour\":\"x\"}\n");
    CHECK_THROWS_AS(load_corpus(d.file("extra.jsonl")), Error);
    CHECK_THROWS_AS(load_corpus(d.file("absent.jsonl")), Error);
  }

  TEST_CASE("corpus round trip is byte-identical") {
    TempDir d;
    std::vector<CorpusRecord> rs{{3, "Blue Mug \xE2\x80\x94 SKU#1 \"quoted\"", "blue mug", "azure cup"},
                                 {1, "plain", std::nullopt, std::nullopt}};
    save_corpus(d.file("a.jsonl"), rs);
    const auto loaded = load_corpus(d.file("a.jsonl")).records;
    CHECK(loaded == rs);
    save_corpus(d.file("b.jsonl"), loaded);
    CHECK(read_file(d.file("a.jsonl")) == read_file(d.file("b.jsonl")));
  }

  TEST_CASE("embedding file errors") {
    CHECK(parse_embeddings("PEMB" + u32(0) + u32(4)).empty());
    CHECK(parse_kind("PEMX" + u32(0) + u32(4)) == ErrorKind::kBadMagic);
    CHECK(parse_kind("PE") == ErrorKind::kTruncatedPayload);
    CHECK(parse_kind("PEMB" + u32(2) + u32(2)) == ErrorKind::kTruncatedPayload);
    const std::string one = u32(7) + f32(1.0f) + f32(0.0f);
    CHECK(parse_embeddings("PEMB" + u32(1) + u32(2) + one).size() == 1);
    CHECK(parse_kind("PEMB" + u32(1) + u32(2) + one + one) == ErrorKind::kCountMismatch);
    CHECK(parse_kind("PEMB" + u32(1) + u32(2) + u32(7) + f32(0.5f) + f32(0.5f)) == ErrorKind::kNonUnitRow);
  }

  TEST_CASE("embedding round trip keeps float bits") {
    TempDir d;
    Rng rng(61);
    std::vector<IdEmbedding> entries;
    for (ItemId i = 0; i < 100; ++i) {
      auto v = testing_util::random_unit(rng, 12);
      for (auto& x : v) x = static_cast<float>(x);
      entries.emplace_back(i * 7, EmbeddingVector::unchecked(v));
    }
    save_embeddings(d.file("e.pemb"), entries);
    const auto back = load_embeddings(d.file("e.pemb"));
    REQUIRE(back.size() == 100);
    for (std::size_t i = 0; i < 100; ++i) {
      CHECK(back[i].first == entries[i].first);
      CHECK(back[i].second == entries[i].second);
    }
    CHECK(serialize_embeddings(back) == read_file(d.file("e.pemb")));
  }

  TEST_CASE("checkpoint round trip") {
    const auto p = init_params(9, 40, 6, 5);
    const auto bytes = serialize_checkpoint(p);
    CHECK(bytes.size() == 16 + 4 * (40 * 6 + 6 * 5));
    CHECK(bytes.substr(0, 4) == "PENC");
    CHECK(parse_checkpoint(bytes) == p);
    CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, bytes.size() - 1)), Error);
    CHECK_THROWS_AS(parse_checkpoint(bytes + "x"), Error);
    CHECK_THROWS_AS(parse_checkpoint("PEMB" + bytes.substr(4)), Error);
  }

  TEST_CASE("run config parsing") {
    const auto c = parse_run_config(
        "# desk run\nepochs = 5\nbatch_size=32\nlearning_rate = 0.002\nloss_terms = [\"L1\", \"L2\"]\n"
        "temperature = 0.1\nsymmetric = false\nvocab_size = 1000\nhidden_dim = 16\nparallel = true\n");
    CHECK(c.train.epochs == 5);
    CHECK(c.train.batch_size == 32);
    CHECK(c.train.adam.learning_rate == 0.002);
    CHECK(c.train.loss == LossConfig({LossTerm::kL1Caption, LossTerm::kL2}, 0.1, false));
    CHECK(c.vocab_size == 1000);
    CHECK(c.hidden_dim == 16);
    CHECK(c.train.exec == kernels::Exec::kParallel);

    CHECK(parse_run_config("loss_terms = L1'',L2,L3\n").train.loss == LossConfig());
    const auto preset = parse_run_config("preset = large-batch-finetune\n");
    CHECK(preset.train.batch_size == 3072);
    CHECK(parse_run_config(serialize_run_config(c)).train.loss == c.train.loss);
    CHECK(serialize_run_config(parse_run_config(serialize_run_config(c))) == serialize_run_config(c));

    CHECK_THROWS_AS(parse_run_config("epoch = 3\n"), Error);
    CHECK_THROWS_AS(parse_run_config("epochs = three\n"), Error);
    CHECK_THROWS_AS(parse_run_config("just words\n"), Error);
    CHECK_THROWS_AS(parse_run_config("loss_terms = L9\n"), Error);
    CHECK_THROWS_AS(parse_run_config("batch_size = 0\n"), Error);
  }

  TEST_CASE("join_corpus") {
    std::vector<CorpusRecord> corpus{{1, "a", "b", "c"}, {2, "d", "e", "f"}};
    std::vector<IdEmbedding> emb{{2, EmbeddingVector::from_unit({0, 1})}, {1, EmbeddingVector::from_unit({1, 0})}};
    const auto q = join_corpus(corpus, emb);
    REQUIRE(q.size() == 2);
    CHECK(q[0].image_embedding[0] == 1.0);
    CHECK(q[1].paraphrase2 == "f");
    corpus.push_back({3, "x", "y", "z"});
    CHECK_THROWS_AS(join_corpus(corpus, emb), Error);
    corpus.back() = {2, "x", std::nullopt, std::nullopt};
    CHECK_THROWS_AS(join_corpus({{1, "a", std::nullopt, "c"}}, emb), Error);
  }

  TEST_CASE("atomic write replaces the file whole") {
    TempDir d;
    write_file_atomic(d.file("x"), "first");
    write_file_atomic(d.file("x"), "second");
    CHECK(read_file(d.file("x")) == "second");
    std::size_t n = 0;
    for ([[maybe_unused]] auto& e : fs::directory_iterator(d.path)) ++n;
    CHECK(n == 1);
  }
}
