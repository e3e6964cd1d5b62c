#include "parafit/io.hpp"

#include <bit>
#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unistd.h>
#include <unordered_set>

#include "parafit/error.hpp"

namespace parafit {

using nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += fmt::format(".tmp.{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorKind::kIo, "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::kIo, "cannot rename into " + path);
  }
}

// --- corpus ---

LoadedCorpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open corpus " + path);
  LoadedCorpus out;
  std::unordered_set<ItemId> ids;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (trim(line).empty()) continue;
    const auto bad = [&](const std::string& why) {
      return Error(ErrorKind::kMalformedInput, fmt::format("{}:{}: {}", path, lineno, why));
    };
    const auto j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw bad("not a JSON object");
    if (!j.contains("id") || !j["id"].is_number_integer()) throw bad("missing integer 'id'");
    const auto id = j["id"].get<std::int64_t>();
    if (id < 0 || id > std::numeric_limits<ItemId>::max()) throw bad("id out of range");
    if (!j.contains("caption") || !j["caption"].is_string()) throw bad("missing string 'caption'");
    for (const auto& [key, value] : j.items()) {
      if (key != "id" && key != "caption" && key != "paraphrase1" && key != "paraphrase2") {
        throw bad("unknown field '" + key + "'");
      }
    }
    CorpusRecord r;
    r.id = static_cast<ItemId>(id);
    r.caption = j["caption"].get<std::string>();
    for (const char* key : {"paraphrase1", "paraphrase2"}) {
      if (!j.contains(key)) continue;
      if (!j[key].is_string()) throw bad(fmt::format("'{}' must be a string", key));
      (std::string_view(key) == "paraphrase1" ? r.paraphrase1 : r.paraphrase2) = j[key].get<std::string>();
    }
    if (!ids.insert(r.id).second) {
      throw Error(ErrorKind::kDuplicateId, fmt::format("{}:{}: duplicate id {}", path, lineno, r.id));
    }
    if (trim(r.caption).empty()) out.warnings.push_back(fmt::format("line {}: empty caption", lineno));
    if (r.paraphrase1 && trim(*r.paraphrase1).empty()) out.warnings.push_back(fmt::format("line {}: empty paraphrase1", lineno));
    if (r.paraphrase2 && trim(*r.paraphrase2).empty()) out.warnings.push_back(fmt::format("line {}: empty paraphrase2", lineno));
    out.records.push_back(std::move(r));
  }
  return out;
}

std::string serialize_corpus(const std::vector<CorpusRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    ordered_json j;
    j["id"] = r.id;
    j["caption"] = r.caption;
    if (r.paraphrase1) j["paraphrase1"] = *r.paraphrase1;
    if (r.paraphrase2) j["paraphrase2"] = *r.paraphrase2;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const std::string& path, const std::vector<CorpusRecord>& records) {
  write_file_atomic(path, serialize_corpus(records));
}

// --- binary helpers ---

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::string& out, double v) { put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool has(std::size_t n) const { return bytes_.size() - pos_ >= n; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint32_t u32() {
    if (!has(4)) throw Error(ErrorKind::kTruncatedPayload, "truncated payload");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }

  void magic(std::string_view expected) {
    const std::string_view head = std::string_view(bytes_).substr(pos_, expected.size());
    if (head.size() < expected.size() && expected.starts_with(head)) {
      throw Error(ErrorKind::kTruncatedPayload, "truncated payload: file ends inside the magic");
    }
    if (head != expected) {
      throw Error(ErrorKind::kBadMagic, fmt::format("bad magic, expected {}", expected));
    }
    pos_ += expected.size();
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

// --- embeddings ---

std::string serialize_embeddings(const std::vector<IdEmbedding>& entries) {
  const std::size_t dim = entries.empty() ? 0 : entries.front().second.dim();
  std::string out = "PEMB";
  put_u32(out, static_cast<std::uint32_t>(entries.size()));
  put_u32(out, static_cast<std::uint32_t>(dim));
  for (const auto& [id, v] : entries) {
    if (v.dim() != dim) throw Error(ErrorKind::kInvalidArgument, "save_embeddings: mixed dimensions");
    put_u32(out, id);
    for (double x : v.values()) put_f32(out, x);
  }
  return out;
}

std::vector<IdEmbedding> parse_embeddings(const std::string& bytes) {
  Reader in(bytes);
  in.magic("PEMB");
  const std::uint32_t count = in.u32();
  const std::uint32_t dim = in.u32();
  const std::size_t record = 4 + 4 * static_cast<std::size_t>(dim);
  if (in.remaining() < record * count) {
    throw Error(ErrorKind::kTruncatedPayload,
                fmt::format("truncated payload: header declares {} records of dim {}", count, dim));
  }
  if (in.remaining() != record * count) {
    throw Error(ErrorKind::kCountMismatch,
                fmt::format("count mismatch: {} trailing bytes after {} records", in.remaining() - record * count, count));
  }
  std::vector<IdEmbedding> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const ItemId id = in.u32();
    std::vector<double> v(dim);
    for (double& x : v) x = in.f32();
    try {
      out.emplace_back(id, EmbeddingVector::from_unit(std::move(v), kFileUnitTolerance));
    } catch (const Error& e) {
      throw Error(ErrorKind::kNonUnitRow, fmt::format("record {} (id {}): {}", i, id, e.what()));
    }
  }
  return out;
}

std::vector<IdEmbedding> load_embeddings(const std::string& path) { return parse_embeddings(read_file(path)); }

void save_embeddings(const std::string& path, const std::vector<IdEmbedding>& entries) {
  write_file_atomic(path, serialize_embeddings(entries));
}

// --- checkpoint ---

std::string serialize_checkpoint(const EncoderParams& p) {
  validate_params(p);
  std::string out = "PENC";
  put_u32(out, p.vocab);
  put_u32(out, p.hidden);
  put_u32(out, p.dim);
  for (double x : p.token_table.data) put_f32(out, x);
  for (double x : p.projection.data) put_f32(out, x);
  return out;
}

EncoderParams parse_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  in.magic("PENC");
  EncoderParams p;
  p.vocab = in.u32();
  p.hidden = in.u32();
  p.dim = in.u32();
  const std::size_t floats =
      static_cast<std::size_t>(p.vocab) * p.hidden + static_cast<std::size_t>(p.hidden) * p.dim;
  if (in.remaining() < 4 * floats) throw Error(ErrorKind::kTruncatedPayload, "truncated payload in checkpoint");
  if (in.remaining() != 4 * floats) throw Error(ErrorKind::kCountMismatch, "checkpoint has trailing bytes");
  p.token_table = Matrix(p.vocab, p.hidden);
  p.projection = Matrix(p.hidden, p.dim);
  for (double& x : p.token_table.data) x = in.f32();
  for (double& x : p.projection.data) x = in.f32();
  validate_params(p);
  return p;
}

EncoderParams load_checkpoint(const std::string& path) { return parse_checkpoint(read_file(path)); }

void save_checkpoint(const std::string& path, const EncoderParams& params) {
  write_file_atomic(path, serialize_checkpoint(params));
}

// --- run config ---

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream ss(value);
  T out{};
  ss >> out;
  if (!ss || !(ss >> std::ws).eof()) {
    throw Error(ErrorKind::kMalformedInput, fmt::format("config: '{}' has invalid value '{}'", key, value));
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw Error(ErrorKind::kMalformedInput, fmt::format("config: '{}' must be true or false", key));
}

std::vector<LossTerm> parse_terms(const std::string& value) {
  std::vector<std::string> names;
  if (!value.empty() && value.front() == '[') {
    const auto j = nlohmann::json::parse(value, nullptr, false);
    if (j.is_discarded() || !j.is_array()) throw Error(ErrorKind::kMalformedInput, "config: loss_terms is not a JSON list");
    for (const auto& e : j) {
      if (!e.is_string()) throw Error(ErrorKind::kMalformedInput, "config: loss_terms entries must be strings");
      names.push_back(e.get<std::string>());
    }
  } else {
    std::stringstream ss(value);
    std::string name;
    while (std::getline(ss, name, ',')) names.push_back(trim(name));
  }
  std::vector<LossTerm> out;
  for (const auto& n : names) out.push_back(parse_term(n));
  return out;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in(text);
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kMalformedInput, fmt::format("config line {}: expected key = value", lineno));
    }
    entries.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }

  RunConfig c;
  for (const auto& [k, v] : entries) {
    if (k != "preset") continue;
    if (v != "large-batch-finetune") throw Error(ErrorKind::kMalformedInput, "config: unknown preset '" + v + "'");
    c.train = TrainConfig::large_batch_finetune();
  }

  std::vector<LossTerm> terms = c.train.loss.terms();
  double temperature = c.train.loss.temperature();
  bool symmetric = c.train.loss.symmetric();
  for (const auto& [k, v] : entries) {
    if (k == "preset") continue;
    if (k == "epochs") c.train.epochs = parse_number<int>(k, v);
    else if (k == "batch_size") c.train.batch_size = parse_number<std::size_t>(k, v);
    else if (k == "learning_rate") c.train.adam.learning_rate = parse_number<double>(k, v);
    else if (k == "weight_decay") c.train.adam.weight_decay = parse_number<double>(k, v);
    else if (k == "beta1") c.train.adam.beta1 = parse_number<double>(k, v);
    else if (k == "beta2") c.train.adam.beta2 = parse_number<double>(k, v);
    else if (k == "epsilon") c.train.adam.epsilon = parse_number<double>(k, v);
    else if (k == "seed") c.train.seed = parse_number<std::uint64_t>(k, v);
    else if (k == "loss_terms") terms = parse_terms(v);
    else if (k == "temperature") temperature = parse_number<double>(k, v);
    else if (k == "symmetric") symmetric = parse_bool(k, v);
    else if (k == "vocab_size") c.vocab_size = parse_number<std::uint32_t>(k, v);
    else if (k == "hidden_dim") c.hidden_dim = parse_number<std::uint32_t>(k, v);
    else if (k == "init_seed") c.init_seed = parse_number<std::uint64_t>(k, v);
    else if (k == "parallel") c.train.exec = parse_bool(k, v) ? kernels::Exec::kParallel : kernels::Exec::kSerial;
    else if (k == "threads") c.threads = parse_number<int>(k, v);
    else throw Error(ErrorKind::kMalformedInput, fmt::format("config: unknown key '{}'", k));
  }
  c.train.loss = LossConfig(terms, temperature, symmetric);
  validate_train_config(c.train);
  if (c.vocab_size < 2) throw Error(ErrorKind::kInvalidArgument, "config: vocab_size must be >= 2");
  if (c.hidden_dim < 1) throw Error(ErrorKind::kInvalidArgument, "config: hidden_dim must be >= 1");
  return c;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_file(path)); }

std::string serialize_run_config(const RunConfig& c) {
  nlohmann::json terms = nlohmann::json::array();
  for (LossTerm t : c.train.loss.terms()) terms.push_back(std::string(term_name(t)));
  std::string out;
  out += fmt::format("epochs = {}\n", c.train.epochs);
  out += fmt::format("batch_size = {}\n", c.train.batch_size);
  out += fmt::format("learning_rate = {}\n", c.train.adam.learning_rate);
  out += fmt::format("weight_decay = {}\n", c.train.adam.weight_decay);
  out += fmt::format("beta1 = {}\n", c.train.adam.beta1);
  out += fmt::format("beta2 = {}\n", c.train.adam.beta2);
  out += fmt::format("epsilon = {}\n", c.train.adam.epsilon);
  out += fmt::format("seed = {}\n", c.train.seed);
  out += fmt::format("loss_terms = {}\n", terms.dump());
  out += fmt::format("temperature = {}\n", c.train.loss.temperature());
  out += fmt::format("symmetric = {}\n", c.train.loss.symmetric());
  out += fmt::format("vocab_size = {}\n", c.vocab_size);
  out += fmt::format("hidden_dim = {}\n", c.hidden_dim);
  out += fmt::format("init_seed = {}\n", c.init_seed);
  out += fmt::format("parallel = {}\n", c.train.exec == kernels::Exec::kParallel);
  out += fmt::format("threads = {}\n", c.threads);
  return out;
}

std::string serialize_history(const TrainHistory& history) {
  std::string out;
  for (const auto& s : history.steps) {
    ordered_json j;
    j["step"] = s.step;
    j["lr"] = s.lr;
    for (const auto& [t, v] : s.loss.terms) j[std::string(term_name(t))] = v;
    j["total"] = s.loss.total;
    j["rows"] = s.rows;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<QuadrupleExample> join_corpus(const std::vector<CorpusRecord>& corpus,
                                          const std::vector<IdEmbedding>& embeddings) {
  std::unordered_map<ItemId, const EmbeddingVector*> by_id;
  for (const auto& [id, v] : embeddings) by_id.emplace(id, &v);
  std::vector<QuadrupleExample> out;
  out.reserve(corpus.size());
  for (const auto& r : corpus) {
    const auto it = by_id.find(r.id);
    if (it == by_id.end()) throw Error(ErrorKind::kInvalidArgument, fmt::format("no embedding for item {}", r.id));
    if (!r.paraphrase1 || !r.paraphrase2) {
      throw Error(ErrorKind::kInvalidArgument, fmt::format("item {} lacks paraphrases; run `paraphrase` first", r.id));
    }
    out.push_back({r.id, *it->second, r.caption, *r.paraphrase1, *r.paraphrase2});
  }
  return out;
}

}  // namespace parafit
