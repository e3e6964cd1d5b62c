#include "parafit/harness.hpp"

#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>
#include <spdlog/spdlog.h>
#include <unordered_map>

#include "parafit/error.hpp"
#include "parafit/rng.hpp"

namespace parafit {

using nlohmann::ordered_json;

namespace {

// Encodes texts in index order; degenerate encodings come back empty.
std::vector<std::optional<EmbeddingVector>> encode_all(const TextEncoder& encoder,
                                                       std::span<const std::string* const> texts,
                                                       kernels::Exec exec) {
  std::vector<std::optional<EmbeddingVector>> out(texts.size());
  kernels::for_each_index(texts.size(), exec, [&](std::size_t i) {
    try {
      out[i] = encoder.encode(*texts[i]);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerateVector) throw;
    }
  });
  return out;
}

}  // namespace

ParaRetrievalResult eval_paraphrased_retrieval(const TextEncoder& encoder, const EmbeddingIndex& images,
                                               std::span<const ParaPair> pairs, std::size_t k,
                                               kernels::Exec exec) {
  if (pairs.empty()) throw Error(ErrorKind::kInvalidArgument, "paraphrased retrieval: no query pairs");
  if (images.size() < k) {
    throw Error(ErrorKind::kInvalidArgument, fmt::format("paraphrased retrieval: index has {} < k={} images", images.size(), k));
  }
  std::vector<const std::string*> texts;
  for (const auto& p : pairs) {
    texts.push_back(&p.original);
    texts.push_back(&p.paraphrase);
  }
  const auto enc = encode_all(encoder, texts, exec);

  std::vector<double> ao(pairs.size(), 0.0), js(pairs.size(), 0.0);
  std::vector<char> ok(pairs.size(), 0);
  kernels::for_each_index(pairs.size(), exec, [&](std::size_t i) {
    if (!enc[2 * i] || !enc[2 * i + 1]) return;
    const RankedList a = top_k(*enc[2 * i], images, k);
    const RankedList b = top_k(*enc[2 * i + 1], images, k);
    ao[i] = average_overlap_at_k(a, b, k);
    js[i] = jaccard_at_k(a, b, k);
    ok[i] = 1;
  });

  ParaRetrievalResult r;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!ok[i]) {
      spdlog::warn("paraphrased retrieval: skipping pair {} (degenerate encoding)", i);
      ++r.skipped;
      continue;
    }
    r.average_overlap += ao[i];
    r.jaccard += js[i];
    ++r.support;
  }
  if (r.support == 0) throw Error(ErrorKind::kInvalidArgument, "paraphrased retrieval: every pair was skipped");
  r.average_overlap /= static_cast<double>(r.support);
  r.jaccard /= static_cast<double>(r.support);
  return r;
}

double eval_sts(const TextEncoder& encoder, std::span<const StsPair> pairs) {
  std::vector<double> model, gold;
  model.reserve(pairs.size());
  for (const auto& p : pairs) {
    const EmbeddingVector a = encoder.encode(p.a);
    const EmbeddingVector b = encoder.encode(p.b);
    model.push_back(dot(a.values(), b.values()));
    gold.push_back(p.gold);
  }
  return spearman(model, gold);
}

AccuracyResult eval_vg(const TextEncoder& encoder, std::span<const VgCase> cases) {
  if (cases.empty()) throw Error(ErrorKind::kInvalidArgument, "vg: no cases");
  std::vector<BinaryChoiceCase> encoded;
  AccuracyResult r;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    try {
      encoded.push_back({cases[i].image, encoder.encode(cases[i].positive), encoder.encode(cases[i].negative)});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerateVector) throw;
      spdlog::warn("vg: skipping case {} (degenerate encoding)", i);
      ++r.skipped;
    }
  }
  if (encoded.empty()) throw Error(ErrorKind::kInvalidArgument, "vg: every case was skipped");
  r.accuracy = binary_choice_accuracy(encoded);
  r.support = encoded.size();
  return r;
}

CrossRetrievalResult eval_cross_retrieval(const TextEncoder& encoder, const EmbeddingIndex& images,
                                          std::span<const CaptionEntry> captions, std::size_t k,
                                          kernels::Exec exec) {
  if (captions.empty()) throw Error(ErrorKind::kInvalidArgument, "cross retrieval: no captions");
  std::unordered_map<ItemId, std::size_t> image_row;
  for (std::size_t i = 0; i < images.size(); ++i) image_row.emplace(images.ids()[i], i);
  for (const auto& c : captions) {
    if (!image_row.count(c.item_id)) {
      throw Error(ErrorKind::kInvalidArgument, fmt::format("cross retrieval: caption for unknown image {}", c.item_id));
    }
  }

  std::vector<const std::string*> texts;
  for (const auto& c : captions) texts.push_back(&c.text);
  const auto enc = encode_all(encoder, texts, exec);

  CrossRetrievalResult r;
  std::vector<std::pair<ItemId, EmbeddingVector>> caption_entries;
  std::unordered_map<ItemId, std::unordered_set<ItemId>> gold_captions;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    if (!enc[i]) {
      spdlog::warn("cross retrieval: skipping caption {} (degenerate encoding)", i);
      continue;
    }
    const auto pos = static_cast<ItemId>(i);
    caption_entries.emplace_back(pos, *enc[i]);
    gold_captions[captions[i].item_id].insert(pos);
  }
  if (caption_entries.empty()) throw Error(ErrorKind::kInvalidArgument, "cross retrieval: every caption was skipped");

  // caption -> image
  double image_sum = 0.0;
  for (const auto& [pos, vec] : caption_entries) {
    image_sum += recall_at_k(top_k(vec, images, k, exec), {captions[pos].item_id}, k);
  }
  r.image_support = caption_entries.size();
  r.image_recall = image_sum / static_cast<double>(r.image_support);

  // image -> captions
  const EmbeddingIndex caption_index = build_index(caption_entries);
  double text_sum = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ItemId id = images.ids()[i];
    const auto it = gold_captions.find(id);
    if (it == gold_captions.end()) continue;
    const auto row = images.matrix().row(i);
    const EmbeddingVector q = EmbeddingVector::unchecked(std::vector<double>(row.begin(), row.end()));
    text_sum += recall_at_k(top_k(q, caption_index, k, exec), it->second, k);
    ++r.text_support;
  }
  r.text_recall = text_sum / static_cast<double>(r.text_support);
  return r;
}

AccuracyResult eval_classification(const TextEncoder& encoder, std::span<const ClassPrompt> classes,
                                   std::span<const ClassificationCase> cases) {
  std::vector<std::pair<ItemId, EmbeddingVector>> entries;
  for (const auto& c : classes) entries.emplace_back(c.class_id, encoder.encode(c.text));
  const EmbeddingIndex index = build_index(entries);
  return {top1_accuracy(cases, index), cases.size(), 0};
}

// --- eval data files ---

namespace {

std::vector<ordered_json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<ordered_json> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (trim(line).empty()) continue;
    auto j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(ErrorKind::kMalformedInput, fmt::format("{}:{}: not a JSON object", path.string(), lineno));
    }
    out.push_back(std::move(j));
  }
  return out;
}

template <typename T>
T field(const ordered_json& j, const char* key, const std::filesystem::path& path) {
  if (!j.contains(key)) throw Error(ErrorKind::kMalformedInput, fmt::format("{}: record lacks '{}'", path.string(), key));
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::kMalformedInput, fmt::format("{}: field '{}' has the wrong type", path.string(), key));
  }
}

void write_jsonl(const std::filesystem::path& path, const std::vector<ordered_json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  write_file_atomic(path.string(), out);
}

}  // namespace

EvalData load_eval_data(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  EvalData d;
  d.images = load_embeddings((root / "images.pemb").string());
  const auto each = [&](const char* name, auto&& fn) {
    const fs::path p = root / name;
    if (!fs::exists(p)) return;
    for (const auto& j : read_jsonl(p)) fn(j, p);
  };
  each("para_pairs.jsonl", [&](const ordered_json& j, const fs::path& p) {
    d.para_pairs.push_back({field<std::string>(j, "original", p), field<std::string>(j, "paraphrase", p)});
  });
  each("sts.jsonl", [&](const ordered_json& j, const fs::path& p) {
    const auto task = field<std::string>(j, "task", p);
    auto it = std::find_if(d.sts.begin(), d.sts.end(), [&](const StsTask& t) { return t.name == task; });
    if (it == d.sts.end()) it = d.sts.insert(d.sts.end(), StsTask{task, {}});
    it->pairs.push_back({field<std::string>(j, "a", p), field<std::string>(j, "b", p), field<double>(j, "score", p)});
  });
  for (auto [name, dst] : {std::pair{"vg_r.jsonl", &d.vg_r}, std::pair{"vg_a.jsonl", &d.vg_a}}) {
    each(name, [&](const ordered_json& j, const fs::path& p) {
      dst->push_back({field<ItemId>(j, "id", p), field<std::string>(j, "positive", p), field<std::string>(j, "negative", p)});
    });
  }
  each("classes.jsonl", [&](const ordered_json& j, const fs::path& p) {
    d.classes.push_back({field<ItemId>(j, "class", p), field<std::string>(j, "text", p)});
  });
  each("classify.jsonl", [&](const ordered_json& j, const fs::path& p) {
    d.classify.push_back({field<ItemId>(j, "id", p), field<ItemId>(j, "class", p)});
  });
  each("captions.jsonl", [&](const ordered_json& j, const fs::path& p) {
    d.captions.push_back({field<ItemId>(j, "id", p), field<std::string>(j, "text", p)});
  });
  return d;
}

void save_eval_data(const std::string& dir, const EvalData& d) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  fs::create_directories(root);
  save_embeddings((root / "images.pemb").string(), d.images);
  std::vector<ordered_json> rows;
  const auto flush = [&](const char* name) {
    if (!rows.empty()) write_jsonl(root / name, rows);
    rows.clear();
  };
  for (const auto& p : d.para_pairs) rows.push_back({{"original", p.original}, {"paraphrase", p.paraphrase}});
  flush("para_pairs.jsonl");
  for (const auto& t : d.sts) {
    for (const auto& p : t.pairs) rows.push_back({{"task", t.name}, {"a", p.a}, {"b", p.b}, {"score", p.gold}});
  }
  flush("sts.jsonl");
  for (const auto& c : d.vg_r) rows.push_back({{"id", c.image}, {"positive", c.positive}, {"negative", c.negative}});
  flush("vg_r.jsonl");
  for (const auto& c : d.vg_a) rows.push_back({{"id", c.image}, {"positive", c.positive}, {"negative", c.negative}});
  flush("vg_a.jsonl");
  for (const auto& c : d.classes) rows.push_back({{"class", c.class_id}, {"text", c.text}});
  flush("classes.jsonl");
  for (const auto& c : d.classify) rows.push_back({{"id", c.image}, {"class", c.gold_class}});
  flush("classify.jsonl");
  for (const auto& c : d.captions) rows.push_back({{"id", c.item_id}, {"text", c.text}});
  flush("captions.jsonl");
}

Suite parse_suite(std::string_view name) {
  if (name == "para") return Suite::kPara;
  if (name == "sts") return Suite::kSts;
  if (name == "vg") return Suite::kVg;
  if (name == "retrieval") return Suite::kRetrieval;
  if (name == "classify") return Suite::kClassify;
  if (name == "all") return Suite::kAll;
  throw Error(ErrorKind::kInvalidArgument, fmt::format("unknown suite '{}'", name));
}

std::optional<double> EvalReport::value(std::string_view name) const {
  for (const auto& m : metrics) {
    if (m.name == name) return m.value;
  }
  return std::nullopt;
}

EvalReport evaluate(const TextEncoder& encoder, const EvalData& data, const EvalOptions& opt) {
  EvalReport report;
  const auto wants = [&](Suite s) { return (opt.suites & static_cast<unsigned>(s)) != 0; };
  const auto missing = [&](const char* what) {
    if (opt.strict) throw Error(ErrorKind::kInvalidArgument, fmt::format("eval: no data for suite {}", what));
    spdlog::info("eval: no data for suite {}, skipping", what);
  };
  std::unordered_map<ItemId, const EmbeddingVector*> image_by_id;
  for (const auto& [id, v] : data.images) image_by_id.emplace(id, &v);
  const auto image = [&](ItemId id) -> const EmbeddingVector& {
    const auto it = image_by_id.find(id);
    if (it == image_by_id.end()) throw Error(ErrorKind::kInvalidArgument, fmt::format("eval: unknown image id {}", id));
    return *it->second;
  };

  if (wants(Suite::kPara)) {
    if (data.para_pairs.empty()) {
      missing("para");
    } else {
      const EmbeddingIndex index = build_index(data.images);
      const auto r = eval_paraphrased_retrieval(encoder, index, data.para_pairs, opt.para_k, opt.exec);
      report.metrics.push_back({fmt::format("para/AO@{}", opt.para_k), r.average_overlap, r.support});
      report.metrics.push_back({fmt::format("para/JS@{}", opt.para_k), r.jaccard, r.support});
    }
  }
  if (wants(Suite::kVg)) {
    const std::pair<const char*, const std::vector<VgRecord>*> sets[] = {{"vg-r", &data.vg_r}, {"vg-a", &data.vg_a}};
    for (auto [name, records] : sets) {
      if (records->empty()) {
        missing(name);
        continue;
      }
      std::vector<VgCase> cases;
      for (const auto& c : *records) cases.push_back({image(c.image), c.positive, c.negative});
      const auto r = eval_vg(encoder, cases);
      report.metrics.push_back({fmt::format("{}/acc", name), r.accuracy, r.support});
    }
  }
  if (wants(Suite::kSts)) {
    if (data.sts.empty()) {
      missing("sts");
    } else {
      double sum = 0.0;
      for (const auto& t : data.sts) {
        const double rho = eval_sts(encoder, t.pairs);
        report.metrics.push_back({"sts/" + t.name, rho, t.pairs.size()});
        sum += rho;
      }
      report.metrics.push_back({"sts/avg", sum / static_cast<double>(data.sts.size()), data.sts.size()});
    }
  }
  if (wants(Suite::kClassify)) {
    if (data.classes.empty() || data.classify.empty()) {
      missing("classify");
    } else {
      std::vector<ClassificationCase> cases;
      for (const auto& c : data.classify) cases.push_back({image(c.image), c.gold_class});
      const auto r = eval_classification(encoder, data.classes, cases);
      report.metrics.push_back({"classify/acc", r.accuracy, r.support});
    }
  }
  if (wants(Suite::kRetrieval)) {
    if (data.captions.empty()) {
      missing("retrieval");
    } else {
      std::unordered_set<ItemId> captioned;
      for (const auto& c : data.captions) captioned.insert(c.item_id);
      std::vector<IdEmbedding> subset;
      for (const auto& e : data.images) {
        if (captioned.count(e.first)) subset.push_back(e);
      }
      const EmbeddingIndex index = build_index(subset);
      const auto r = eval_cross_retrieval(encoder, index, data.captions, opt.recall_k, opt.exec);
      report.metrics.push_back({fmt::format("text-retrieval/R@{}", opt.recall_k), r.text_recall, r.text_support});
      report.metrics.push_back({fmt::format("image-retrieval/R@{}", opt.recall_k), r.image_recall, r.image_support});
    }
  }
  report.metadata.emplace_back("aggregation", "arithmetic mean over query pairs / cases");
  return report;
}

std::string report_to_json(const EvalReport& report) {
  ordered_json j;
  ordered_json meta = ordered_json::object();
  for (const auto& [k, v] : report.metadata) meta[k] = v;
  j["metadata"] = meta;
  ordered_json metrics = ordered_json::array();
  for (const auto& m : report.metrics) metrics.push_back({{"name", m.name}, {"value", m.value}, {"support", m.support}});
  j["metrics"] = metrics;
  return j.dump(2) + "\n";
}

namespace {

std::string find_prefixed(const EvalReport& r, std::string_view prefix) {
  for (const auto& m : r.metrics) {
    if (m.name.starts_with(prefix)) return fmt::format("{:.1f}", 100.0 * m.value);
  }
  return "-";
}

}  // namespace

std::string report_to_table(const EvalReport& report) {
  const std::pair<const char*, const char*> columns[] = {
      {"Para AO", "para/AO@"}, {"Para JS", "para/JS@"},        {"VG-R Acc", "vg-r/acc"},
      {"VG-A Acc", "vg-a/acc"}, {"STS Avg", "sts/avg"},         {"Cls Acc", "classify/acc"},
      {"Text R", "text-retrieval/R@"}, {"Image R", "image-retrieval/R@"},
  };
  std::string head, line, vals;
  for (auto [title, prefix] : columns) {
    head += fmt::format("{:>10} ", title);
    line += fmt::format("{:>10} ", "--------");
    vals += fmt::format("{:>10} ", find_prefixed(report, prefix));
  }
  return head + "\n" + line + "\n" + vals + "\n";
}

std::string config_hash(const TrainConfig& config, bool include_loss) {
  RunConfig rc;
  rc.train = config;
  std::string text = serialize_run_config(rc);
  if (!include_loss) {
    std::string filtered;
    std::istringstream in(text);
    std::string l;
    while (std::getline(in, l)) {
      if (l.starts_with("loss_terms")) continue;
      filtered += l + "\n";
    }
    text = filtered;
  }
  return fmt::format("{:016x}", fnv1a64(text));
}

std::vector<AblationRow> run_ablation(std::span<const QuadrupleExample> dataset, const TrainConfig& base,
                                      const EncoderParams& init, const EvalData& eval_data,
                                      std::span<const LossConfig> configs, const EvalOptions& options) {
  const std::string shared = config_hash(base, false);
  const std::string init_hash = fmt::format("{:016x}", fnv1a64(serialize_checkpoint(init)));
  std::vector<AblationRow> rows;
  for (const LossConfig& loss : configs) {
    AblationRow row;
    row.loss = loss;
    try {
      TrainConfig cfg = base;
      cfg.loss = loss;
      TrainResult trained = train(dataset, cfg, init);
      row.steps = trained.history.steps.size();
      if (!trained.history.steps.empty()) {
        row.first_loss = trained.history.steps.front().loss.total;
        row.final_loss = trained.history.steps.back().loss.total;
      }
      if (trained.history.aborted) throw Error(ErrorKind::kDiverged, trained.history.abort_reason);
      const HashedBowEncoder encoder(std::move(trained.params));
      EvalReport report = evaluate(encoder, eval_data, options);
      report.metadata.emplace_back("loss", loss.label());
      report.metadata.emplace_back("config_hash", config_hash(cfg));
      report.metadata.emplace_back("shared_config_hash", shared);
      report.metadata.emplace_back("init_hash", init_hash);
      report.metadata.emplace_back("seed", std::to_string(base.seed));
      row.report = std::move(report);
    } catch (const std::exception& e) {
      spdlog::error("ablation row {} failed: {}", loss.label(), e.what());
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_to_json(std::span<const AblationRow> rows) {
  ordered_json out = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json j;
    j["loss"] = r.loss.label();
    j["steps"] = r.steps;
    j["first_loss"] = r.first_loss;
    j["final_loss"] = r.final_loss;
    if (r.report) {
      j["report"] = ordered_json::parse(report_to_json(*r.report));
    } else {
      j["error"] = r.error;
    }
    out.push_back(std::move(j));
  }
  return ordered_json{{"rows", out}}.dump(2) + "\n";
}

}  // namespace parafit
