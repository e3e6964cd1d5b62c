#include "parafit/datamodel.hpp"

#include <cmath>
#include <fmt/format.h>
#include <unordered_map>
#include <unordered_set>

#include "parafit/error.hpp"

namespace parafit {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kDegenerateVector: return "degenerate vector";
    case ErrorKind::kDiverged: return "diverged";
    case ErrorKind::kBadMagic: return "bad magic";
    case ErrorKind::kTruncatedPayload: return "truncated payload";
    case ErrorKind::kCountMismatch: return "count mismatch";
    case ErrorKind::kNonUnitRow: return "non-unit row";
    case ErrorKind::kMalformedInput: return "malformed input";
    case ErrorKind::kDuplicateId: return "duplicate id";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kRewriteFailed: return "rewrite failed";
  }
  return "unknown";
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

EmbeddingVector normalize(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorKind::kDegenerateVector, "degenerate vector: non-finite entry");
  }
  const double n = l2_norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorKind::kDegenerateVector, "degenerate vector: zero norm");
  }
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return EmbeddingVector(std::move(out));
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<double> values, double tolerance) {
  for (double x : values) {
    if (!std::isfinite(x)) throw Error(ErrorKind::kNonUnitRow, "embedding has non-finite entry");
  }
  const double n = l2_norm(values);
  if (std::abs(n - 1.0) > tolerance) {
    throw Error(ErrorKind::kNonUnitRow, fmt::format("embedding norm {} is not 1", n));
  }
  return EmbeddingVector(std::move(values));
}

Matrix stack_rows(std::span<const EmbeddingVector> rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].dim() != m.cols) throw Error(ErrorKind::kInvalidArgument, "stack_rows: dimension mismatch");
    auto src = rows[i].values();
    std::copy(src.begin(), src.end(), m.row(i).begin());
  }
  return m;
}

namespace {

void check_unit_rows(const Matrix& m, const char* name, double tolerance) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double n = l2_norm(m.row(i));
    if (!std::isfinite(n) || std::abs(n - 1.0) > tolerance) {
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("batch {} row {} has norm {}", name, i, n));
    }
  }
}

}  // namespace

void validate_batch(const Batch& b, double tolerance) {
  const Matrix* all[] = {&b.images, &b.captions, &b.para1, &b.para2};
  for (const Matrix* m : all) {
    if (m->rows != b.images.rows || m->cols != b.images.cols) {
      throw Error(ErrorKind::kInvalidArgument, "batch matrices disagree in shape");
    }
  }
  check_unit_rows(b.images, "images", tolerance);
  check_unit_rows(b.captions, "captions", tolerance);
  check_unit_rows(b.para1, "para1", tolerance);
  check_unit_rows(b.para2, "para2", tolerance);
}

RankedList::RankedList(std::vector<ItemId> items) : items_(std::move(items)) {
  std::unordered_set<ItemId> seen;
  for (ItemId id : items_) {
    if (!seen.insert(id).second) {
      throw Error(ErrorKind::kDuplicateId, fmt::format("ranked list repeats id {}", id));
    }
  }
}

std::string trim(std::string_view text) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  std::size_t b = 0, e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return std::string(text.substr(b, e - b));
}

std::vector<Violation> validate_corpus(std::span<const QuadrupleExample> records) {
  std::vector<Violation> out;
  std::unordered_map<ItemId, std::size_t> first_seen;
  std::size_t dim = records.empty() ? 0 : records.front().image_embedding.dim();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (auto [it, fresh] = first_seen.emplace(r.item_id, i); !fresh) {
      out.push_back({Violation::Kind::kDuplicateId, i,
                     fmt::format("duplicate id {} (first at record {})", r.item_id, it->second)});
    }
    const std::pair<const char*, const std::string*> texts[] = {
        {"caption", &r.caption}, {"paraphrase1", &r.paraphrase1}, {"paraphrase2", &r.paraphrase2}};
    for (auto [name, text] : texts) {
      if (trim(*text).empty()) {
        out.push_back({Violation::Kind::kEmptyText, i, fmt::format("record {} has empty {}", r.item_id, name)});
      }
    }
    auto v = r.image_embedding.values();
    bool finite = true;
    for (double x : v) finite = finite && std::isfinite(x);
    if (!finite) {
      out.push_back({Violation::Kind::kNonFinite, i, fmt::format("record {} embedding is non-finite", r.item_id)});
      continue;
    }
    if (v.size() != dim) {
      out.push_back({Violation::Kind::kDimMismatch, i,
                     fmt::format("record {} embedding has dim {}, expected {}", r.item_id, v.size(), dim)});
    }
    const double n = l2_norm(v);
    if (std::abs(n - 1.0) > kUnitNormTolerance) {
      out.push_back({Violation::Kind::kNonUnitNorm, i,
                     fmt::format("record {} embedding has non-unit norm {}", r.item_id, n)});
    }
  }
  return out;
}

}  // namespace parafit
