#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parafit/datamodel.hpp"
#include "parafit/kernels.hpp"

namespace parafit {

// Image-text terms pair the image matrix with one text level; L2 pairs
// captions with first paraphrases, L3 first with second paraphrases.
enum class LossTerm : int { kL1Caption = 0, kL1Para1, kL1Para2, kL2, kL3 };

inline constexpr std::array<LossTerm, 5> kAllTerms = {LossTerm::kL1Caption, LossTerm::kL1Para1,
                                                      LossTerm::kL1Para2, LossTerm::kL2, LossTerm::kL3};

// "L1", "L1'", "L1''", "L2", "L3".
std::string_view term_name(LossTerm t);
// Accepts the names above; throws Error(kInvalidArgument) otherwise.
LossTerm parse_term(std::string_view name);

class LossConfig {
 public:
  LossConfig() = default;
  // Throws if `terms` is empty or temperature <= 0. Duplicates collapse.
  LossConfig(std::vector<LossTerm> terms, double temperature = 0.07, bool symmetric = true);

  // {L1'', L2, L3}
  static LossConfig paraphrase_robust(double temperature = 0.07);
  // The eight loss combinations of the ablation table, in table order.
  static std::vector<LossConfig> ablation_rows(double temperature = 0.07);

  bool has(LossTerm t) const noexcept { return (mask_ >> static_cast<int>(t)) & 1u; }
  std::vector<LossTerm> terms() const;
  double temperature() const noexcept { return temperature_; }
  bool symmetric() const noexcept { return symmetric_; }
  // e.g. "L1''+L2+L3"
  std::string label() const;

  bool operator==(const LossConfig&) const = default;

 private:
  unsigned mask_ = 1u << static_cast<int>(LossTerm::kL1Para2) | 1u << static_cast<int>(LossTerm::kL2) |
                   1u << static_cast<int>(LossTerm::kL3);
  double temperature_ = 0.07;
  bool symmetric_ = true;
};

struct InfoNceOptions {
  double temperature = 0.07;
  bool symmetric = true;  // false: only the A -> B direction
  kernels::Exec exec = kernels::Exec::kSerial;
};

inline constexpr double kLossUnitTolerance = 1e-4;

// Mean cross-entropy of matching row i of A to row i of B over the softmax of
// dot(A_i, B_j) / tau, averaged with the B -> A direction when symmetric.
double info_nce(const Matrix& a, const Matrix& b, const InfoNceOptions& opts = {});

struct InfoNceResult {
  double loss = 0.0;
  Matrix grad_a;
  Matrix grad_b;
};

InfoNceResult info_nce_grad(const Matrix& a, const Matrix& b, const InfoNceOptions& opts = {});

struct LossBreakdown {
  std::vector<std::pair<LossTerm, double>> terms;
  double total = 0.0;

  std::optional<double> value(LossTerm t) const;
};

LossBreakdown total_loss(const Batch& batch, const LossConfig& config,
                         kernels::Exec exec = kernels::Exec::kSerial);

// Gradients of the total with respect to the three text matrices; image
// gradients are not produced (the image side is frozen).
struct TotalLossGrad {
  LossBreakdown breakdown;
  Matrix grad_captions;
  Matrix grad_para1;
  Matrix grad_para2;
};

TotalLossGrad total_loss_grad(const Batch& batch, const LossConfig& config,
                              kernels::Exec exec = kernels::Exec::kSerial);

}  // namespace parafit
