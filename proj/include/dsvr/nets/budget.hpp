#pragma once

#include <span>
#include <string>
#include <vector>

#include "dsvr/nets/model.hpp"

namespace dsvr::nets {

struct BudgetTolerance {
  double per_decoder = 0.10;
  double total = 0.05;
};

struct BudgetSolution {
  long long target_total = 0;
  std::vector<std::string> names;
  std::vector<long long> targets;
  std::vector<long long> realized;
  std::vector<DecoderWidth> widths;

  long long realized_total() const;
  double total_error() const;
  double component_error(std::size_t i) const;
};

// Thrown when even the narrowest decoders overshoot their share, or the
// search cannot land within tolerance. The message carries the per-decoder
// report.
class BudgetInfeasible : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Splits target_total across the method's decoders by `ratio`, then searches
// widths per decoder: bisection on base_width (count is monotone in it),
// followed for index decoders by bisection on the MLP hidden width to close
// the remaining gap. Deterministic.
BudgetSolution solve_budget(long long target_total, std::span<const int> ratio,
                            const ModelConfig& templ, BudgetTolerance tol = {});

// Returns `templ` with the solved widths filled in.
ModelConfig apply_budget(const BudgetSolution& solution, ModelConfig templ);

}  // namespace dsvr::nets
