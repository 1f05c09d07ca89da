#include "dsvr/nets/budget.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace dsvr::nets {

namespace {

constexpr int kMinBase = 4;
constexpr int kMinHidden = 16;

// Largest x in [lo, inf) with f(x) <= target, or lo - 1 when f(lo) > target.
// f must be non-decreasing.
int largest_within(int lo, long long target, const std::function<long long(int)>& f) {
  if (f(lo) > target) return lo - 1;
  int hi = lo;
  while (f(hi) <= target) {
    lo = hi;
    if (hi > (1 << 24)) return hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    (f(mid) <= target ? lo : hi) = mid;
  }
  return lo;
}

// Chooses between x and x+1 by distance to target.
int nearest(int x, long long target, const std::function<long long(int)>& f) {
  return std::llabs(f(x + 1) - target) < std::llabs(f(x) - target) ? x + 1 : x;
}

}  // namespace

long long BudgetSolution::realized_total() const {
  return std::accumulate(realized.begin(), realized.end(), 0LL);
}

double BudgetSolution::total_error() const {
  return std::abs(static_cast<double>(realized_total() - target_total)) / target_total;
}

double BudgetSolution::component_error(std::size_t i) const {
  return std::abs(static_cast<double>(realized[i] - targets[i])) / targets[i];
}

BudgetSolution solve_budget(long long target_total, std::span<const int> ratio,
                            const ModelConfig& templ, BudgetTolerance tol) {
  templ.arch.validate();
  templ.posenc.validate();
  if (target_total < 100000) throw ConfigError("budget target must be at least 1e5 parameters");
  const auto names = decoder_names(templ.method);
  if (ratio.size() != names.size()) {
    throw ConfigError("budget ratio needs " + std::to_string(names.size()) + " entries");
  }
  const long long ratio_sum = std::accumulate(ratio.begin(), ratio.end(), 0LL);
  for (int r : ratio) {
    if (r <= 0) throw ConfigError("budget ratio entries must be positive");
  }

  BudgetSolution sol;
  sol.target_total = target_total;
  sol.names = names;
  std::ostringstream report;
  bool feasible = true;

  for (std::size_t i = 0; i < names.size(); ++i) {
    const long long target = std::llround(static_cast<double>(target_total) * ratio[i] / ratio_sum);
    sol.targets.push_back(target);

    const bool index_driven =
        templ.method == Method::Nerv || (templ.method == Method::Dual && i > 0);
    DecoderWidth width;
    long long count = 0;
    if (!index_driven) {
      auto f = [&](int base) { return count_hfd_params(templ.arch, {base, 0}); };
      int base = largest_within(kMinBase, target, f);
      base = base < kMinBase ? kMinBase : nearest(base, target, f);
      width = {base, 0};
      count = f(base);
    } else {
      int input_dim = templ.posenc.encoded_length();
      if (templ.method == Method::Dual) {
        input_dim = i == 1 ? templ.posenc.low_length() : templ.posenc.high_length();
      }
      auto by_base = [&](int base) {
        return count_lfd_params(templ.arch, input_dim, {base, kMinHidden});
      };
      int base = std::max(kMinBase, largest_within(kMinBase, target, by_base));
      auto by_hidden = [&](int hidden) {
        return count_lfd_params(templ.arch, input_dim, {base, hidden});
      };
      int hidden = largest_within(kMinHidden, target, by_hidden);
      hidden = hidden < kMinHidden ? kMinHidden : nearest(hidden, target, by_hidden);
      width = {base, hidden};
      count = by_hidden(hidden);
    }
    sol.widths.push_back(width);
    sol.realized.push_back(count);
    const double err = sol.component_error(i);
    report << names[i] << ": target " << target << ", realized " << count << " (base "
           << width.base_width << ", hidden " << width.mlp_hidden << ", error "
           << err * 100.0 << "%)\n";
    if (err > tol.per_decoder) feasible = false;
  }
  if (sol.total_error() > tol.total) feasible = false;
  if (!feasible) {
    throw BudgetInfeasible("parameter budget " + std::to_string(target_total) +
                           " cannot be met within tolerance:\n" + report.str());
  }
  return sol;
}

ModelConfig apply_budget(const BudgetSolution& solution, ModelConfig templ) {
  templ.decoders = solution.widths;
  templ.validate();
  return templ;
}

}  // namespace dsvr::nets
