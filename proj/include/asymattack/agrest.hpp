//
// Copyright 2026 The asymattack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef ASYMATTACK_AGREST_HPP
#define ASYMATTACK_AGREST_HPP

#include <cstdint>
#include <optional>

#include "asymattack/math_core.hpp"
#include "asymattack/oracle.hpp"

namespace asym {

/// cos(alpha_1) for a d_eff-dimensional sampling subspace.
double scheduler_init(int d_eff);

/// 1 - (1 - cos(alpha_1)) (t + 1)^(-m).
double scheduler_step(std::int64_t t, double cos_alpha_1, double m);

struct AgrestState {
  std::int64_t t = 1;
  double cos_alpha = 1.0;
  double cos_alpha_1 = 1.0;
  double m = 0.0;
  double s_star = 0.0;
  double c_star = 1.0;  // s_star was computed for this c*
  double delta = 1.0;   // sampling radius; attacks refresh it every iteration
  int d_eff = 1;
  int batch = 1;
};

/// Fresh state at t = 1 with the optimal overshoot for (d_eff, c*).
AgrestState make_agrest_state(int d_eff, double c_star, double m, int batch = 1);

/// delta = scale |x_t - x*| / sqrt(d_eff).
double sampling_radius(const Vector& x_star, const Vector& x_t, int d_eff, double scale = 1.0);

struct GradientEstimate {
  Vector direction;
  Vector v_plus;   // sum of u over adversarial (low-cost) samples
  Vector v_minus;  // minus the sum of u over source-class samples
  std::uint64_t n_low = 0;
  std::uint64_t n_high = 0;
  double p_hat = 0.0;
  double cost_spent = 0.0;
  /// Only one label appeared; direction is the unweighted sum.
  bool single_class = false;
};

/// Budget ran out mid-estimate. `partial()` is the estimate from the samples
/// already paid for, when those give a usable direction.
class EstimateBudgetError : public AttackBudgetError {
 public:
  EstimateBudgetError(double spent, double budget, std::optional<GradientEstimate> partial)
      : AttackBudgetError("budget exhausted during gradient estimation", spent, budget),
        partial_(std::move(partial)) {}
  const std::optional<GradientEstimate>& partial() const { return partial_; }

 private:
  std::optional<GradientEstimate> partial_;
};

struct AgrestStep {
  GradientEstimate estimate;
  double next_cos_alpha = 1.0;
  double omega = 0.0;
  double cost_cap = 0.0;
};

/// One weighted estimate around the overshoot center, spending about
/// n'_t (c* + 1) / 2. Advances `state` (t, cos_alpha) and recomputes s_star
/// when the projector's dimension differs from state.d_eff.
///
/// `ledger_limit` stops sampling early, without error, once another batch
/// could push the ledger total past it. Attacks use it to keep budget for
/// the search that follows.
AgrestStep agrest_estimate(const Vector& x_star, const Vector& x_t, AgrestState& state,
                           const SubspaceProjector& projector, std::int64_t n_prime_t, double c_star,
                           const Oracle& oracle, CostLedger& ledger, Rng& rng,
                           double ledger_limit = CostLedger::kUnbounded);

/// Mean of phi(x_t + delta u_i) u_i over n samples, normalized.
GradientEstimate vanilla_estimate(const Vector& x_t, double delta, std::int64_t n,
                                  const SubspaceProjector& projector, const Oracle& oracle,
                                  CostLedger& ledger, Rng& rng,
                                  double ledger_limit = CostLedger::kUnbounded);

/// Combine accumulators: (1 - p) v+ + p v-, with p clamped to
/// [1/n, 1 - 1/n]. Falls back to the unweighted sum when one side is empty.
GradientEstimate finish_estimate(Vector v_plus, Vector v_minus, std::uint64_t n_low,
                                 std::uint64_t n_high);

}  // namespace asym

#endif  // ASYMATTACK_AGREST_HPP
