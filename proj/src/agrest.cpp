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

#include "asymattack/agrest.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace asym {

double scheduler_init(int d_eff) {
  if (d_eff < 1) throw InvalidDimensionError("scheduler_init: d_eff must be >= 1");
  return initial_cos(d_eff);
}

double scheduler_step(std::int64_t t, double cos_alpha_1, double m) {
  if (t < 0 || !(m >= 0.0) || !(cos_alpha_1 > 0.0 && cos_alpha_1 <= 1.0)) {
    throw DomainError("scheduler_step: need t >= 0, m >= 0, cos_alpha_1 in (0, 1]");
  }
  if (t == 0 || m == 0.0) return cos_alpha_1;
  return 1.0 - (1.0 - cos_alpha_1) * std::pow(static_cast<double>(t + 1), -m);
}

AgrestState make_agrest_state(int d_eff, double c_star, double m, int batch) {
  if (batch < 1) throw DomainError("agrest: batch must be >= 1");
  if (!(m >= 0.0)) throw DomainError("agrest: m must be >= 0");
  AgrestState s;
  s.cos_alpha_1 = scheduler_init(d_eff);
  s.cos_alpha = s.cos_alpha_1;
  s.m = m;
  s.c_star = c_star;
  s.s_star = optimal_overshoot(d_eff, c_star);
  s.d_eff = d_eff;
  s.batch = batch;
  return s;
}

double sampling_radius(const Vector& x_star, const Vector& x_t, int d_eff, double scale) {
  return scale * (x_t - x_star).norm() / std::sqrt(static_cast<double>(d_eff));
}

GradientEstimate finish_estimate(Vector v_plus, Vector v_minus, std::uint64_t n_low,
                                 std::uint64_t n_high) {
  GradientEstimate e;
  const std::uint64_t n = n_low + n_high;
  if (n == 0) throw DegenerateEstimateError("estimate: no samples");
  e.n_low = n_low;
  e.n_high = n_high;
  e.p_hat = static_cast<double>(n_low) / static_cast<double>(n);
  Vector g;
  if (n_low == 0 || n_high == 0) {
    e.single_class = true;
    g = n_low == 0 ? v_minus : v_plus;
  } else {
    const double lo = 1.0 / static_cast<double>(n);
    const double p = std::clamp(e.p_hat, lo, 1.0 - lo);
    g = (1.0 - p) * v_plus + p * v_minus;
  }
  const double norm = g.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw DegenerateEstimateError("estimate: zero direction");
  e.direction = g / norm;
  e.v_plus = std::move(v_plus);
  e.v_minus = std::move(v_minus);
  return e;
}

namespace {

std::optional<GradientEstimate> try_finish(const Vector& v_plus, const Vector& v_minus,
                                           std::uint64_t n_low, std::uint64_t n_high) {
  try {
    return finish_estimate(v_plus, v_minus, n_low, n_high);
  } catch (const DegenerateEstimateError&) {
    return std::nullopt;
  }
}

}  // namespace

AgrestStep agrest_estimate(const Vector& x_star, const Vector& x_t, AgrestState& state,
                           const SubspaceProjector& projector, std::int64_t n_prime_t, double c_star,
                           const Oracle& oracle, CostLedger& ledger, Rng& rng, double ledger_limit) {
  if (n_prime_t < 1) throw DomainError("agrest_estimate: n'_t must be >= 1");
  if (!(c_star >= 1.0)) throw DomainError("agrest_estimate: c* must be >= 1");
  if (x_t.size() != x_star.size() || projector.ambient_dim() != x_t.size()) {
    throw InvalidDimensionError("agrest_estimate: dimension mismatch");
  }
  const Vector away = x_t - x_star;
  const double dist = away.norm();
  if (!(dist > 0.0)) throw DomainError("agrest_estimate: x_t coincides with x*");
  if (!(state.delta > 0.0)) throw DomainError("agrest_estimate: delta must be positive");

  const int d_eff = static_cast<int>(projector.effective_dim());
  if (d_eff != state.d_eff || c_star != state.c_star) {
    state.d_eff = d_eff;
    state.c_star = c_star;
    state.s_star = optimal_overshoot(d_eff, c_star);
  }

  AgrestStep step;
  step.omega = std::min(state.s_star * state.delta / state.cos_alpha, 10.0 * state.delta);
  step.cost_cap = static_cast<double>(n_prime_t) * (c_star + 1.0) / 2.0;
  const Vector center = x_t + (step.omega / dist) * away;

  const Eigen::Index d = x_t.size();
  Vector v_plus = Vector::Zero(d), v_minus = Vector::Zero(d);
  std::uint64_t n_low = 0, n_high = 0;
  const double start_cost = ledger.total_cost();
  auto spent = [&] { return static_cast<double>(n_low) + c_star * static_cast<double>(n_high); };
  auto absorb = [&](const Vector& u, QueryLabel label) {
    if (is_adversarial(label)) {
      v_plus += u;
      ++n_low;
    } else {
      v_minus -= u;
      ++n_high;
    }
  };

  std::vector<Vector> us(state.batch), points(state.batch);
  const double batch_worst = state.batch * ledger.worst_case_query_cost();
  while (spent() < step.cost_cap) {
    if (ledger.total_cost() + batch_worst > ledger_limit ||
        ledger.query_cap() - ledger.n_queries() < static_cast<std::uint64_t>(state.batch)) {
      if (n_low + n_high == 0) {
        throw EstimateBudgetError(ledger.total_cost(), ledger_limit, std::nullopt);
      }
      break;
    }
    for (int i = 0; i < state.batch; ++i) {
      us[i] = projector.sample(rng);
      points[i] = center + state.delta * us[i];
    }
    try {
      const auto labels = query_batch(oracle, points, ledger);
      for (int i = 0; i < state.batch; ++i) absorb(us[i], labels[i]);
    } catch (const BatchBudgetError& e) {
      for (std::size_t i = 0; i < e.prefix().size(); ++i) absorb(us[i], e.prefix()[i]);
      auto partial = try_finish(v_plus, v_minus, n_low, n_high);
      if (partial) partial->cost_spent = ledger.total_cost() - start_cost;
      throw EstimateBudgetError(e.spent(), e.budget(), std::move(partial));
    }
  }

  step.estimate = finish_estimate(std::move(v_plus), std::move(v_minus), n_low, n_high);
  step.estimate.cost_spent = ledger.total_cost() - start_cost;
  step.next_cos_alpha = scheduler_step(state.t, state.cos_alpha_1, state.m);
  state.cos_alpha = step.next_cos_alpha;
  ++state.t;
  return step;
}

GradientEstimate vanilla_estimate(const Vector& x_t, double delta, std::int64_t n,
                                  const SubspaceProjector& projector, const Oracle& oracle,
                                  CostLedger& ledger, Rng& rng, double ledger_limit) {
  if (n < 1) throw DomainError("vanilla_estimate: n must be >= 1");
  if (!(delta > 0.0)) throw DomainError("vanilla_estimate: delta must be positive");
  if (projector.ambient_dim() != x_t.size()) throw InvalidDimensionError("vanilla_estimate: dimension mismatch");
  const Eigen::Index d = x_t.size();
  Vector v_plus = Vector::Zero(d), v_minus = Vector::Zero(d);
  std::uint64_t n_low = 0, n_high = 0;
  const double start_cost = ledger.total_cost();
  const double worst = ledger.worst_case_query_cost();
  for (std::int64_t i = 0; i < n; ++i) {
    if (ledger.total_cost() + worst > ledger_limit || ledger.n_queries() >= ledger.query_cap()) {
      if (i == 0) throw EstimateBudgetError(ledger.total_cost(), ledger_limit, std::nullopt);
      break;
    }
    const Vector u = projector.sample(rng);
    QueryLabel label;
    try {
      label = query(oracle, x_t + delta * u, ledger);
    } catch (const AttackBudgetError& e) {
      std::optional<GradientEstimate> partial;
      if (n_low + n_high > 0) {
        const Vector sum = v_plus + v_minus;
        if (sum.norm() > 0.0) {
          partial = GradientEstimate{};
          partial->direction = sum.normalized();
          partial->v_plus = v_plus;
          partial->v_minus = v_minus;
          partial->n_low = n_low;
          partial->n_high = n_high;
          partial->p_hat = static_cast<double>(n_low) / static_cast<double>(n_low + n_high);
          partial->cost_spent = ledger.total_cost() - start_cost;
        }
      }
      throw EstimateBudgetError(e.spent(), e.budget(), std::move(partial));
    }
    if (is_adversarial(label)) {
      v_plus += u;
      ++n_low;
    } else {
      v_minus -= u;
      ++n_high;
    }
  }
  const Vector sum = v_plus + v_minus;
  const double norm = sum.norm();
  if (!(norm > 0.0)) throw DegenerateEstimateError("vanilla_estimate: contributions cancel");
  GradientEstimate e;
  e.direction = sum / norm;
  e.n_low = n_low;
  e.n_high = n_high;
  e.p_hat = static_cast<double>(n_low) / static_cast<double>(n_low + n_high);
  e.cost_spent = ledger.total_cost() - start_cost;
  e.single_class = n_low == 0 || n_high == 0;
  e.v_plus = std::move(v_plus);
  e.v_minus = std::move(v_minus);
  return e;
}

}  // namespace asym
