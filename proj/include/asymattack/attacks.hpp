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

#ifndef ASYMATTACK_ATTACKS_HPP
#define ASYMATTACK_ATTACKS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asymattack/agrest.hpp"
#include "asymattack/search.hpp"

namespace asym {

enum class Family { HsjaLike, GeodaLike, SurfreeLike, CgbaLike };

std::string to_string(Family family);
/// Accepts "hsja-like", "geoda-like", "surfree-like", "cgba-like" and the
/// short forms without the suffix.
Family parse_family(const std::string& name);

/// Scheduler rate used when AttackConfig::m is unset.
double default_m(Family family);

struct AttackConfig {
  Family family = Family::HsjaLike;
  double c_star = 1.0;
  /// Report only flagged queries as cost; search and estimation then run
  /// with c* = stealth_c_star.
  bool infinite_cost = false;
  double stealth_c_star = 1e5;
  double tau = 1e-3;
  std::optional<double> m;
  double budget = 1e4;
  std::uint64_t seed = 0;
  bool use_as = true;
  bool use_agrest = true;
  /// 0 means the full space; otherwise the first-k-coordinates subspace.
  int subspace_dim = 0;

  std::int64_t n_prime_1 = 100;
  /// n'_t growth factor per iteration for geoda-like; hsja-like and
  /// cgba-like use n'_1 sqrt(t).
  double geometric_growth = 1.5;
  int batch = 1;
  double delta_scale = 1.0;
  int max_halvings = 20;
  int max_escalations = 10;
  /// Worst-case queries held back from the estimate for the search after it.
  int search_reserve = 8;
  std::int64_t max_iterations = 100000;
  /// Oracle calls allowed regardless of cost.
  std::uint64_t max_queries = 10000000;

  double init_radius = 1.0;
  int init_doublings = 16;
  int init_directions = 20;

  double scheduler_m() const { return m.value_or(default_m(family)); }
  /// c* used inside AS and AGREST.
  double algorithm_c_star() const { return infinite_cost ? stealth_c_star : c_star; }
  Accounting accounting() const { return infinite_cost ? Accounting::FlaggedOnly : Accounting::Weighted; }
  std::string method() const;
  void validate() const;
};

struct TraceRecord {
  double cumulative_cost = 0.0;
  double l2 = 0.0;  // best so far
  std::int64_t iteration = 0;
  std::uint64_t n_low = 0;
  std::uint64_t n_high = 0;
};

struct PhaseCounts {
  std::uint64_t n_low = 0;
  std::uint64_t n_high = 0;
};

struct AttackTrace {
  std::vector<TraceRecord> records;
  Vector final_point;  // best adversarial point found
  double final_l2 = 0.0;
  double total_cost = 0.0;
  std::uint64_t n_low = 0;
  std::uint64_t n_high = 0;
  double c_star = 1.0;
  Accounting accounting = Accounting::Weighted;
  std::int64_t iterations = 0;
  PhaseCounts init, estimate, search;
  std::vector<double> p_hats;
};

struct InitOptions {
  double radius = 1.0;
  int doublings = 16;
  int directions = 20;
  double tau = 1e-3;
  double c_star = 1.0;
  bool use_as = true;
};

struct InitResult {
  Vector point;
  Vector anchor;  // adversarial point found by scaling
  SearchResult search;
};

/// Random direction u; tries x* +/- r u for r = radius, 2 radius, ... and
/// projects the first adversarial point back toward x* along the line.
/// Throws InitializationFailure when nothing is found or the budget runs out.
InitResult init_adversarial(const Vector& x_star, const Oracle& oracle, CostLedger& ledger, Rng& rng,
                            const InitOptions& options = {});

struct StepSearch {
  double tau = 1e-3;
  double c_star = 1.0;
  bool use_as = true;
};

/// AS or bisection along `path`, per `search`.
SearchResult path_search(const Path& path, const StepSearch& search, const Oracle& oracle, CostLedger& ledger);

/// Start at x'' = x* + |x_t - x*| g, doubling the radius while x'' is not
/// adversarial, then search back toward x*. nullopt when the escalation cap
/// is hit. Budget errors propagate.
std::optional<SearchResult> geoda_step(const Vector& x_star, const Vector& x_t, const Vector& g, int max_escalations,
                                       const StepSearch& search, const Oracle& oracle, CostLedger& ledger);

/// Unit v in the plane of u = (x_t - x*) / |x_t - x*| and g, orthogonal to u.
/// Falls back to `projector`'s random directions when g is parallel to u.
Vector arc_direction(const Vector& x_star, const Vector& x_t, const Vector& g, const SubspaceProjector& projector,
                     Rng& rng);

AttackTrace attack_hsja_like(const AttackConfig& config, const Vector& x_star, const Oracle& oracle);
AttackTrace attack_geoda_like(const AttackConfig& config, const Vector& x_star, const Oracle& oracle);
AttackTrace attack_surfree_like(const AttackConfig& config, const Vector& x_star, const Oracle& oracle);
AttackTrace attack_cgba_like(const AttackConfig& config, const Vector& x_star, const Oracle& oracle);

/// Dispatch on config.family.
AttackTrace run_attack(const AttackConfig& config, const Vector& x_star, const Oracle& oracle);

/// hsja-like with flagged-only accounting, line search and the vanilla
/// estimator; `config` supplies budget, seed and the loop knobs.
AttackTrace run_stealthy_baseline(AttackConfig config, const Vector& x_star, const Oracle& oracle);

/// Best-so-far l2 at cumulative cost <= cost; +inf before the first record.
double l2_at_cost(const AttackTrace& trace, double cost);

}  // namespace asym

#endif  // ASYMATTACK_ATTACKS_HPP
