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

#include "asymattack/attacks.hpp"

#include <cmath>
#include <limits>

namespace asym {

std::string to_string(Family family) {
  switch (family) {
    case Family::HsjaLike: return "hsja-like";
    case Family::GeodaLike: return "geoda-like";
    case Family::SurfreeLike: return "surfree-like";
    case Family::CgbaLike: return "cgba-like";
  }
  return "unknown";
}

Family parse_family(const std::string& name) {
  for (auto f : {Family::HsjaLike, Family::GeodaLike, Family::SurfreeLike, Family::CgbaLike}) {
    const auto full = to_string(f);
    if (name == full || name == full.substr(0, full.size() - 5)) return f;
  }
  throw DomainError("unknown attack family '" + name + "'");
}

double default_m(Family family) {
  switch (family) {
    case Family::HsjaLike: return 0.02;
    case Family::GeodaLike:
    case Family::CgbaLike: return 0.06;
    case Family::SurfreeLike: return 0.0;
  }
  return 0.0;
}

std::string AttackConfig::method() const {
  if (use_as && use_agrest) return "as+agrest";
  if (use_as) return "as";
  if (use_agrest) return "agrest";
  return "vanilla";
}

void AttackConfig::validate() const {
  if (!(c_star >= 1.0) || !(stealth_c_star >= 1.0)) throw DomainError("attack: c* must be >= 1");
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("attack: tau must lie in (0, 1)");
  if (!(scheduler_m() >= 0.0)) throw DomainError("attack: m must be >= 0");
  if (!(budget > 0.0)) throw DomainError("attack: budget must be positive");
  if (n_prime_1 < 1 || batch < 1) throw DomainError("attack: n'_1 and batch must be >= 1");
  if (!(geometric_growth >= 1.0)) throw DomainError("attack: geometric growth must be >= 1");
  if (!(delta_scale > 0.0) || !(init_radius > 0.0)) throw DomainError("attack: scales must be positive");
  if (subspace_dim < 0) throw DomainError("attack: subspace dimension must be >= 0");
  if (max_queries < 1) throw DomainError("attack: max_queries must be >= 1");
}

InitResult init_adversarial(const Vector& x_star, const Oracle& oracle, CostLedger& ledger, Rng& rng,
                            const InitOptions& options) {
  const Eigen::Index d = x_star.size();
  if (oracle.dim() != d) throw InvalidDimensionError("init_adversarial: dimension mismatch");
  for (int attempt = 0; attempt < options.directions; ++attempt) {
    const Vector u = sample_sphere(d, rng);
    double r = options.radius;
    for (int k = 0; k <= options.doublings; ++k, r *= 2.0) {
      for (double side : {1.0, -1.0}) {
        Vector anchor = x_star + (side * r) * u;
        QueryLabel label;
        try {
          label = query(oracle, anchor, ledger);
        } catch (const AttackBudgetError&) {
          throw InitializationFailure("init_adversarial: budget exhausted before an adversarial point was found");
        }
        if (!is_adversarial(label)) continue;
        InitResult out;
        const auto path = Path::line(x_star, anchor);
        try {
          out.search = options.use_as ? asymmetric_search(path, options.tau, options.c_star, oracle, ledger)
                                      : binary_search(path, options.tau, oracle, ledger);
        } catch (const SearchBudgetError& e) {
          out.search = e.best();
        }
        out.point = out.search.point;
        out.anchor = std::move(anchor);
        return out;
      }
    }
  }
  throw InitializationFailure("init_adversarial: no adversarial point within the escalation cap");
}

SearchResult path_search(const Path& path, const StepSearch& search, const Oracle& oracle, CostLedger& ledger) {
  return search.use_as ? asymmetric_search(path, search.tau, search.c_star, oracle, ledger)
                       : binary_search(path, search.tau, oracle, ledger);
}

std::optional<SearchResult> geoda_step(const Vector& x_star, const Vector& x_t, const Vector& g, int max_escalations,
                                       const StepSearch& search, const Oracle& oracle, CostLedger& ledger) {
  double r = (x_t - x_star).norm();
  for (int k = 0; k <= max_escalations; ++k, r *= 2.0) {
    Vector start = x_star + r * g;
    if (is_adversarial(query(oracle, start, ledger))) {
      return path_search(Path::line(x_star, std::move(start)), search, oracle, ledger);
    }
  }
  return std::nullopt;
}

namespace {

Vector random_orthogonal(const Vector& u, const SubspaceProjector& projector, Rng& rng) {
  for (;;) {
    Vector v = projector.sample(rng);
    v -= v.dot(u) * u;
    const double n = v.norm();
    if (n > 1e-9) return v / n;
  }
}

}  // namespace

Vector arc_direction(const Vector& x_star, const Vector& x_t, const Vector& g, const SubspaceProjector& projector,
                     Rng& rng) {
  const Vector u = (x_t - x_star).normalized();
  Vector v = g - g.dot(u) * u;
  const double n = v.norm();
  if (n > 1e-9 * std::max(1.0, g.norm())) return v / n;
  return random_orthogonal(u, projector, rng);
}

namespace {

SubspaceProjector make_projector(const AttackConfig& c, Eigen::Index d) {
  if (c.subspace_dim == 0 || c.subspace_dim >= d) return SubspaceProjector::identity(d);
  return SubspaceProjector::embedding(d, c.subspace_dim);
}

class AttackRun {
 public:
  AttackRun(const AttackConfig& config, const Vector& x_star, const Oracle& oracle)
      : c_(config),
        x_star_(x_star),
        oracle_(oracle),
        ledger_(config.algorithm_c_star(), config.budget, config.accounting(), config.max_queries),
        rng_(config.seed),
        projector_(make_projector(config, x_star.size())) {
    c_.validate();
    if (oracle.dim() != x_star.size()) throw InvalidDimensionError("attack: dimension mismatch");
    state_ = make_agrest_state(static_cast<int>(projector_.effective_dim()), c_.algorithm_c_star(),
                               c_.scheduler_m(), c_.batch);
  }

  void initialize() {
    InitOptions opts;
    opts.radius = c_.init_radius;
    opts.doublings = c_.init_doublings;
    opts.directions = c_.init_directions;
    opts.tau = c_.tau;
    opts.c_star = c_.algorithm_c_star();
    opts.use_as = c_.use_as;
    const auto before = snapshot();
    const auto init = init_adversarial(x_star_, oracle_, ledger_, rng_, opts);
    add(trace_.init, before);
    x_ = init.point;
    best_ = x_;
    best_l2_ = distance(x_);
    record(0);
    exhausted_ = !ledger_.can_afford();
  }

  bool done(std::int64_t t) const { return exhausted_ || t > c_.max_iterations; }

  std::int64_t n_prime_sqrt(std::int64_t t) const {
    return static_cast<std::int64_t>(std::ceil(static_cast<double>(c_.n_prime_1) * std::sqrt(static_cast<double>(t))));
  }
  std::int64_t n_prime_geometric(std::int64_t t) const {
    const double n = static_cast<double>(c_.n_prime_1) * std::pow(c_.geometric_growth, static_cast<double>(t - 1));
    return static_cast<std::int64_t>(std::ceil(std::min(n, 1e12)));
  }

  /// Gradient direction at x; nullopt when nothing usable came back.
  std::optional<Vector> estimate(std::int64_t t, std::int64_t n_prime) {
    const double limit = c_.budget - c_.search_reserve * ledger_.worst_case_query_cost();
    const int d_eff = static_cast<int>(projector_.effective_dim());
    const double delta = sampling_radius(x_star_, x_, d_eff, c_.delta_scale);
    const auto before = snapshot();
    std::optional<Vector> out;
    try {
      if (c_.use_agrest) {
        state_.delta = delta;
        const auto step = agrest_estimate(x_star_, x_, state_, projector_, n_prime, c_.algorithm_c_star(), oracle_,
                                          ledger_, rng_, limit);
        trace_.p_hats.push_back(step.estimate.p_hat);
        out = step.estimate.direction;
      } else {
        out = vanilla_estimate(x_, delta, n_prime, projector_, oracle_, ledger_, rng_, limit).direction;
      }
    } catch (const EstimateBudgetError& e) {
      exhausted_ = true;
      if (e.partial()) out = e.partial()->direction;
    } catch (const DegenerateEstimateError&) {
    }
    add(trace_.estimate, before);
    if (ledger_.total_cost() > before.cost) record(t);
    return out;
  }

  /// Label of x, or nullopt once the budget refuses.
  std::optional<bool> probe(const Vector& x) {
    const auto before = snapshot();
    std::optional<bool> out;
    try {
      out = is_adversarial(query(oracle_, x, ledger_));
    } catch (const AttackBudgetError&) {
      exhausted_ = true;
    }
    add(trace_.search, before);
    return out;
  }

  StepSearch step_search() const { return {c_.tau, c_.algorithm_c_star(), c_.use_as}; }

  SearchResult search(const Path& path) {
    const auto before = snapshot();
    SearchResult r;
    try {
      r = path_search(path, step_search(), oracle_, ledger_);
    } catch (const SearchBudgetError& e) {
      exhausted_ = true;
      r = e.best();
    }
    add(trace_.search, before);
    return r;
  }

  std::optional<SearchResult> geoda(const Vector& g) {
    const auto before = snapshot();
    std::optional<SearchResult> r;
    try {
      r = geoda_step(x_star_, x_, g, c_.max_escalations, step_search(), oracle_, ledger_);
    } catch (const SearchBudgetError& e) {
      exhausted_ = true;
      r = e.best();
    } catch (const AttackBudgetError&) {
      exhausted_ = true;
    }
    add(trace_.search, before);
    return r;
  }

  /// Moves the iterate; keeps the best point separately.
  void move_to(const Vector& x) {
    x_ = x;
    const double l2 = distance(x_);
    if (l2 < best_l2_) {
      best_l2_ = l2;
      best_ = x_;
    }
  }

  void record(std::int64_t t) {
    trace_.records.push_back({ledger_.total_cost(), best_l2_, t, ledger_.n_low(), ledger_.n_high()});
    trace_.iterations = t;
  }

  Vector random_orthogonal(const Vector& u) { return asym::random_orthogonal(u, projector_, rng_); }
  Vector arc_direction(const Vector& g) { return asym::arc_direction(x_star_, x_, g, projector_, rng_); }

  double distance(const Vector& x) const { return (x - x_star_).norm(); }
  const Vector& x() const { return x_; }
  const Vector& x_star() const { return x_star_; }
  const AttackConfig& config() const { return c_; }

  AttackTrace finish() {
    trace_.final_point = best_;
    trace_.final_l2 = best_l2_;
    trace_.total_cost = ledger_.total_cost();
    trace_.n_low = ledger_.n_low();
    trace_.n_high = ledger_.n_high();
    trace_.c_star = ledger_.c_star();
    trace_.accounting = ledger_.accounting();
    return std::move(trace_);
  }

 private:
  struct Snapshot {
    std::uint64_t n_low, n_high;
    double cost;
  };
  Snapshot snapshot() const { return {ledger_.n_low(), ledger_.n_high(), ledger_.total_cost()}; }
  void add(PhaseCounts& phase, const Snapshot& before) const {
    phase.n_low += ledger_.n_low() - before.n_low;
    phase.n_high += ledger_.n_high() - before.n_high;
  }

  AttackConfig c_;
  const Vector& x_star_;
  const Oracle& oracle_;
  CostLedger ledger_;
  Rng rng_;
  SubspaceProjector projector_;
  AgrestState state_;
  AttackTrace trace_;
  Vector x_, best_;
  double best_l2_ = std::numeric_limits<double>::infinity();
  bool exhausted_ = false;
};

}  // namespace

AttackTrace attack_hsja_like(const AttackConfig& config, const Vector& x_star, const Oracle& oracle) {
  AttackRun run(config, x_star, oracle);
  run.initialize();
  for (std::int64_t t = 1; !run.done(t); ++t) {
    const auto g = run.estimate(t, run.n_prime_sqrt(t));
    if (!g || run.done(t)) {
      if (run.done(t)) break;
      continue;
    }
    double xi = run.distance(run.x()) / std::sqrt(static_cast<double>(t));
    std::optional<Vector> stepped;
    for (int k = 0; k <= config.max_halvings; ++k, xi *= 0.5) {
      Vector candidate = run.x() + xi * *g;
      const auto adv = run.probe(candidate);
      if (!adv) break;
      if (*adv) {
        stepped = std::move(candidate);
        break;
      }
    }
    if (!stepped) continue;
    const auto r = run.search(Path::line(x_star, *stepped));
    run.move_to(r.point);
    run.record(t);
  }
  return run.finish();
}

AttackTrace attack_geoda_like(const AttackConfig& config, const Vector& x_star, const Oracle& oracle) {
  AttackRun run(config, x_star, oracle);
  run.initialize();
  for (std::int64_t t = 1; !run.done(t); ++t) {
    const auto g = run.estimate(t, run.n_prime_geometric(t));
    if (!g || run.done(t)) {
      if (run.done(t)) break;
      continue;
    }
    const double dist = run.distance(run.x());
    const auto res = run.geoda(*g);
    if (!res) continue;
    if (run.distance(res->point) < dist) run.move_to(res->point);
    run.record(t);
  }
  return run.finish();
}

AttackTrace attack_surfree_like(const AttackConfig& config, const Vector& x_star, const Oracle& oracle) {
  AttackRun run(config, x_star, oracle);
  run.initialize();
  for (std::int64_t t = 1; !run.done(t); ++t) {
    const double dist = run.distance(run.x());
    const Vector u = (run.x() - x_star) / dist;
    const Vector v = run.random_orthogonal(u);
    for (double side : {1.0, -1.0}) {
      const auto res = run.search(Path::arc(x_star, run.x(), side * v));
      const bool improved = res.b_low > 0 && run.distance(res.point) < dist;
      if (improved) run.move_to(res.point);
      run.record(t);
      if (improved || run.done(t)) break;
    }
  }
  return run.finish();
}

AttackTrace attack_cgba_like(const AttackConfig& config, const Vector& x_star, const Oracle& oracle) {
  AttackRun run(config, x_star, oracle);
  run.initialize();
  for (std::int64_t t = 1; !run.done(t); ++t) {
    const auto g = run.estimate(t, run.n_prime_sqrt(t));
    if (!g || run.done(t)) {
      if (run.done(t)) break;
      continue;
    }
    const double dist = run.distance(run.x());
    const auto res = run.search(Path::arc(x_star, run.x(), run.arc_direction(*g)));
    if (run.distance(res.point) < dist) run.move_to(res.point);
    run.record(t);
  }
  return run.finish();
}

AttackTrace run_attack(const AttackConfig& config, const Vector& x_star, const Oracle& oracle) {
  switch (config.family) {
    case Family::HsjaLike: return attack_hsja_like(config, x_star, oracle);
    case Family::GeodaLike: return attack_geoda_like(config, x_star, oracle);
    case Family::SurfreeLike: return attack_surfree_like(config, x_star, oracle);
    case Family::CgbaLike: return attack_cgba_like(config, x_star, oracle);
  }
  throw DomainError("run_attack: unknown family");
}

AttackTrace run_stealthy_baseline(AttackConfig config, const Vector& x_star, const Oracle& oracle) {
  config.family = Family::HsjaLike;
  config.infinite_cost = true;
  config.use_as = true;
  config.use_agrest = false;
  return attack_hsja_like(config, x_star, oracle);
}

double l2_at_cost(const AttackTrace& trace, double cost) {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& r : trace.records) {
    if (r.cumulative_cost > cost) break;
    out = r.l2;
  }
  return out;
}

}  // namespace asym
