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

#ifndef ASYMATTACK_SEARCH_HPP
#define ASYMATTACK_SEARCH_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "asymattack/oracle.hpp"

namespace asym {

/// Curve T: [0, 1] -> R^d from an adversarial anchor T(0) = x_tilde to the
/// source point T(1) = x_star.
class Path {
 public:
  enum class Kind { Line, Arc };

  /// T(theta) = theta x_star + (1 - theta) x_tilde.
  static Path line(Vector x_star, Vector x_tilde);
  /// Circle through x_star and x_tilde in the plane spanned by
  /// u = (x_tilde - x_star) / |x_tilde - x_star| and v, with <u, v> = 0.
  static Path arc(Vector x_star, Vector x_tilde, Vector v);

  Kind kind() const { return kind_; }
  const Vector& x_star() const { return x_star_; }
  const Vector& x_tilde() const { return x_tilde_; }
  const Vector& v() const { return v_; }
  Eigen::Index dim() const { return x_star_.size(); }

  Vector operator()(double theta) const;

 private:
  Path(Kind kind, Vector x_star, Vector x_tilde, Vector u, Vector v, double radius);

  Kind kind_;
  Vector x_star_;
  Vector x_tilde_;
  Vector u_;
  Vector v_;
  double radius_;
};

Vector eval_path(const Path& path, double theta);

struct SearchResult {
  Vector point;  // T(b_low tau), always adversarial
  double theta_low = 0.0;
  double theta_high = 0.0;
  std::int64_t b_low = 0;
  std::int64_t b_high = 0;
  std::vector<std::int64_t> probes;  // grid indices, in query order
  std::uint64_t n_low = 0;
  std::uint64_t n_high = 0;
  double cost = 0.0;  // ledger delta
};

/// Budget ran out mid-search. `best()` holds the largest confirmed
/// adversarial grid point, so callers can still use it.
class SearchBudgetError : public AttackBudgetError {
 public:
  SearchBudgetError(double spent, double budget, SearchResult best)
      : AttackBudgetError("budget exhausted during search", spent, budget), best_(std::move(best)) {}
  const SearchResult& best() const { return best_; }

 private:
  SearchResult best_;
};

/// Number of grid cells, ceil(1 / tau), robust to 1 / tau rounding just
/// above an integer.
std::int64_t grid_cells(double tau);

struct SearchOptions {
  /// Spend one query confirming T(0) is adversarial before searching.
  bool verify_anchor = false;
  /// Called after each probe with (b_low, b_high); used by instrumentation.
  std::function<void(std::int64_t, std::int64_t)> on_step;
};

/// Splits the bracket [b_low, b_high] at b_low + ceil((b_high - b_low) / (c* + 1))
/// until b_high = b_low + 1. c* = 1 is bisection; c* >= ceil(1 / tau) is a
/// step-1 line search.
SearchResult asymmetric_search(const Path& path, double tau, double c_star, const Oracle& oracle,
                               CostLedger& ledger, const SearchOptions& options = {});

/// Midpoint bisection on the same grid, independent of the ledger's c*.
SearchResult binary_search(const Path& path, double tau, const Oracle& oracle, CostLedger& ledger,
                           const SearchOptions& options = {});

/// 2 c* ceil(log_{c*+1}(1 / tau)).
double expected_cost_bound(double tau, double c_star);

}  // namespace asym

#endif  // ASYMATTACK_SEARCH_HPP
