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

#include "asymattack/search.hpp"

#include <cmath>
#include <numbers>

namespace asym {

Path::Path(Kind kind, Vector x_star, Vector x_tilde, Vector u, Vector v, double radius)
    : kind_(kind),
      x_star_(std::move(x_star)),
      x_tilde_(std::move(x_tilde)),
      u_(std::move(u)),
      v_(std::move(v)),
      radius_(radius) {}

Path Path::line(Vector x_star, Vector x_tilde) {
  if (x_star.size() != x_tilde.size()) throw InvalidDimensionError("Path: endpoint dimensions differ");
  return Path(Kind::Line, std::move(x_star), std::move(x_tilde), Vector(), Vector(), 0.0);
}

Path Path::arc(Vector x_star, Vector x_tilde, Vector v) {
  if (x_star.size() != x_tilde.size() || v.size() != x_star.size()) {
    throw InvalidDimensionError("Path: endpoint dimensions differ");
  }
  const Vector diff = x_tilde - x_star;
  const double radius = diff.norm();
  if (!(radius > 0.0)) throw DomainError("Path: arc endpoints coincide");
  Vector u = diff / radius;
  if (std::abs(v.norm() - 1.0) > 1e-9 || std::abs(u.dot(v)) > 1e-9) {
    throw DomainError("Path: arc needs a unit v orthogonal to x_tilde - x_star");
  }
  return Path(Kind::Arc, std::move(x_star), std::move(x_tilde), std::move(u), std::move(v), radius);
}

Vector Path::operator()(double theta) const {
  if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("Path: theta must lie in [0, 1]");
  if (kind_ == Kind::Line) {
    if (theta == 0.0) return x_tilde_;
    if (theta == 1.0) return x_star_;
    return theta * x_star_ + (1.0 - theta) * x_tilde_;
  }
  if (theta == 0.0) return x_tilde_;
  if (theta == 1.0) return x_star_;
  const double angle = 0.5 * std::numbers::pi * theta;
  const double c = std::cos(angle), s = std::sin(angle);
  return x_star_ + (c * radius_) * (c * u_ + s * v_);
}

Vector eval_path(const Path& path, double theta) { return path(theta); }

std::int64_t grid_cells(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("search: tau must lie in (0, 1)");
  const double r = 1.0 / tau;
  const double nearest = std::round(r);
  if (std::abs(r - nearest) <= 1e-9 * r) return static_cast<std::int64_t>(nearest);
  return static_cast<std::int64_t>(std::ceil(r));
}

namespace {

SearchResult grid_search(const Path& path, double tau, double split_ratio, const Oracle& oracle,
                         CostLedger& ledger, const SearchOptions& options) {
  const std::int64_t cells = grid_cells(tau);
  const double start_cost = ledger.total_cost();
  const auto start_low = ledger.n_low();
  const auto start_high = ledger.n_high();
  auto theta_of = [&](std::int64_t b) { return std::min(1.0, static_cast<double>(b) * tau); };

  SearchResult result;
  result.b_low = 0;
  result.b_high = cells;
  auto finish = [&]() {
    result.theta_low = theta_of(result.b_low);
    result.theta_high = theta_of(result.b_high);
    result.point = path(result.theta_low);
    result.n_low = ledger.n_low() - start_low;
    result.n_high = ledger.n_high() - start_high;
    result.cost = ledger.total_cost() - start_cost;
    return result;
  };

  try {
    if (options.verify_anchor && !is_adversarial(query(oracle, path(0.0), ledger))) {
      throw PreconditionError("search: anchor T(0) is not adversarial");
    }
    while (result.b_high - result.b_low > 1) {
      const auto width = static_cast<double>(result.b_high - result.b_low);
      const auto step = static_cast<std::int64_t>(std::ceil(width / (split_ratio + 1.0)));
      const std::int64_t mid = result.b_low + std::max<std::int64_t>(1, step);
      const bool adversarial = is_adversarial(query(oracle, path(theta_of(mid)), ledger));
      result.probes.push_back(mid);
      if (adversarial) {
        result.b_low = mid;
      } else {
        result.b_high = mid;
      }
      if (options.on_step) options.on_step(result.b_low, result.b_high);
    }
  } catch (const SearchBudgetError&) {
    throw;
  } catch (const AttackBudgetError& e) {
    throw SearchBudgetError(e.spent(), e.budget(), finish());
  }
  return finish();
}

}  // namespace

SearchResult asymmetric_search(const Path& path, double tau, double c_star, const Oracle& oracle,
                               CostLedger& ledger, const SearchOptions& options) {
  if (!(c_star >= 1.0)) throw DomainError("asymmetric_search: c* must be >= 1");
  return grid_search(path, tau, c_star, oracle, ledger, options);
}

SearchResult binary_search(const Path& path, double tau, const Oracle& oracle, CostLedger& ledger,
                           const SearchOptions& options) {
  return grid_search(path, tau, 1.0, oracle, ledger, options);
}

double expected_cost_bound(double tau, double c_star) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("expected_cost_bound: tau must lie in (0, 1)");
  if (!(c_star >= 1.0)) throw DomainError("expected_cost_bound: c* must be >= 1");
  const double exponent = std::log(1.0 / tau) / std::log(c_star + 1.0);
  // log(1024) / log(2) lands a few ulps above 10.
  const double rounded = std::round(exponent);
  const double ceiling = std::abs(exponent - rounded) <= 1e-9 ? rounded : std::ceil(exponent);
  return 2.0 * c_star * ceiling;
}

}  // namespace asym
