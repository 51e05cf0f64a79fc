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

#include "asymattack/math_core.hpp"

#include <boost/math/tools/minima.hpp>

#include <array>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <utility>
#include <vector>

namespace asym {
namespace {

constexpr int kOvershootGrid = 1024;

// 7-point Gauss / 15-point Kronrod pair (QUADPACK qk15 constants).
constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <typename F>
Segment kronrod15(const F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[j] * sum;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * sum;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

// Globally adaptive: always bisects the segment with the largest error
// estimate. Stops once the summed estimate is below max(1e-14, 1e-11 |I|),
// which keeps the absolute error under 1e-10 for the integrals used here.
template <typename F>
double integrate(const F& f, double a, double b) {
  constexpr int kMaxSegments = 4000;
  std::priority_queue<Segment> heap;
  Segment first = kronrod15(f, a, b);
  double value = first.value;
  double error = first.error;
  heap.push(first);
  int segments = 1;
  while (error > std::max(1e-14, 1e-11 * std::abs(value)) && segments < kMaxSegments) {
    const Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Segment left = kronrod15(f, worst.a, mid);
    const Segment right = kronrod15(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++segments;
  }
  return value;
}

void check_unit_interval(double s, const char* what) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw DomainError(std::string(what) + ": argument must lie in [0, 1]");
  }
}

// Tolerates round-off from s = cos(a) * omega / delta at the top of the range.
double clamp_normalized(double s, const char* what) {
  if (s > 1.0 && s <= 1.0 + 1e-12) return 1.0;
  check_unit_interval(s, what);
  return s;
}

}  // namespace

double cap_integral(int d_param, double s) {
  if (d_param < 0) throw InvalidDimensionError("cap_integral: d_param must be >= 0");
  check_unit_interval(s, "cap_integral");
  if (s == 0.0) return 0.0;
  if (d_param == 0) return std::asin(s);
  if (d_param == 1) return s;
  const double k = d_param;
  return integrate([k](double phi) { return std::pow(std::cos(phi), k); }, 0.0,
                   std::asin(s));
}

double cap_integral_full(int d_param) {
  if (d_param < 0) throw InvalidDimensionError("cap_integral_full: d_param must be >= 0");
  const double k = d_param;
  return std::exp(0.5 * std::log(std::numbers::pi) + std::lgamma(0.5 * (k + 1.0)) -
                  std::log(2.0) - std::lgamma(0.5 * k + 1.0));
}

double log_cap_tail(int d_param, double s) {
  if (d_param < 0) throw InvalidDimensionError("log_cap_tail: d_param must be >= 0");
  check_unit_interval(s, "log_cap_tail");
  if (s == 1.0) return -std::numeric_limits<double>::infinity();
  if (s == 0.0) return std::log(cap_integral_full(d_param));
  const double a = std::asin(s);
  if (d_param == 0) return std::log(0.5 * std::numbers::pi - a);
  if (d_param == 1) return std::log1p(-s);
  // Factor cos(a)^k out so the remaining integrand is bounded by one.
  const double k = d_param;
  const double log_ca = 0.5 * std::log1p(-s * s);
  const double scaled = integrate(
      [k, log_ca](double phi) {
        const double c = std::cos(phi);
        return c <= 0.0 ? 0.0 : std::exp(k * (std::log(c) - log_ca));
      },
      a, 0.5 * std::numbers::pi);
  return k * log_ca + std::log(scaled);
}

double log_high_cost_probability(int d, double s) {
  if (d < 2) throw InvalidDimensionError("low_cost_probability: d must be >= 2");
  s = clamp_normalized(s, "low_cost_probability");
  if (s == 0.0) return std::log(0.5);
  return std::log(0.5) + log_cap_tail(d - 2, s) - std::log(cap_integral_full(d - 2));
}

double low_cost_probability(int d, double s) {
  if (d < 2) throw InvalidDimensionError("low_cost_probability: d must be >= 2");
  s = clamp_normalized(s, "low_cost_probability");
  if (s == 0.0) return 0.5;
  if (s == 1.0) return 1.0;
  return 1.0 - std::exp(log_high_cost_probability(d, s));
}

double low_cost_probability(const CapParams& p) {
  if (!(p.delta > 0.0)) throw DomainError("low_cost_probability: delta must be > 0");
  if (!(p.cos_alpha > 0.0 && p.cos_alpha <= 1.0)) {
    throw DomainError("low_cost_probability: cos_alpha must lie in (0, 1]");
  }
  if (!(p.omega >= 0.0)) throw DomainError("low_cost_probability: omega must be >= 0");
  return low_cost_probability(p.d, p.normalized());
}

double inverse_low_cost_normalized(int d, double q) {
  if (d < 2) throw InvalidDimensionError("inverse_low_cost_probability: d must be >= 2");
  if (!(q >= 0.5 && q < 1.0)) {
    throw DomainError("inverse_low_cost_probability: q must lie in [1/2, 1)");
  }
  if (q == 0.5) return 0.0;
  // log(1 - p(s)) is strictly decreasing in s.
  const double target = std::log1p(-q);
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (log_high_cost_probability(d, mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double inverse_low_cost_probability(int d, double delta, double cos_alpha, double q) {
  if (!(delta > 0.0)) throw DomainError("inverse_low_cost_probability: delta must be > 0");
  if (!(cos_alpha > 0.0 && cos_alpha <= 1.0)) {
    throw DomainError("inverse_low_cost_probability: cos_alpha must lie in (0, 1]");
  }
  return inverse_low_cost_normalized(d, q) * delta / cos_alpha;
}

double initial_cos(int d) {
  if (d < 1) throw InvalidDimensionError("initial_cos: d must be >= 1");
  const double half = 0.5 * d;
  return std::exp(std::lgamma(half) - std::lgamma(half + 0.5)) / std::sqrt(std::numbers::pi);
}

SubspaceProjector::SubspaceProjector(Eigen::Index d, Eigen::Index k, std::optional<Matrix> basis)
    : ambient_(d), effective_(k), basis_(std::move(basis)) {}

SubspaceProjector::SubspaceProjector(Matrix basis)
    : ambient_(basis.rows()), effective_(basis.cols()), basis_(std::move(basis)) {
  if (effective_ < 1 || effective_ > ambient_) {
    throw InvalidDimensionError("SubspaceProjector: need 1 <= d' <= d");
  }
  if (!basis_->allFinite()) throw DomainError("SubspaceProjector: basis has non-finite entries");
}

SubspaceProjector SubspaceProjector::identity(Eigen::Index d) {
  if (d < 1) throw InvalidDimensionError("SubspaceProjector: d must be >= 1");
  return SubspaceProjector(d, d, std::nullopt);
}

SubspaceProjector SubspaceProjector::embedding(Eigen::Index d, Eigen::Index k) {
  if (k < 1 || k > d) throw InvalidDimensionError("SubspaceProjector: need 1 <= k <= d");
  if (k == d) return identity(d);
  Matrix r = Matrix::Zero(d, k);
  r.topRows(k).setIdentity();
  return SubspaceProjector(std::move(r));
}

Vector SubspaceProjector::project(const Vector& u) const {
  if (u.size() != effective_) {
    throw InvalidDimensionError("SubspaceProjector: direction has the wrong dimension");
  }
  Vector out = basis_ ? Vector(*basis_ * u) : u;
  const double norm = out.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DegenerateProjectionError("SubspaceProjector: R u vanishes");
  }
  return out / norm;
}

Vector project_direction(const SubspaceProjector& projector, const Vector& u) {
  return projector.project(u);
}

double log_overshoot_objective(int d_eff, double c_star, double s) {
  if (d_eff < 2) throw InvalidDimensionError("optimal_overshoot: d_eff must be >= 2");
  if (!(s >= 0.0 && s < 1.0)) throw DomainError("optimal_overshoot: s must lie in [0, 1)");
  const double log_q = log_high_cost_probability(d_eff, s);
  if (!std::isfinite(log_q)) return -std::numeric_limits<double>::infinity();
  const double q = std::exp(log_q);
  const double log_p = std::log1p(-q);
  const double log_cost = std::log1p((c_star - 1.0) * q);
  return (d_eff - 1.0) * std::log1p(-s * s) - log_p - log_q - log_cost;
}

namespace {

double solve_overshoot(int d_eff, double c_star) {
  const auto objective = [&](double s) { return log_overshoot_objective(d_eff, c_star, s); };
  int best = -1;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kOvershootGrid; ++i) {
    const double value = objective(static_cast<double>(i) / kOvershootGrid);
    if (std::isfinite(value) && value > best_value) {
      best_value = value;
      best = i;
    }
  }
  if (best < 0) throw OptimizationFailure("optimal_overshoot: objective is non-finite on the grid");

  const double lo = std::max(0, best - 1) / static_cast<double>(kOvershootGrid);
  const double hi = std::min(kOvershootGrid - 1, best + 1) / static_cast<double>(kOvershootGrid);
  double best_s = static_cast<double>(best) / kOvershootGrid;
  if (hi > lo) {
    const auto [s, neg] = boost::math::tools::brent_find_minima(
        [&](double x) {
          const double v = objective(x);
          return std::isfinite(v) ? -v : std::numeric_limits<double>::max();
        },
        lo, hi, 48);
    if (-neg > best_value) best_s = s;
  }
  // The bracket endpoints are grid points, so the refined value never loses
  // to the grid maximum; Brent may stop a hair inside [lo, hi] though.
  if (best == 0 && objective(0.0) >= objective(best_s)) best_s = 0.0;
  return best_s;
}

}  // namespace

double optimal_overshoot(int d_eff, double c_star, double delta) {
  if (d_eff < 2) throw InvalidDimensionError("optimal_overshoot: d_eff must be >= 2");
  if (!(c_star >= 1.0)) throw DomainError("optimal_overshoot: c* must be >= 1");
  if (!(delta > 0.0)) throw DomainError("optimal_overshoot: delta must be > 0");

  // s* depends on (d_eff, c*) only; attacks ask for the same pair many times.
  static std::mutex mutex;
  static std::map<std::pair<int, double>, double> cache;
  const auto key = std::make_pair(d_eff, c_star);
  {
    std::lock_guard lock(mutex);
    if (const auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const double s = solve_overshoot(d_eff, c_star);
  std::lock_guard lock(mutex);
  cache.emplace(key, s);
  return s;
}

}  // namespace asym
