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

// Test-only reference computations. Nothing here calls into the library's
// numerical routines, so the values they produce can be used to check it.
#ifndef ASYMATTACK_TESTS_ORACLES_HPP
#define ASYMATTACK_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace asym::testing {

// Unit vector built by normalizing i.i.d. Gaussians, drawn with its own engine.
inline Eigen::VectorXd gaussian_direction(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd u(d);
  for (Eigen::Index i = 0; i < d; ++i) u[i] = normal(rng);
  return u / u.norm();
}

// First coordinate of uniform sphere samples; <e1, u> has the same law as <g, u>.
inline std::vector<double> first_coordinates(std::uint64_t seed, int d, int n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    double first = normal(rng);
    double sq = first * first;
    for (int j = 1; j < d; ++j) {
      const double z = normal(rng);
      sq += z * z;
    }
    out[i] = first / std::sqrt(sq);
  }
  return out;
}

// Dense-grid log objective for the overshoot problem. The cap mass is built
// by cumulative Simpson integration of cos^k in angle space on the grid
// s_j = j / n, independently of the adaptive quadrature in the library.
struct DenseOvershootGrid {
  std::vector<double> s;
  std::vector<double> log_objective;

  DenseOvershootGrid(int d, double c_star, int n) : s(n), log_objective(n) {
    const double k = d - 2;
    auto f = [k](double phi) { return k == 0 ? 1.0 : std::pow(std::cos(phi), k); };
    auto simpson = [&](double a, double b) {
      const int panels = 8;
      const double h = (b - a) / panels;
      double acc = f(a) + f(b);
      for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
      return acc * h / 3.0;
    };
    std::vector<double> cumulative(n + 1, 0.0);
    for (int j = 0; j < n; ++j) {
      const double a = std::asin(static_cast<double>(j) / n);
      const double b = j + 1 == n ? 0.5 * std::numbers::pi : std::asin(static_cast<double>(j + 1) / n);
      cumulative[j + 1] = cumulative[j] + simpson(a, b);
    }
    const double total = cumulative[n];
    for (int j = 0; j < n; ++j) {
      s[j] = static_cast<double>(j) / n;
      const double q = 0.5 * (total - cumulative[j]) / total;  // 1 - p
      if (!(q > 0.0)) {
        log_objective[j] = -INFINITY;
        continue;
      }
      const double p = 1.0 - q;
      log_objective[j] = (d - 1.0) * std::log1p(-s[j] * s[j]) - std::log(p) - std::log(q) -
                         std::log(c_star - (c_star - 1.0) * p);
    }
  }

  double argmax() const {
    return s[std::max_element(log_objective.begin(), log_objective.end()) - log_objective.begin()];
  }
};

// Random unit normal w through the origin, plus standard-normal sources on
// the negative side (rejection sampled).
struct LinearProblem {
  Eigen::VectorXd w;
  std::vector<Eigen::VectorXd> sources;

  LinearProblem(std::uint64_t seed, Eigen::Index d, int n_sources) {
    std::mt19937_64 rng(seed);
    w = gaussian_direction(rng, d);
    std::normal_distribution<double> normal;
    while (static_cast<int>(sources.size()) < n_sources) {
      Eigen::VectorXd x(d);
      for (Eigen::Index i = 0; i < d; ++i) x[i] = normal(rng);
      if (w.dot(x) < 0.0) sources.push_back(x);
    }
  }
  // Distance from x to the hyperplane.
  double optimum(const Eigen::VectorXd& x) const { return std::abs(w.dot(x)); }
};

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace asym::testing

#endif
