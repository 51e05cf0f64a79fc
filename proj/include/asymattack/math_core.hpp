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

#ifndef ASYMATTACK_MATH_CORE_HPP
#define ASYMATTACK_MATH_CORE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

#include <boost/random/normal_distribution.hpp>

#include "asymattack/errors.hpp"

namespace asym {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Draws a point uniformly from the unit (d-1)-sphere by normalizing a
/// standard Gaussian vector. Zero-norm draws are rejected.
template <typename Scalar = double, typename Engine>
VectorX<Scalar> sample_sphere(Eigen::Index d, Engine& rng) {
  if (d < 1) throw InvalidDimensionError("sample_sphere: dimension must be >= 1");
  boost::random::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  VectorX<Scalar> u(d);
  for (;;) {
    for (Eigen::Index i = 0; i < d; ++i) u[i] = normal(rng);
    const Scalar norm = u.norm();
    if (norm > Scalar(0) && std::isfinite(norm)) return u / norm;
  }
}

template <typename Derived>
bool is_unit(const Eigen::MatrixBase<Derived>& v, double tol = 1e-9) {
  return std::abs(static_cast<double>(v.norm()) - 1.0) <= tol;
}

/// I(k, s) = integral over [0, s] of (1 - t^2)^((k - 1) / 2) dt.
///
/// Evaluated as the integral of cos^k over [0, asin s], which removes the
/// endpoint singularity at k = 0. Absolute error is below 1e-10.
double cap_integral(int d_param, double s);

/// log of the complementary integral over [s, 1]. Returns -inf at s = 1.
double log_cap_tail(int d_param, double s);

/// I(k, 1) in closed form: sqrt(pi) Gamma((k + 1) / 2) / (2 Gamma(k / 2 + 1)).
double cap_integral_full(int d_param);

struct CapParams {
  int d = 2;
  double delta = 1.0;
  double cos_alpha = 1.0;
  double omega = 0.0;

  /// cos_alpha * omega / delta, the cap height in units of the sampling radius.
  double normalized() const { return cos_alpha * omega / delta; }
};

/// Probability that a uniform direction u satisfies <g, u> >= -s in R^d.
double low_cost_probability(int d, double s);
double low_cost_probability(const CapParams& p);

/// log(1 - p(s)), accurate when the high-cost mass underflows a double.
double log_high_cost_probability(int d, double s);

/// Inverse of low_cost_probability in the normalized argument s.
double inverse_low_cost_normalized(int d, double q);

/// Overshoot omega with low_cost_probability = q.
double inverse_low_cost_probability(int d, double delta, double cos_alpha, double q);

/// E[cos a] for the angle between a uniform direction and a fixed unit
/// vector, conditioned on the cosine being nonnegative:
/// Gamma(d/2) / (sqrt(pi) Gamma((d+1)/2)).
double initial_cos(int d);

/// Maps directions sampled in a d'-dimensional subspace into R^d.
class SubspaceProjector {
 public:
  static SubspaceProjector identity(Eigen::Index d);
  /// First-k-coordinates embedding of R^k into R^d.
  static SubspaceProjector embedding(Eigen::Index d, Eigen::Index k);
  explicit SubspaceProjector(Matrix basis);

  Eigen::Index ambient_dim() const { return ambient_; }
  Eigen::Index effective_dim() const { return effective_; }
  bool is_identity() const { return !basis_.has_value(); }
  const std::optional<Matrix>& basis() const { return basis_; }

  /// R u / |R u|.
  Vector project(const Vector& u) const;

  /// Uniform draw in the subspace, mapped into R^d and normalized.
  template <typename Engine>
  Vector sample(Engine& rng) const {
    if (!basis_) return sample_sphere<double>(effective_, rng);
    for (;;) {
      try {
        return project(sample_sphere<double>(effective_, rng));
      } catch (const DegenerateProjectionError&) {
      }
    }
  }

 private:
  SubspaceProjector(Eigen::Index d, Eigen::Index k, std::optional<Matrix> basis);

  Eigen::Index ambient_;
  Eigen::Index effective_;
  std::optional<Matrix> basis_;
};

Vector project_direction(const SubspaceProjector& projector, const Vector& u);

/// log of (1 - s^2)^(d-1) / (p (1 - p) (c* - (c* - 1) p)) with p = p(s).
double log_overshoot_objective(int d_eff, double c_star, double s);

/// Normalized overshoot s* in [0, 1) maximizing the objective above. The
/// attack-time overshoot is s* delta / cos(alpha_t).
double optimal_overshoot(int d_eff, double c_star, double delta = 1.0);

}  // namespace asym

#endif  // ASYMATTACK_MATH_CORE_HPP
