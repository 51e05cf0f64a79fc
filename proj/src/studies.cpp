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

#include <cmath>

#include "asymattack/agrest.hpp"
#include "asymattack/harness.hpp"
#include "asymattack/search.hpp"

namespace asym {

using nlohmann::json;

namespace {

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  double s = 0.0;
  for (double x : v) s += x;
  mean = s / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

AsStudyReport run_as_study(double tau, double c_star, int trials, std::uint64_t seed) {
  if (trials < 100) throw PreconditionError("run_as_study: trials must be at least 100");
  grid_cells(tau);
  if (!(c_star >= 1.0)) throw DomainError("run_as_study: c* must be >= 1");

  // Segment from 0 (adversarial end) to 1 (source); adversarial for x <= theta.
  const Vector x_star = Vector::Constant(1, 1.0), x_tilde = Vector::Constant(1, 0.0);
  const Path path = Path::line(x_star, x_tilde);
  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  AsStudyReport r;
  r.tau = tau;
  r.c_star = c_star;
  r.trials = trials;
  r.bound = expected_cost_bound(tau, c_star);
  std::vector<double> as_cost, bs_cost;
  for (int i = 0; i < trials; ++i) {
    const auto oracle = SyntheticOracle::linear(Vector::Constant(1, -1.0), uniform(rng));
    CostLedger la(c_star), lb(c_star);
    const auto a = asymmetric_search(path, tau, c_star, oracle, la);
    const auto b = binary_search(path, tau, oracle, lb);
    as_cost.push_back(a.cost);
    bs_cost.push_back(b.cost);
    r.identical_probes = r.identical_probes && a.probes == b.probes;
  }
  mean_std(as_cost, r.as_mean, r.as_std);
  mean_std(bs_cost, r.bs_mean, r.bs_std);
  r.ratio = r.bs_mean / r.as_mean;
  return r;
}

std::vector<AgrestStudyRow> run_agrest_study(int d_eff, const std::vector<double>& c_stars, int n, std::uint64_t seed) {
  if (n < 500) throw PreconditionError("run_agrest_study: n must be at least 500");
  if (d_eff < 2) throw InvalidDimensionError("run_agrest_study: d_eff must be at least 2");
  std::vector<AgrestStudyRow> rows;
  const auto projector = SubspaceProjector::identity(d_eff);
  for (std::size_t k = 0; k < c_stars.size(); ++k) {
    const double c_star = c_stars[k];
    Rng rng(seed + k);
    auto state = make_agrest_state(d_eff, c_star, 0.0);

    // Linear boundary through the origin with normal w; the iterate x_t sits
    // on it and x* is placed so that cos(x_t - x*, w) equals the prior.
    const Vector w = sample_sphere(d_eff, rng);
    Vector t = sample_sphere(d_eff, rng);
    t = (t - t.dot(w) * w).normalized();
    const Vector x_t = 5.0 * t;
    const double ca = state.cos_alpha;
    const Vector x_star = x_t - (ca * w + std::sqrt(1.0 - ca * ca) * t);
    const auto oracle = SyntheticOracle::linear(w, 0.0);
    state.delta = 0.01;

    AgrestStudyRow row;
    row.c_star = c_star;
    row.s_star = state.s_star;
    row.theory_p = low_cost_probability(d_eff, state.s_star);
    // Size n' so the cost cap buys about 2n queries at the expected mix.
    const double per_query = row.theory_p + (1.0 - row.theory_p) * c_star;
    const auto n_prime = static_cast<std::int64_t>(std::ceil(4.0 * n * per_query / (c_star + 1.0)));
    CostLedger ledger(c_star);
    const auto step = agrest_estimate(x_star, x_t, state, projector, n_prime, c_star, oracle, ledger, rng);
    row.empirical_p = step.estimate.p_hat;
    row.gap = std::abs(row.empirical_p - row.theory_p);
    row.n_queries = ledger.n_queries();
    rows.push_back(row);
  }
  return rows;
}

json to_json(const AsStudyReport& r) {
  return json{{"tau", r.tau},         {"c_star", r.c_star}, {"trials", r.trials},
              {"as_mean", r.as_mean}, {"as_std", r.as_std}, {"bs_mean", r.bs_mean},
              {"bs_std", r.bs_std},   {"ratio", r.ratio},   {"bound", r.bound},
              {"identical_probes", r.identical_probes}};
}

json to_json(const std::vector<AgrestStudyRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"c_star", r.c_star},
                   {"s_star", r.s_star},
                   {"theory_p", r.theory_p},
                   {"empirical_p", r.empirical_p},
                   {"gap", r.gap},
                   {"n_queries", r.n_queries}});
  }
  return out;
}

}  // namespace asym
