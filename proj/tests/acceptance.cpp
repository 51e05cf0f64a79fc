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

// Acceptance checks on synthetic oracles. One PASS/FAIL line per criterion;
// `--criterion N` runs a single one. Exit status is nonzero on any FAIL.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "CLI11.hpp"
#include "asymattack/agrest.hpp"
#include "asymattack/harness.hpp"
#include "asymattack/search.hpp"

using namespace asym;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

template <typename F>
void parallel_for(std::size_t n, F&& body) {
  const auto jobs = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) body(i);
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

double median_of(std::vector<double> v) { return quantile(std::move(v), 0.5); }

// Segment from x_tilde = 0 to x_star = 1, adversarial for x <= theta.
struct Threshold {
  SyntheticOracle oracle;
  Path path;
  explicit Threshold(double theta)
      : oracle(SyntheticOracle::linear(Vector::Constant(1, -1.0), theta)),
        path(Path::line(Vector::Constant(1, 1.0), Vector::Constant(1, 0.0))) {}
};

std::vector<std::int64_t> midpoint_bisection(std::int64_t cells, double theta, double tau) {
  std::vector<std::int64_t> probes;
  std::int64_t lo = 0, hi = cells;
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo + 1) / 2;
    probes.push_back(mid);
    (static_cast<double>(mid) * tau <= theta ? lo : hi) = mid;
  }
  return probes;
}

// 2 c* ceil(log_{c*+1}(1/tau)) by integer powers, so no rounding slips in.
double cost_bound_reference(std::int64_t inv_tau, std::int64_t c_star) {
  std::int64_t k = 0;
  for (std::int64_t reach = 1; reach < inv_tau; reach *= (c_star + 1)) ++k;
  return 2.0 * static_cast<double>(c_star * k);
}

// First coordinate of a uniform point on S^{d-1}: z1 / sqrt(z1^2 + chi2_{d-1}).
struct SphereCoordinate {
  boost::random::normal_distribution<double> normal;
  boost::random::chi_squared_distribution<double> chi;
  explicit SphereCoordinate(int d) : chi(d - 1) {}
  double operator()(Rng& rng) {
    const double z = normal(rng);
    return z / std::sqrt(z * z + chi(rng));
  }
};

Outcome criterion_1() {
  const double tau = 1e-3;
  Rng rng(11);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  int mismatches = 0;
  for (int i = 0; i < 500; ++i) {
    const double theta = uniform(rng);
    Threshold t(theta);
    CostLedger ledger(1.0);
    if (asymmetric_search(t.path, tau, 1.0, t.oracle, ledger).probes != midpoint_bisection(1000, theta, tau)) {
      ++mismatches;
    }
  }
  return {mismatches == 0, fmt("%d/500 probe sequences differ from midpoint bisection", mismatches)};
}

Outcome criterion_2() {
  struct Case {
    std::int64_t inv_tau, c_star;
  };
  bool pass = true;
  std::string detail;
  for (auto [inv_tau, c_star] : {Case{1024, 1}, Case{1000, 10}, Case{1000, 1000}}) {
    const auto r = run_as_study(1.0 / static_cast<double>(inv_tau), static_cast<double>(c_star), 2000, 21);
    const double bound = cost_bound_reference(inv_tau, c_star);
    pass = pass && r.as_mean <= bound;
    detail += fmt("%s(tau=1/%lld, c*=%lld) mean %.2f <= %.0f", detail.empty() ? "" : "; ", (long long)inv_tau,
                  (long long)c_star, r.as_mean, bound);
  }
  return {pass, detail};
}

Outcome criterion_3() {
  const auto r = run_as_study(1e-3, 1e3, 2000, 31);
  return {r.ratio >= 2.0 && r.ratio <= 3.0,
          fmt("binary/AS mean cost ratio %.3f (binary %.1f, AS %.1f), target [2, 3]", r.ratio, r.bs_mean, r.as_mean)};
}

Outcome criterion_4() {
  const int n = 1000000;
  bool pass = true;
  double worst = 0.0;
  for (int d : {10, 100, 500}) {
    Rng rng(40 + d);
    SphereCoordinate coord(d);
    std::vector<double> u(n);
    for (auto& x : u) x = coord(rng);
    for (double s : {0.1, 0.4, 0.8}) {
      const auto hits = std::count_if(u.begin(), u.end(), [s](double x) { return x >= -s; });
      const double err = std::abs(static_cast<double>(hits) / n - low_cost_probability(d, s));
      worst = std::max(worst, err);
      pass = pass && err <= 0.002;
    }
  }
  return {pass, fmt("max |p(s) - Monte-Carlo| = %.5f over 9 settings, tolerance 0.002", worst)};
}

Outcome criterion_5() {
  const int n = 1000000;
  bool pass = true;
  std::string detail;
  for (int d : {10, 50, 500}) {
    Rng rng(50 + d);
    SphereCoordinate coord(d);
    double sum = 0.0;
    std::int64_t kept = 0;
    for (int i = 0; i < n; ++i) {
      const double x = coord(rng);
      if (x >= 0.0) sum += x, ++kept;
    }
    const double mc = sum / static_cast<double>(kept);
    const double rel = std::abs(initial_cos(d) - mc) / mc;
    pass = pass && rel <= 0.01;
    detail += fmt("%sd=%d rel err %.4f", detail.empty() ? "" : "; ", d, rel);
  }
  return {pass, detail};
}

Outcome criterion_6() {
  bool pass = true;
  std::string detail;
  for (int d : {100, 500}) {
    for (const auto& r : run_agrest_study(d, {1e2, 1e3}, 500, 60 + d)) {
      pass = pass && r.gap <= 0.05 && r.n_queries >= 500;
      detail += fmt("%sd=%d c*=%.0f p=%.3f p^=%.3f (%llu q)", detail.empty() ? "" : "; ", d, r.c_star, r.theory_p,
                    r.empirical_p, (unsigned long long)r.n_queries);
    }
  }
  return {pass, detail};
}

Outcome criterion_7() {
  const int d = 200;
  const double c_star = 100.0, delta = 0.01;
  const std::int64_t n_prime = 200;
  const auto proj = SubspaceProjector::identity(d);
  std::vector<double> diff(100);
  for (int trial = 0; trial < 100; ++trial) {
    Rng g(700 + trial);
    auto state = make_agrest_state(d, c_star, 0.0);
    const Vector w = sample_sphere(d, g);
    Vector t = sample_sphere(d, g);
    t = (t - t.dot(w) * w).normalized();
    const Vector x_t = 5.0 * t;
    const double ca = state.cos_alpha;
    const Vector x_star = x_t - (ca * w + std::sqrt(1.0 - ca * ca) * t);
    const auto oracle = SyntheticOracle::linear(w, 0.0);
    state.delta = delta;

    CostLedger la(c_star);
    Rng ra(trial);
    const auto step = agrest_estimate(x_star, x_t, state, proj, n_prime, c_star, oracle, la, ra);
    // The vanilla estimator gets the same expected cost n'(c*+1)/2.
    CostLedger lv(c_star, static_cast<double>(n_prime) * (c_star + 1.0) / 2.0);
    Rng rv(trial + 100000);
    GradientEstimate van;
    try {
      van = vanilla_estimate(x_t, delta, std::int64_t{1} << 30, proj, oracle, lv, rv);
    } catch (const EstimateBudgetError& e) {
      van = *e.partial();
    }
    diff[trial] = step.estimate.direction.dot(w) - van.direction.dot(w);
  }
  Rng boot(7);
  std::uniform_int_distribution<std::size_t> pick(0, diff.size() - 1);
  std::vector<double> means(10000);
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < diff.size(); ++i) s += diff[pick(boot)];
    m = s / static_cast<double>(diff.size());
  }
  const double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(diff.size());
  const double lower = quantile(means, 0.025);
  return {lower > 0.0, fmt("mean cosine gain %.4f, 95%% bootstrap lower bound %.4f", mean, lower)};
}

struct Problem {
  std::unique_ptr<Oracle> oracle;
  std::vector<Vector> sources;
  Problem(int dim, std::uint64_t oracle_seed, int count) {
    OracleSpec spec;
    spec.dim = dim;
    spec.seed = oracle_seed;
    oracle = make_oracle(spec);
    sources = make_sources(*oracle, count, oracle_seed + 1000);
  }
};

// Final l2 per (source, seed), all runs in parallel.
std::vector<double> final_l2(const Problem& p, const AttackConfig& base, int n_seeds) {
  const std::size_t runs = p.sources.size() * static_cast<std::size_t>(n_seeds);
  std::vector<double> out(runs);
  parallel_for(runs, [&](std::size_t i) {
    AttackConfig c = base;
    const int source = static_cast<int>(i / n_seeds);
    c.seed = run_seed(i % n_seeds, source);
    out[i] = run_attack(c, p.sources[source], *p.oracle).final_l2;
  });
  return out;
}

const std::vector<std::optional<double>> kRates{std::nullopt, 0.5, 1.0, 2.0, 4.0};

std::string rate_name(const std::optional<double>& m, Family f) {
  return m ? fmt("%g", *m) : fmt("%g (default)", default_m(f));
}

Outcome criterion_8() {
  const Problem tune(100, 2, 10);
  const Problem eval(100, 1, 20);
  bool pass = true;
  std::string detail;
  for (auto family : {Family::HsjaLike, Family::GeodaLike}) {
    AttackConfig base;
    base.family = family;
    base.c_star = 1e3;
    base.budget = 2e5;

    // Scheduler rate picked on a held-out oracle by the full method.
    std::optional<double> best_m;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& m : kRates) {
      AttackConfig c = base;
      apply_method(c, "as+agrest");
      c.m = m;
      const double med = median_of(final_l2(tune, c, 1));
      if (med < best) best = med, best_m = m;
    }

    double med[3];
    const char* names[3] = {"vanilla", "agrest", "as+agrest"};
    for (int k = 0; k < 3; ++k) {
      AttackConfig c = base;
      apply_method(c, names[k]);
      c.m = best_m;
      med[k] = median_of(final_l2(eval, c, 5));
    }
    const double reduction = 1.0 - med[2] / med[0];
    const bool ok = med[2] < med[0] && med[1] < med[0] && reduction >= 0.2;
    pass = pass && ok;
    detail += fmt("%s%s m=%s: vanilla %.4f, agrest %.4f, as+agrest %.4f, reduction %.1f%%%s", detail.empty() ? "" : "; ",
                  to_string(family).c_str(), rate_name(best_m, family).c_str(), med[0], med[1], med[2],
                  100.0 * reduction, ok ? "" : " (short)");
  }
  return {pass, detail};
}

Outcome criterion_9() {
  const std::vector<double> budgets{50.0, 100.0, 200.0};
  AttackConfig base;
  base.family = Family::HsjaLike;
  base.infinite_cost = true;
  base.max_queries = 10000000;

  // Final l2 of separate runs, one per source, at a flagged budget.
  auto final_at = [&](const Problem& p, AttackConfig c, double budget, bool baseline) {
    c.budget = budget;
    std::vector<double> l2(p.sources.size());
    parallel_for(p.sources.size(), [&](std::size_t s) {
      AttackConfig run = c;
      run.seed = run_seed(0, static_cast<int>(s));
      l2[s] = (baseline ? run_stealthy_baseline(run, p.sources[s], *p.oracle)
                        : run_attack(run, p.sources[s], *p.oracle))
                  .final_l2;
    });
    return l2;
  };

  // Rate picked on a held-out oracle at the middle budget.
  const Problem tune(100, 4, 5);
  const Problem eval(100, 3, 20);
  std::optional<double> best_m;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : kRates) {
    AttackConfig c = base;
    c.m = m;
    const double med = median_of(final_at(tune, c, budgets[1], false));
    if (med < best) best = med, best_m = m;
  }
  AttackConfig asym = base;
  asym.m = best_m;

  // Distances to the hyperplane, for the scale-free figures in the report.
  const auto& w = std::get<LinearMargin>(static_cast<const SyntheticOracle&>(*eval.oracle).model()).w;
  bool pass = true;
  std::string detail = "m=" + rate_name(best_m, Family::HsjaLike);
  for (double b : budgets) {
    const auto a = final_at(eval, asym, b, false);
    const auto r = final_at(eval, base, b, true);
    std::vector<double> a_rel, r_rel;
    int wins = 0;
    for (std::size_t s = 0; s < a.size(); ++s) {
      const double opt = std::abs(w.dot(eval.sources[s]));
      a_rel.push_back(a[s] / opt);
      r_rel.push_back(r[s] / opt);
      wins += a[s] < r[s];
    }
    const double ma = median_of(a), mr = median_of(r);
    pass = pass && ma < mr;
    detail += fmt("; B=%.0f median l2 asym %.4f vs baseline %.4f (l2/opt %.3f vs %.3f, asym lower on %d/%zu)", b, ma,
                  mr, median_of(a_rel), median_of(r_rel), wins, a.size());
  }
  return {pass, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion_10() {
  const fs::path root = fs::temp_directory_path() / ("asymattack_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  ExperimentSpec spec;
  spec.oracle.dim = 50;
  spec.families = {Family::HsjaLike, Family::GeodaLike, Family::SurfreeLike, Family::CgbaLike};
  spec.methods = {"vanilla", "as", "agrest", "as+agrest"};
  spec.c_stars = {1.0, 100.0, std::numeric_limits<double>::infinity()};
  spec.budgets = {3000.0};
  spec.attack.max_queries = 50000;
  spec.n_sources = 2;
  spec.seeds = {1, 2};
  spec.out_dir = (root / "a").string();
  spec.jobs = 1;
  const auto a = run_experiment(spec);
  spec.out_dir = (root / "b").string();
  spec.jobs = 4;
  const auto b = run_experiment(spec);

  int differing = 0, bad_rows = 0, bad_records = 0;
  if (slurp(a.aggregate) != slurp(b.aggregate)) ++differing;
  if (slurp(a.summary) != slurp(b.summary)) ++differing;
  for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
    if (slurp(a.trajectories[i]) != slurp(b.trajectories[i])) ++differing;
  }
  const auto rows = read_aggregate(a.aggregate);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!ledger_consistent(rows[i])) ++bad_rows;
    const auto table = read_csv(a.trajectories[i]);
    for (std::size_t k = 1; k < table.size(); ++k) {
      const double cost = parse_number(table[k][1]);
      const double lo = parse_number(table[k][3]), hi = parse_number(table[k][4]);
      const double expect = std::isinf(rows[i].c_star) ? hi : lo + rows[i].c_star * hi;
      if (cost != expect) ++bad_records;
    }
  }
  fs::remove_all(root);
  return {differing == 0 && bad_rows == 0 && bad_records == 0 && rows.size() == 192,
          fmt("%zu runs; %d differing files across worker counts; %d aggregate and %d trajectory rows off the ledger",
              rows.size(), differing, bad_rows, bad_records)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome()>> criteria{criterion_1, criterion_2, criterion_3, criterion_4,
                                                       criterion_5, criterion_6, criterion_7, criterion_8,
                                                       criterion_9, criterion_10};
  bool all = true;
  for (int k = 1; k <= 10; ++k) {
    if (only && k != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", k, o.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
