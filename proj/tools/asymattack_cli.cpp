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

// Command-line front end: attack, grid, as-study, agrest-study, curves.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "asymattack/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace asym;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> config;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw MalformedSpecError(std::string("invalid JSON in '") + path + "': " + e.what());
  }
}

/// Config file, then environment, then flags.
std::string out_dir(const Common& c, const std::string& from_config) {
  if (c.out) return *c.out;
  if (const char* env = std::getenv("ASYMATTACK_OUT"); env && *env) return env;
  return from_config;
}

void write_json(const fs::path& file, const json& doc) {
  std::error_code ec;
  fs::create_directories(file.parent_path(), ec);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw UnwritableOutputError("cannot write '" + file.string() + "'");
  out << doc.dump(2) << '\n';
}

// Flags shared by attack and grid; they override ExperimentSpec fields.
struct SpecFlags {
  std::optional<std::string> oracle_kind, weights, url;
  std::optional<int> dim;
  std::optional<std::uint64_t> oracle_seed;
  std::optional<double> tau, m;
  std::optional<std::int64_t> n_prime_1;
  std::optional<int> subspace_dim;

  void add(CLI::App* cmd) {
    cmd->add_option("--oracle", oracle_kind, "Oracle kind: linear, sphere, mlp, remote");
    cmd->add_option("--weights", weights, "MLP weights file (oracle mlp)");
    cmd->add_option("--url", url, "Endpoint (oracle remote)");
    cmd->add_option("--dim", dim, "Input dimension");
    cmd->add_option("--oracle-seed", oracle_seed, "Seed of the synthetic oracle");
    cmd->add_option("--tau", tau, "Search tolerance");
    cmd->add_option("--m", m, "Scheduler rate");
    cmd->add_option("--n-prime", n_prime_1, "Initial AGREST cost parameter n'_1");
    cmd->add_option("--subspace-dim", subspace_dim, "Sampling subspace dimension, 0 for full");
  }
  void apply(ExperimentSpec& s) const {
    if (oracle_kind) s.oracle.kind = *oracle_kind;
    if (weights) s.oracle.path = *weights;
    if (url) s.oracle.url = *url;
    if (dim) s.oracle.dim = *dim;
    if (oracle_seed) s.oracle.seed = *oracle_seed;
    if (tau) s.attack.tau = *tau;
    if (m) s.attack.m = *m;
    if (n_prime_1) s.attack.n_prime_1 = *n_prime_1;
    if (subspace_dim) s.attack.subspace_dim = *subspace_dim;
  }
};

ExperimentSpec base_spec(const Common& c) {
  ExperimentSpec s = c.config ? parse_experiment_spec(read_json(*c.config)) : ExperimentSpec{};
  apply_environment(s);
  if (c.out) s.out_dir = *c.out;
  return s;
}

std::vector<double> parse_numbers(const std::vector<std::string>& items) {
  std::vector<double> v;
  for (const auto& s : items) v.push_back(parse_number(s));
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cost-asymmetric decision-based attacks on synthetic and remote oracles"};
  app.require_subcommand(1);

  // attack
  Common attack_c;
  SpecFlags attack_f;
  std::string family = "hsja", method = "as+agrest", c_star_s = "1000";
  std::optional<double> budget;
  int source_id = 0;
  auto* attack = app.add_subcommand("attack", "Run one attack and write its trajectory");
  add_common(attack, attack_c);
  attack_f.add(attack);
  attack->add_option("--family", family, "hsja, geoda, surfree or cgba");
  attack->add_option("--method", method, "vanilla, as, agrest or as+agrest");
  attack->add_option("--c-star", c_star_s, "Cost ratio, or inf for flagged-only accounting");
  attack->add_option("--budget", budget, "Cost budget");
  attack->add_option("--source-id", source_id, "Index of the generated source point");

  // grid
  Common grid_c;
  SpecFlags grid_f;
  std::vector<std::string> families, methods, c_stars_s;
  std::vector<double> budgets;
  std::optional<int> n_sources, jobs;
  auto* grid = app.add_subcommand("grid", "Run a full experiment grid");
  add_common(grid, grid_c);
  grid_f.add(grid);
  grid->add_option("--families", families, "Attack families");
  grid->add_option("--methods", methods, "Methods");
  grid->add_option("--c-stars", c_stars_s, "Cost ratios (inf allowed)");
  grid->add_option("--budgets", budgets, "Budgets");
  grid->add_option("--sources", n_sources, "Number of source points");
  grid->add_option("--jobs", jobs, "Worker threads, 0 for all cores");

  // as-study
  Common as_c;
  std::optional<double> as_tau, as_c_star;
  std::optional<int> trials;
  auto* as_study = app.add_subcommand("as-study", "Mean search cost of AS against binary search");
  add_common(as_study, as_c);
  as_study->add_option("--tau", as_tau, "Search tolerance (default 0.001)");
  as_study->add_option("--c-star", as_c_star, "Cost ratio (default 1000)");
  as_study->add_option("--trials", trials, "Trials, at least 100 (default 2000)");

  // agrest-study
  Common ag_c;
  std::optional<int> d_eff, n;
  std::vector<double> ag_c_stars;
  auto* ag_study = app.add_subcommand("agrest-study", "Empirical low-cost fraction against the cap probability");
  add_common(ag_study, ag_c);
  ag_study->add_option("--d-eff", d_eff, "Effective dimension (default 500)");
  ag_study->add_option("--c-star", ag_c_stars, "Cost ratios (default 1 10 100 1000)");
  ag_study->add_option("--n", n, "Minimum queries per cost ratio, at least 500 (default 2000)");

  // curves
  Common cv_c;
  std::optional<std::string> aggregate;
  auto* curves = app.add_subcommand("curves", "Median l2 against cost from a finished grid");
  add_common(curves, cv_c);
  curves->add_option("--aggregate", aggregate, "aggregate.csv (default <out>/aggregate.csv)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*attack) {
      auto spec = base_spec(attack_c);
      attack_f.apply(spec);
      AttackConfig config = spec.attack;
      config.family = parse_family(family);
      apply_method(config, method);
      const double c_star = parse_number(c_star_s);
      config.infinite_cost = std::isinf(c_star);
      config.c_star = config.infinite_cost ? 1.0 : c_star;
      config.budget = budget.value_or(spec.budgets.front());
      const std::uint64_t seed = attack_c.seed.value_or(spec.seeds.front());
      config.seed = run_seed(seed, source_id);
      config.validate();

      const auto oracle = make_oracle(spec.oracle);
      const auto sources = make_sources(*oracle, source_id + 1, spec.source_seed);
      const auto trace = run_attack(config, sources[source_id], *oracle);

      ResultRow row{to_string(config.family), config.method(), c_star, config.budget, source_id, seed,
                    trace.final_l2, trace.total_cost, trace.n_low, trace.n_high};
      const fs::path dir(spec.out_dir);
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) throw UnwritableOutputError("cannot create '" + dir.string() + "'");
      write_trajectory(dir / trajectory_name(row), trace);
      std::cout << json{{"family", row.family},
                        {"method", row.method},
                        {"c_star", std::isinf(c_star) ? json("inf") : json(c_star)},
                        {"budget", row.budget},
                        {"source_id", row.source_id},
                        {"seed", row.seed},
                        {"final_l2", row.final_l2},
                        {"cost_spent", row.cost_spent},
                        {"n_low", row.n_low},
                        {"n_high", row.n_high},
                        {"iterations", trace.iterations},
                        {"trajectory", (dir / trajectory_name(row)).string()}}
                       .dump(2)
                << '\n';
    } else if (*grid) {
      auto spec = base_spec(grid_c);
      grid_f.apply(spec);
      if (!families.empty()) {
        spec.families.clear();
        for (const auto& f : families) spec.families.push_back(parse_family(f));
      }
      if (!methods.empty()) spec.methods = methods;
      if (!c_stars_s.empty()) spec.c_stars = parse_numbers(c_stars_s);
      if (!budgets.empty()) spec.budgets = budgets;
      if (n_sources) spec.n_sources = *n_sources;
      if (jobs) spec.jobs = *jobs;
      if (grid_c.seed) spec.seeds = {*grid_c.seed};
      const auto out = run_experiment(spec);
      write_json(fs::path(spec.out_dir) / "spec.json", to_json(spec));
      std::cout << summarize(out.rows).dump(2) << '\n';
    } else if (*as_study) {
      json cfg = as_c.config ? read_json(*as_c.config) : json::object();
      const double tau = as_tau.value_or(cfg.value("tau", 1e-3));
      const double c_star = as_c_star.value_or(cfg.value("c_star", 1e3));
      const int t = trials.value_or(cfg.value("trials", 2000));
      const std::uint64_t seed = as_c.seed.value_or(cfg.value("seed", std::uint64_t{0}));
      const auto report = to_json(run_as_study(tau, c_star, t, seed));
      write_json(fs::path(out_dir(as_c, cfg.value("out_dir", std::string("results")))) / "as_study.json", report);
      std::cout << report.dump(2) << '\n';
    } else if (*ag_study) {
      json cfg = ag_c.config ? read_json(*ag_c.config) : json::object();
      const int d = d_eff.value_or(cfg.value("d_eff", 500));
      if (ag_c_stars.empty()) ag_c_stars = cfg.value("c_stars", std::vector<double>{1.0, 10.0, 100.0, 1000.0});
      const int count = n.value_or(cfg.value("n", 2000));
      const std::uint64_t seed = ag_c.seed.value_or(cfg.value("seed", std::uint64_t{0}));
      const auto report = json{{"d_eff", d}, {"n", count}, {"rows", to_json(run_agrest_study(d, ag_c_stars, count, seed))}};
      write_json(fs::path(out_dir(ag_c, cfg.value("out_dir", std::string("results")))) / "agrest_study.json", report);
      std::cout << report.dump(2) << '\n';
    } else if (*curves) {
      // No randomness here; --seed is accepted for a uniform interface.
      json cfg = cv_c.config ? read_json(*cv_c.config) : json::object();
      const fs::path dir = out_dir(cv_c, cfg.value("out_dir", std::string("results")));
      const fs::path agg = aggregate ? fs::path(*aggregate) : fs::path(cfg.value("aggregate", (dir / "aggregate.csv").string()));
      for (const auto& f : emit_curves(agg, dir)) std::cout << f.string() << '\n';
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
