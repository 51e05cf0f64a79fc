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

#ifndef ASYMATTACK_HARNESS_HPP
#define ASYMATTACK_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "asymattack/attacks.hpp"
#include "json.hpp"

namespace asym {

struct OracleSpec {
  std::string kind = "linear";  // linear | sphere | mlp | remote
  int dim = 100;
  std::uint64_t seed = 1;       // draws the normal (linear) or center (sphere)
  double bias = 0.0;
  double radius = 0.0;          // sphere; 0 picks 1.2 sqrt(dim)
  std::string path;             // mlp weights file
  std::string url;              // remote endpoint
  int timeout_ms = 2000;
  int retries = 2;
};

struct ExperimentSpec {
  OracleSpec oracle;
  std::vector<Family> families{Family::HsjaLike};
  std::vector<std::string> methods{"vanilla", "as+agrest"};
  /// +infinity selects flagged-only accounting.
  std::vector<double> c_stars{1e3};
  std::vector<double> budgets{1e4};
  int n_sources = 5;
  std::uint64_t source_seed = 0;
  std::vector<std::uint64_t> seeds{0};
  /// Per-run knobs not swept by the grid (tau, m, n'_1, ...).
  AttackConfig attack;
  std::string out_dir = "results";
  int jobs = 0;  // 0: hardware concurrency

  void validate() const;
};

/// Parses the JSON config. Unknown keys are rejected so typos surface.
ExperimentSpec parse_experiment_spec(const nlohmann::json& doc);
ExperimentSpec load_experiment_spec(const std::string& path);
nlohmann::json to_json(const ExperimentSpec& spec);

/// ASYMATTACK_OUT and ASYMATTACK_JOBS override out_dir and jobs.
void apply_environment(ExperimentSpec& spec);

std::unique_ptr<Oracle> make_oracle(const OracleSpec& spec);

/// Standard-normal draws kept once the oracle labels them source class.
std::vector<Vector> make_sources(const Oracle& oracle, int count, std::uint64_t seed);

/// Sets use_as / use_agrest from "vanilla", "as", "agrest" or "as+agrest".
void apply_method(AttackConfig& config, const std::string& method);

/// Seed of one run; shared by every method so comparisons are paired.
std::uint64_t run_seed(std::uint64_t seed, int source_id);

struct ResultRow {
  std::string family, method;
  double c_star = 1.0;
  double budget = 0.0;
  int source_id = 0;
  std::uint64_t seed = 0;
  double final_l2 = 0.0;
  double cost_spent = 0.0;
  std::uint64_t n_low = 0;
  std::uint64_t n_high = 0;
};

/// cost_spent = n_low + c* n_high, or n_high when c* is infinite.
bool ledger_consistent(const ResultRow& row);

struct ExperimentOutput {
  std::vector<ResultRow> rows;  // grid order
  std::filesystem::path aggregate, summary;
  std::vector<std::filesystem::path> trajectories;
};

ExperimentOutput run_experiment(const ExperimentSpec& spec);

std::string trajectory_name(const ResultRow& row);
void write_trajectory(const std::filesystem::path& file, const AttackTrace& trace);
void write_aggregate(const std::filesystem::path& file, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_aggregate(const std::filesystem::path& file);
nlohmann::json summarize(const std::vector<ResultRow>& rows);

/// Shortest round-trip decimal; "inf" for infinity.
std::string format_number(double v);
double parse_number(const std::string& s);

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& file);
std::string csv_line(const std::vector<std::string>& fields);

// Studies on synthetic boundaries.

struct AsStudyReport {
  double tau = 0.0, c_star = 1.0;
  int trials = 0;
  double as_mean = 0.0, as_std = 0.0;
  double bs_mean = 0.0, bs_std = 0.0;
  double ratio = 0.0;  // bs_mean / as_mean
  double bound = 0.0;  // expected_cost_bound(tau, c_star)
  bool identical_probes = true;  // every trial probed the same cells
};

/// Boundary position uniform on [0, 1] along a unit segment.
AsStudyReport run_as_study(double tau, double c_star, int trials, std::uint64_t seed = 0);

struct AgrestStudyRow {
  double c_star = 1.0;
  double s_star = 0.0;
  double theory_p = 0.0;
  double empirical_p = 0.0;
  double gap = 0.0;
  std::uint64_t n_queries = 0;
};

/// One AGREST estimate per c* on a linear boundary whose angle to the
/// iterate equals the scheduler's prior; at least n queries each.
std::vector<AgrestStudyRow> run_agrest_study(int d_eff, const std::vector<double>& c_stars, int n,
                                             std::uint64_t seed = 0);

nlohmann::json to_json(const AsStudyReport& report);
nlohmann::json to_json(const std::vector<AgrestStudyRow>& rows);

// Median curves.

/// Type-7 quantile of unsorted values.
double quantile(std::vector<double> values, double q);

struct CurvePoint {
  double cost, median_l2, q25, q75;
};

/// Per-run step functions (cost, best-so-far l2) merged on the union of
/// their cost points, starting where every run has a value.
std::vector<CurvePoint> median_curve(const std::vector<std::vector<std::pair<double, double>>>& runs);

/// Reads aggregate.csv and the trajectories next to it; writes
/// curves/<family>_<method>_c<c*>.csv under out_dir.
std::vector<std::filesystem::path> emit_curves(const std::filesystem::path& aggregate,
                                               const std::filesystem::path& out_dir);

}  // namespace asym

#endif  // ASYMATTACK_HARNESS_HPP
