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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "asymattack/harness.hpp"

namespace asym {

namespace fs = std::filesystem;

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw EmptyInputError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<CurvePoint> median_curve(const std::vector<std::vector<std::pair<double, double>>>& runs) {
  std::vector<const std::vector<std::pair<double, double>>*> live;
  for (const auto& r : runs) {
    if (!r.empty()) live.push_back(&r);
  }
  if (live.empty()) throw EmptyInputError("median_curve: no trajectory records");
  double start = 0.0;
  std::vector<double> grid;
  for (const auto* r : live) {
    start = std::max(start, r->front().first);
    for (const auto& p : *r) grid.push_back(p.first);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  grid.erase(grid.begin(), std::lower_bound(grid.begin(), grid.end(), start));

  std::vector<std::size_t> cursor(live.size(), 0);
  std::vector<CurvePoint> curve;
  std::vector<double> at(live.size());
  for (double g : grid) {
    for (std::size_t k = 0; k < live.size(); ++k) {
      const auto& r = *live[k];
      while (cursor[k] + 1 < r.size() && r[cursor[k] + 1].first <= g) ++cursor[k];
      at[k] = r[cursor[k]].second;
    }
    curve.push_back({g, quantile(at, 0.5), quantile(at, 0.25), quantile(at, 0.75)});
  }
  return curve;
}

namespace {

std::vector<std::pair<double, double>> read_trajectory(const fs::path& file) {
  const auto table = read_csv(file);
  if (table.empty() || table.front().size() < 3 || table.front()[1] != "cumulative_cost" || table.front()[2] != "l2") {
    throw ParseError("'" + file.string() + "' is not a trajectory file");
  }
  std::vector<std::pair<double, double>> points;
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (table[i].size() < 3) continue;
    const double cost = parse_number(table[i][1]), l2 = parse_number(table[i][2]);
    if (!points.empty() && points.back().first == cost) {
      points.back().second = l2;
    } else {
      points.emplace_back(cost, l2);
    }
  }
  return points;
}

}  // namespace

std::vector<fs::path> emit_curves(const fs::path& aggregate, const fs::path& out_dir) {
  const auto rows = read_aggregate(aggregate);
  if (rows.empty()) throw EmptyInputError("emit_curves: '" + aggregate.string() + "' has no rows");
  const fs::path traj_dir = aggregate.parent_path() / "trajectories";

  // Largest budget per (family, method, c*): its traces cover the smaller ones.
  using Key = std::tuple<std::string, std::string, double>;
  std::map<Key, double> budget;
  std::vector<Key> order;
  for (const auto& r : rows) {
    const Key key{r.family, r.method, r.c_star};
    auto [it, fresh] = budget.try_emplace(key, r.budget);
    if (fresh) order.push_back(key);
    it->second = std::max(it->second, r.budget);
  }

  const fs::path curve_dir = out_dir / "curves";
  std::error_code ec;
  fs::create_directories(curve_dir, ec);
  if (ec || !fs::is_directory(curve_dir)) throw UnwritableOutputError("cannot create '" + curve_dir.string() + "'");

  std::vector<fs::path> files;
  for (const auto& key : order) {
    std::vector<std::vector<std::pair<double, double>>> runs;
    for (const auto& r : rows) {
      if (Key{r.family, r.method, r.c_star} == key && r.budget == budget[key]) {
        runs.push_back(read_trajectory(traj_dir / trajectory_name(r)));
      }
    }
    const auto& [family, method, c_star] = key;
    const fs::path file = curve_dir / (family + "_" + method + "_c" + format_number(c_star) + ".csv");
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw UnwritableOutputError("cannot write '" + file.string() + "'");
    out << "# quantiles: linear interpolation between order statistics (type 7); best-so-far l2 carried forward\r\n";
    out << csv_line({"cost", "median_l2", "q25", "q75"});
    for (const auto& p : median_curve(runs)) {
      out << csv_line({format_number(p.cost), format_number(p.median_l2), format_number(p.q25), format_number(p.q75)});
    }
    out.close();
    if (!out) throw UnwritableOutputError("failed writing '" + file.string() + "'");
    files.push_back(file);
  }
  return files;
}

}  // namespace asym
