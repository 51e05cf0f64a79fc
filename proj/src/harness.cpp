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

#include "asymattack/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/random/normal_distribution.hpp>

namespace asym {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kMethods{"vanilla", "as", "agrest", "as+agrest"};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

[[noreturn]] void malformed(const std::string& what) { throw MalformedSpecError("experiment spec: " + what); }

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    malformed("field '" + key + "' has the wrong type");
  }
}

double number_or_inf(const json& j, const std::string& key) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    malformed("field '" + key + "' must be a number or \"inf\"");
  }
  if (!j.is_number()) malformed("field '" + key + "' must be a number or \"inf\"");
  return j.get<double>();
}

json number_json(double v) { return std::isinf(v) ? json("inf") : json(v); }

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) malformed("unknown key '" + key + "' in " + where);
  }
}

OracleSpec parse_oracle(const json& j) {
  if (!j.is_object()) malformed("'oracle' must be an object");
  reject_unknown(j, {"kind", "dim", "seed", "bias", "radius", "path", "url", "timeout_ms", "retries"}, "oracle");
  OracleSpec o;
  if (j.contains("kind")) o.kind = get_as<std::string>(j["kind"], "oracle.kind");
  if (j.contains("dim")) o.dim = get_as<int>(j["dim"], "oracle.dim");
  if (j.contains("seed")) o.seed = get_as<std::uint64_t>(j["seed"], "oracle.seed");
  if (j.contains("bias")) o.bias = get_as<double>(j["bias"], "oracle.bias");
  if (j.contains("radius")) o.radius = get_as<double>(j["radius"], "oracle.radius");
  if (j.contains("path")) o.path = get_as<std::string>(j["path"], "oracle.path");
  if (j.contains("url")) o.url = get_as<std::string>(j["url"], "oracle.url");
  if (j.contains("timeout_ms")) o.timeout_ms = get_as<int>(j["timeout_ms"], "oracle.timeout_ms");
  if (j.contains("retries")) o.retries = get_as<int>(j["retries"], "oracle.retries");
  return o;
}

void parse_attack(const json& j, AttackConfig& a) {
  if (!j.is_object()) malformed("'attack' must be an object");
  reject_unknown(j,
                 {"tau", "m", "n_prime_1", "geometric_growth", "batch", "delta_scale", "subspace_dim",
                  "stealth_c_star", "max_queries", "max_iterations", "search_reserve", "max_halvings",
                  "max_escalations", "init_radius", "init_doublings", "init_directions"},
                 "attack");
  auto num = [&](const char* key, auto& field) {
    if (j.contains(key)) field = get_as<std::decay_t<decltype(field)>>(j[key], std::string("attack.") + key);
  };
  num("tau", a.tau);
  if (j.contains("m") && !j["m"].is_null()) a.m = get_as<double>(j["m"], "attack.m");
  num("n_prime_1", a.n_prime_1);
  num("geometric_growth", a.geometric_growth);
  num("batch", a.batch);
  num("delta_scale", a.delta_scale);
  num("subspace_dim", a.subspace_dim);
  num("stealth_c_star", a.stealth_c_star);
  num("max_queries", a.max_queries);
  num("max_iterations", a.max_iterations);
  num("search_reserve", a.search_reserve);
  num("max_halvings", a.max_halvings);
  num("max_escalations", a.max_escalations);
  num("init_radius", a.init_radius);
  num("init_doublings", a.init_doublings);
  num("init_directions", a.init_directions);
}

AttackConfig cell_config(const ExperimentSpec& spec, Family family, const std::string& method, double c_star,
                         double budget, std::uint64_t seed) {
  AttackConfig c = spec.attack;
  c.family = family;
  apply_method(c, method);
  c.infinite_cost = std::isinf(c_star);
  c.c_star = c.infinite_cost ? 1.0 : c_star;
  c.budget = budget;
  c.seed = seed;
  return c;
}

}  // namespace

void apply_method(AttackConfig& config, const std::string& method) {
  if (method == "vanilla") {
    config.use_as = config.use_agrest = false;
  } else if (method == "as") {
    config.use_as = true;
    config.use_agrest = false;
  } else if (method == "agrest") {
    config.use_as = false;
    config.use_agrest = true;
  } else if (method == "as+agrest") {
    config.use_as = config.use_agrest = true;
  } else {
    throw DomainError("unknown method '" + method + "'");
  }
}

std::uint64_t run_seed(std::uint64_t seed, int source_id) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(source_id) + 1));
}

void ExperimentSpec::validate() const {
  if (families.empty() || methods.empty() || c_stars.empty() || budgets.empty() || seeds.empty()) {
    malformed("families, methods, c_stars, budgets and seeds must be non-empty");
  }
  if (n_sources < 1) malformed("sources.count must be at least 1");
  if (oracle.dim < 1) malformed("oracle.dim must be positive");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) malformed("seeds must be distinct");
  for (const auto& m : methods) {
    if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end()) malformed("unknown method '" + m + "'");
  }
  for (double c : c_stars) {
    if (!(c >= 1.0)) malformed("every c* must be >= 1 or \"inf\"");
  }
  for (auto f : families) {
    for (const auto& m : methods) {
      for (double c : c_stars) {
        for (double b : budgets) {
          try {
            cell_config(*this, f, m, c, b, seeds.front()).validate();
          } catch (const std::exception& e) {
            malformed(std::string("invalid grid cell: ") + e.what());
          }
        }
      }
    }
  }
}

ExperimentSpec parse_experiment_spec(const json& doc) {
  if (!doc.is_object()) malformed("document must be an object");
  reject_unknown(doc, {"oracle", "families", "methods", "c_stars", "budgets", "sources", "seeds", "attack", "out_dir", "jobs"},
                 "spec");
  ExperimentSpec s;
  if (doc.contains("oracle")) s.oracle = parse_oracle(doc["oracle"]);
  if (doc.contains("families")) {
    s.families.clear();
    for (const auto& f : get_as<std::vector<std::string>>(doc["families"], "families")) {
      try {
        s.families.push_back(parse_family(f));
      } catch (const DomainError&) {
        malformed("unknown family '" + f + "'");
      }
    }
  }
  if (doc.contains("methods")) s.methods = get_as<std::vector<std::string>>(doc["methods"], "methods");
  if (doc.contains("c_stars")) {
    if (!doc["c_stars"].is_array()) malformed("'c_stars' must be an array");
    s.c_stars.clear();
    for (const auto& c : doc["c_stars"]) s.c_stars.push_back(number_or_inf(c, "c_stars"));
  }
  if (doc.contains("budgets")) s.budgets = get_as<std::vector<double>>(doc["budgets"], "budgets");
  if (doc.contains("sources")) {
    const auto& src = doc["sources"];
    if (!src.is_object()) malformed("'sources' must be an object");
    reject_unknown(src, {"count", "seed"}, "sources");
    if (src.contains("count")) s.n_sources = get_as<int>(src["count"], "sources.count");
    if (src.contains("seed")) s.source_seed = get_as<std::uint64_t>(src["seed"], "sources.seed");
  }
  if (doc.contains("seeds")) s.seeds = get_as<std::vector<std::uint64_t>>(doc["seeds"], "seeds");
  if (doc.contains("attack")) parse_attack(doc["attack"], s.attack);
  if (doc.contains("out_dir")) s.out_dir = get_as<std::string>(doc["out_dir"], "out_dir");
  if (doc.contains("jobs")) s.jobs = get_as<int>(doc["jobs"], "jobs");
  if (s.oracle.kind != "linear" && s.oracle.kind != "sphere" && s.oracle.kind != "mlp" && s.oracle.kind != "remote") {
    throw UnknownOracleKindError("experiment spec: unknown oracle kind '" + s.oracle.kind + "'");
  }
  s.validate();
  return s;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    malformed(std::string("invalid JSON: ") + e.what());
  }
  return parse_experiment_spec(doc);
}

json to_json(const ExperimentSpec& s) {
  json c_stars = json::array();
  for (double c : s.c_stars) c_stars.push_back(number_json(c));
  json families = json::array();
  for (auto f : s.families) families.push_back(to_string(f));
  const auto& a = s.attack;
  json attack{{"tau", a.tau},
              {"n_prime_1", a.n_prime_1},
              {"geometric_growth", a.geometric_growth},
              {"batch", a.batch},
              {"delta_scale", a.delta_scale},
              {"subspace_dim", a.subspace_dim},
              {"stealth_c_star", a.stealth_c_star},
              {"max_queries", a.max_queries},
              {"max_iterations", a.max_iterations},
              {"search_reserve", a.search_reserve},
              {"max_halvings", a.max_halvings},
              {"max_escalations", a.max_escalations},
              {"init_radius", a.init_radius},
              {"init_doublings", a.init_doublings},
              {"init_directions", a.init_directions}};
  attack["m"] = a.m ? json(*a.m) : json(nullptr);
  return json{{"oracle",
               {{"kind", s.oracle.kind},
                {"dim", s.oracle.dim},
                {"seed", s.oracle.seed},
                {"bias", s.oracle.bias},
                {"radius", s.oracle.radius},
                {"path", s.oracle.path},
                {"url", s.oracle.url},
                {"timeout_ms", s.oracle.timeout_ms},
                {"retries", s.oracle.retries}}},
              {"families", families},
              {"methods", s.methods},
              {"c_stars", c_stars},
              {"budgets", s.budgets},
              {"sources", {{"count", s.n_sources}, {"seed", s.source_seed}}},
              {"seeds", s.seeds},
              {"attack", attack},
              {"out_dir", s.out_dir},
              {"jobs", s.jobs}};
}

void apply_environment(ExperimentSpec& spec) {
  if (const char* out = std::getenv("ASYMATTACK_OUT"); out && *out) spec.out_dir = out;
  if (const char* jobs = std::getenv("ASYMATTACK_JOBS"); jobs && *jobs) {
    int n = 0;
    const auto [ptr, ec] = std::from_chars(jobs, jobs + std::strlen(jobs), n);
    if (ec != std::errc() || *ptr != '\0' || n < 0) malformed("ASYMATTACK_JOBS must be a non-negative integer");
    spec.jobs = n;
  }
}

std::unique_ptr<Oracle> make_oracle(const OracleSpec& spec) {
  if (spec.kind == "linear") {
    Rng rng(spec.seed);
    return std::make_unique<SyntheticOracle>(SyntheticOracle::linear(sample_sphere(spec.dim, rng), spec.bias));
  }
  if (spec.kind == "sphere") {
    const double r = spec.radius > 0.0 ? spec.radius : 1.2 * std::sqrt(static_cast<double>(spec.dim));
    return std::make_unique<SyntheticOracle>(SyntheticOracle::sphere(Vector::Zero(spec.dim), r));
  }
  if (spec.kind == "mlp") return std::make_unique<SyntheticOracle>(load_mlp(spec.path));
  if (spec.kind == "remote") {
    RemoteOptions opts;
    opts.timeout = std::chrono::milliseconds(spec.timeout_ms);
    opts.retries = spec.retries;
    return std::make_unique<RemoteOracle>(spec.url, spec.dim, opts);
  }
  throw UnknownOracleKindError("unknown oracle kind '" + spec.kind + "'");
}

std::vector<Vector> make_sources(const Oracle& oracle, int count, std::uint64_t seed) {
  constexpr int kMaxDraws = 100000;
  Rng rng(seed);
  boost::random::normal_distribution<double> normal;
  std::vector<Vector> sources;
  int draws = 0;
  while (static_cast<int>(sources.size()) < count) {
    if (++draws > kMaxDraws) throw DomainError("make_sources: source class not reached by standard-normal draws");
    Vector x(oracle.dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = normal(rng);
    if (oracle.classify(x) == QueryLabel::Source) sources.push_back(std::move(x));
  }
  return sources;
}

bool ledger_consistent(const ResultRow& row) {
  const double n_low = static_cast<double>(row.n_low), n_high = static_cast<double>(row.n_high);
  if (std::isinf(row.c_star)) return row.cost_spent == n_high;
  return row.cost_spent == n_low + row.c_star * n_high;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_number(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("not a number: '" + s + "'");
  return v;
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      out += f;
    } else {
      out += '"';
      for (char c : f) {
        if (c == '"') out += '"';
        out += c;
      }
      out += '"';
    }
  }
  return out + "\r\n";
}

std::vector<std::vector<std::string>> read_csv(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + file.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, at_line_start = true, comment = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (comment) {
      if (c == '\n') comment = false, at_line_start = true;
      continue;
    }
    if (at_line_start && c == '#') {
      comment = true;
      continue;
    }
    at_line_start = false;
    if (quoted) {
      if (c != '"') {
        field += c;
      } else if (i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else {
        quoted = false;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      at_line_start = true;
    } else {
      field += c;
    }
  }
  if (quoted) throw ParseError("unterminated quote in '" + file.string() + "'");
  if (!field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string trajectory_name(const ResultRow& r) {
  return r.family + "_" + r.method + "_c" + format_number(r.c_star) + "_b" + format_number(r.budget) + "_s" +
         std::to_string(r.source_id) + "_seed" + std::to_string(r.seed) + ".csv";
}

namespace {

std::ofstream open_for_write(const fs::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw UnwritableOutputError("cannot write '" + file.string() + "'");
  return out;
}

void close_checked(std::ofstream& out, const fs::path& file) {
  out.close();
  if (!out) throw UnwritableOutputError("failed writing '" + file.string() + "'");
}

const std::vector<std::string> kAggregateHeader{"family", "method",     "c_star", "budget", "source_id",
                                                "seed",   "final_l2", "cost_spent", "n_low", "n_high"};

}  // namespace

void write_trajectory(const fs::path& file, const AttackTrace& trace) {
  auto out = open_for_write(file);
  out << csv_line({"iteration", "cumulative_cost", "l2", "n_low", "n_high"});
  for (const auto& r : trace.records) {
    out << csv_line({std::to_string(r.iteration), format_number(r.cumulative_cost), format_number(r.l2),
                     std::to_string(r.n_low), std::to_string(r.n_high)});
  }
  close_checked(out, file);
}

void write_aggregate(const fs::path& file, const std::vector<ResultRow>& rows) {
  auto out = open_for_write(file);
  out << csv_line(kAggregateHeader);
  for (const auto& r : rows) {
    out << csv_line({r.family, r.method, format_number(r.c_star), format_number(r.budget), std::to_string(r.source_id),
                     std::to_string(r.seed), format_number(r.final_l2), format_number(r.cost_spent),
                     std::to_string(r.n_low), std::to_string(r.n_high)});
  }
  close_checked(out, file);
}

std::vector<ResultRow> read_aggregate(const fs::path& file) {
  const auto table = read_csv(file);
  if (table.empty() || table.front() != kAggregateHeader) throw ParseError("'" + file.string() + "' is not an aggregate file");
  std::vector<ResultRow> rows;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& f = table[i];
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != kAggregateHeader.size()) throw ParseError("aggregate row " + std::to_string(i) + " has the wrong width");
    ResultRow r;
    r.family = f[0];
    r.method = f[1];
    r.c_star = parse_number(f[2]);
    r.budget = parse_number(f[3]);
    r.source_id = static_cast<int>(parse_number(f[4]));
    r.seed = std::stoull(f[5]);
    r.final_l2 = parse_number(f[6]);
    r.cost_spent = parse_number(f[7]);
    r.n_low = std::stoull(f[8]);
    r.n_high = std::stoull(f[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

json summarize(const std::vector<ResultRow>& rows) {
  struct Cell {
    const ResultRow* first;
    std::vector<double> l2, cost;
  };
  std::vector<Cell> cells;
  std::map<std::tuple<std::string, std::string, double, double>, std::size_t> index;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.family, r.method, r.c_star, r.budget);
    auto [it, fresh] = index.try_emplace(key, cells.size());
    if (fresh) cells.push_back({&r, {}, {}});
    cells[it->second].l2.push_back(r.final_l2);
    cells[it->second].cost.push_back(r.cost_spent);
  }
  json out = json::array();
  for (const auto& c : cells) {
    out.push_back({{"family", c.first->family},
                   {"method", c.first->method},
                   {"c_star", number_json(c.first->c_star)},
                   {"budget", c.first->budget},
                   {"runs", c.l2.size()},
                   {"median_final_l2", quantile(c.l2, 0.5)},
                   {"median_cost_spent", quantile(c.cost, 0.5)}});
  }
  return json{{"cells", out}};
}

ExperimentOutput run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const fs::path out_dir(spec.out_dir);
  const fs::path traj_dir = out_dir / "trajectories";
  std::error_code ec;
  fs::create_directories(traj_dir, ec);
  if (ec || !fs::is_directory(traj_dir)) throw UnwritableOutputError("cannot create '" + traj_dir.string() + "'");

  const auto sources = make_sources(*make_oracle(spec.oracle), spec.n_sources, spec.source_seed);

  struct Cell {
    AttackConfig config;
    ResultRow row;
  };
  std::vector<Cell> cells;
  for (auto f : spec.families) {
    for (const auto& m : spec.methods) {
      for (double c : spec.c_stars) {
        for (double b : spec.budgets) {
          for (int s = 0; s < spec.n_sources; ++s) {
            for (auto seed : spec.seeds) {
              Cell cell{cell_config(spec, f, m, c, b, run_seed(seed, s)), {}};
              cell.row.family = to_string(f);
              cell.row.method = m;
              cell.row.c_star = c;
              cell.row.budget = b;
              cell.row.source_id = s;
              cell.row.seed = seed;
              cells.push_back(std::move(cell));
            }
          }
        }
      }
    }
  }

  ExperimentOutput output;
  output.trajectories.resize(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        auto& cell = cells[i];
        const auto oracle = make_oracle(spec.oracle);
        const auto trace = run_attack(cell.config, sources[cell.row.source_id], *oracle);
        cell.row.final_l2 = trace.final_l2;
        cell.row.cost_spent = trace.total_cost;
        cell.row.n_low = trace.n_low;
        cell.row.n_high = trace.n_high;
        output.trajectories[i] = traj_dir / trajectory_name(cell.row);
        write_trajectory(output.trajectories[i], trace);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cells.size();
      }
    }
  };
  int jobs = spec.jobs > 0 ? spec.jobs : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::clamp<int>(jobs, 1, static_cast<int>(cells.size()));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (auto& c : cells) output.rows.push_back(std::move(c.row));
  output.aggregate = out_dir / "aggregate.csv";
  write_aggregate(output.aggregate, output.rows);
  output.summary = out_dir / "summary.json";
  auto out = open_for_write(output.summary);
  out << summarize(output.rows).dump(2) << '\n';
  close_checked(out, output.summary);
  return output;
}

}  // namespace asym
