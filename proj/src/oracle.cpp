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

#include "asymattack/oracle.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace asym {
namespace {

Vector clipped(const Vector& x) { return x.cwiseMax(0.0).cwiseMin(1.0); }

void check_dim(const Oracle& oracle, const Vector& x) {
  if (x.size() != oracle.dim()) {
    throw InvalidDimensionError("query: input has dimension " + std::to_string(x.size()) +
                                ", oracle expects " + std::to_string(oracle.dim()));
  }
}

}  // namespace

CostLedger::CostLedger(double c_star, double budget, Accounting accounting, std::uint64_t query_cap)
    : c_star_(c_star), budget_(budget), accounting_(accounting), query_cap_(query_cap) {
  if (!(c_star >= 1.0) || !std::isfinite(c_star)) {
    throw DomainError("CostLedger: c* must be a finite value >= 1");
  }
  if (!(budget > 0.0)) throw DomainError("CostLedger: budget must be positive");
}

double CostLedger::total_cost() const {
  if (accounting_ == Accounting::FlaggedOnly) return static_cast<double>(n_high_);
  return static_cast<double>(n_low_) + c_star_ * static_cast<double>(n_high_);
}

double CostLedger::worst_case_query_cost() const {
  return accounting_ == Accounting::FlaggedOnly ? 1.0 : c_star_;
}

bool CostLedger::can_afford() const {
  return n_queries() < query_cap_ && total_cost() + worst_case_query_cost() <= budget_;
}

void CostLedger::record(QueryLabel label) {
  if (is_adversarial(label)) {
    ++n_low_;
  } else {
    ++n_high_;
  }
}

AttackBudgetError::AttackBudgetError(double spent, double budget)
    : AttackBudgetError("attack budget exhausted", spent, budget) {}

AttackBudgetError::AttackBudgetError(const std::string& what, double spent, double budget)
    : std::runtime_error(what + " (spent " + std::to_string(spent) + " of " +
                         std::to_string(budget) + ")"),
      spent_(spent),
      budget_(budget) {}

Vector Mlp::logits(const Vector& x) const {
  Vector h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].weight * h + layers[i].bias;
    if (i + 1 < layers.size()) h = h.cwiseMax(0.0);
  }
  return h;
}

SyntheticOracle SyntheticOracle::linear(Vector w, double b) {
  if (w.size() < 1) throw InvalidDimensionError("linear oracle: empty weight vector");
  return SyntheticOracle(LinearMargin{std::move(w), b});
}

SyntheticOracle SyntheticOracle::sphere(Vector center, double radius) {
  if (center.size() < 1) throw InvalidDimensionError("sphere oracle: empty center");
  if (!(radius > 0.0)) throw DomainError("sphere oracle: radius must be positive");
  return SyntheticOracle(SphereMargin{std::move(center), radius});
}

SyntheticOracle SyntheticOracle::mlp(Mlp net) {
  if (net.layers.empty()) throw ShapeError("mlp: no layers");
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    if (layer.bias.size() != layer.weight.rows()) throw ShapeError("mlp: bias/weight mismatch");
    if (i > 0 && layer.weight.cols() != net.layers[i - 1].weight.rows()) {
      throw ShapeError("mlp: layer " + std::to_string(i) + " input does not match previous output");
    }
  }
  const auto classes = net.layers.back().weight.rows();
  if (classes < 2) throw ShapeError("mlp: need at least two output classes");
  if (net.source_class < 0 || net.source_class >= classes) {
    throw ShapeError("mlp: source_class out of range");
  }
  return SyntheticOracle(std::move(net));
}

Eigen::Index SyntheticOracle::dim() const {
  return std::visit(
      [](const auto& m) -> Eigen::Index {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearMargin>) return m.w.size();
        if constexpr (std::is_same_v<T, SphereMargin>) return m.center.size();
        if constexpr (std::is_same_v<T, Mlp>) return m.layers.front().weight.cols();
      },
      model_);
}

double SyntheticOracle::margin(const Vector& input) const {
  const Vector x = clip_ ? clipped(input) : input;
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearMargin>) return m.w.dot(x) + m.b;
        if constexpr (std::is_same_v<T, SphereMargin>) return (x - m.center).norm() - m.radius;
        if constexpr (std::is_same_v<T, Mlp>) {
          const Vector z = m.logits(x);
          double best_other = -std::numeric_limits<double>::infinity();
          for (Eigen::Index k = 0; k < z.size(); ++k) {
            if (k != m.source_class) best_other = std::max(best_other, z[k]);
          }
          return best_other - z[m.source_class];
        }
      },
      model_);
}

QueryLabel SyntheticOracle::classify(const Vector& x) const {
  return margin(x) >= 0.0 ? QueryLabel::Adversarial : QueryLabel::Source;
}

SyntheticOracle parse_mlp(const std::string& json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("mlp: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("mlp: document must be an object");

  auto field = [&](const char* name) -> const json& {
    if (!doc.contains(name)) throw ParseError(std::string("mlp: missing field '") + name + "'");
    return doc.at(name);
  };
  auto real_list = [](const json& j, const std::string& name) {
    if (!j.is_array()) throw ParseError("mlp: field '" + name + "' must be an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) throw ParseError("mlp: field '" + name + "' must contain numbers");
      v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
  };

  const json& dims_j = field("dims");
  if (!dims_j.is_array() || dims_j.size() < 2) {
    throw ParseError("mlp: field 'dims' must list at least two layer sizes");
  }
  std::vector<Eigen::Index> dims;
  for (const auto& d : dims_j) {
    if (!d.is_number_integer() || d.get<long long>() < 1) {
      throw ParseError("mlp: field 'dims' must contain positive integers");
    }
    dims.push_back(d.get<Eigen::Index>());
  }
  const json& weights = field("weights");
  const json& biases = field("biases");
  if (!weights.is_array()) throw ParseError("mlp: field 'weights' must be an array");
  if (!biases.is_array()) throw ParseError("mlp: field 'biases' must be an array");
  const json& source = field("source_class");
  if (!source.is_number_integer()) throw ParseError("mlp: field 'source_class' must be an integer");

  const std::size_t n_layers = dims.size() - 1;
  if (weights.size() != n_layers) {
    throw ShapeError("mlp: 'weights' has " + std::to_string(weights.size()) + " layers, 'dims' implies " +
                     std::to_string(n_layers));
  }
  if (biases.size() != n_layers) {
    throw ShapeError("mlp: 'biases' has " + std::to_string(biases.size()) + " layers, 'dims' implies " +
                     std::to_string(n_layers));
  }

  Mlp net;
  net.source_class = source.get<int>();
  for (std::size_t i = 0; i < n_layers; ++i) {
    const std::string wname = "weights[" + std::to_string(i) + "]";
    const std::string bname = "biases[" + std::to_string(i) + "]";
    const Vector flat = real_list(weights[i], wname);
    const Vector bias = real_list(biases[i], bname);
    const Eigen::Index rows = dims[i + 1], cols = dims[i];
    if (flat.size() != rows * cols) {
      throw ShapeError("mlp: " + wname + " has " + std::to_string(flat.size()) + " entries, expected " +
                       std::to_string(rows * cols));
    }
    if (bias.size() != rows) {
      throw ShapeError("mlp: " + bname + " has " + std::to_string(bias.size()) + " entries, expected " +
                       std::to_string(rows));
    }
    MlpLayer layer;
    layer.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), rows, cols);
    layer.bias = bias;
    net.layers.push_back(std::move(layer));
  }
  return SyntheticOracle::mlp(std::move(net));
}

SyntheticOracle load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("mlp: cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_mlp(text.str());
}

QueryLabel query(const Oracle& oracle, const Vector& x, CostLedger& ledger) {
  check_dim(oracle, x);
  if (!ledger.can_afford()) throw AttackBudgetError(ledger.total_cost(), ledger.budget());
  const QueryLabel label = oracle.classify(x);
  ledger.record(label);
  return label;
}

std::vector<QueryLabel> query_batch(const Oracle& oracle, std::span<const Vector> xs,
                                    CostLedger& ledger) {
  for (const auto& x : xs) check_dim(oracle, x);
  std::vector<QueryLabel> labels;
  labels.reserve(xs.size());
  for (const auto& x : xs) {
    if (!ledger.can_afford()) {
      throw BatchBudgetError(ledger.total_cost(), ledger.budget(), std::move(labels));
    }
    labels.push_back(oracle.classify(x));
    ledger.record(labels.back());
  }
  return labels;
}

}  // namespace asym
