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

#ifndef ASYMATTACK_ORACLE_HPP
#define ASYMATTACK_ORACLE_HPP

#include <chrono>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "asymattack/math_core.hpp"

namespace asym {

/// Hard-label answer of the black box. Adversarial answers are the cheap
/// ones; answers naming the source class cost c*.
enum class QueryLabel : int { Source = -1, Adversarial = 1 };

constexpr int sign(QueryLabel label) { return static_cast<int>(label); }
constexpr bool is_adversarial(QueryLabel label) { return label == QueryLabel::Adversarial; }

enum class Accounting {
  Weighted,     // total = n_low + c* n_high
  FlaggedOnly,  // c* = infinity reporting: total = n_high
};

/// Running cost of an attack. Counts are integers; the total is recomputed
/// from them on every read so it never drifts.
class CostLedger {
 public:
  static constexpr double kUnbounded = std::numeric_limits<double>::infinity();

  static constexpr std::uint64_t kNoQueryCap = std::numeric_limits<std::uint64_t>::max();

  /// `query_cap` bounds the number of oracle calls regardless of cost; with
  /// flagged-only accounting low-cost queries are otherwise free.
  explicit CostLedger(double c_star = 1.0, double budget = kUnbounded,
                      Accounting accounting = Accounting::Weighted,
                      std::uint64_t query_cap = kNoQueryCap);

  double c_star() const { return c_star_; }
  double budget() const { return budget_; }
  Accounting accounting() const { return accounting_; }
  std::uint64_t n_low() const { return n_low_; }
  std::uint64_t n_high() const { return n_high_; }
  std::uint64_t n_queries() const { return n_low_ + n_high_; }
  std::uint64_t query_cap() const { return query_cap_; }

  double total_cost() const;
  /// Cost a query is charged if it turns out to be high-cost.
  double worst_case_query_cost() const;
  /// Affordable iff total + worst case <= budget and the query cap is not
  /// reached; the label is unknown before paying.
  bool can_afford() const;

  void record(QueryLabel label);

 private:
  double c_star_;
  double budget_;
  Accounting accounting_;
  std::uint64_t query_cap_;
  std::uint64_t n_low_ = 0;
  std::uint64_t n_high_ = 0;
};

class AttackBudgetError : public std::runtime_error {
 public:
  AttackBudgetError(double spent, double budget);
  AttackBudgetError(const std::string& what, double spent, double budget);

  double spent() const { return spent_; }
  double budget() const { return budget_; }

 private:
  double spent_;
  double budget_;
};

/// Budget ran out part-way through a batch; `prefix` holds the labels that
/// were evaluated and paid for.
class BatchBudgetError : public AttackBudgetError {
 public:
  BatchBudgetError(double spent, double budget, std::vector<QueryLabel> prefix)
      : AttackBudgetError("budget exhausted mid-batch", spent, budget), prefix_(std::move(prefix)) {}
  const std::vector<QueryLabel>& prefix() const { return prefix_; }

 private:
  std::vector<QueryLabel> prefix_;
};

/// Black-box classifier seen from the attacker: a dimension and hard labels.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual Eigen::Index dim() const = 0;
  /// Unaccounted evaluation. Attack code goes through query() instead.
  virtual QueryLabel classify(const Vector& x) const = 0;
};

struct LinearMargin {
  Vector w;
  double b = 0.0;
};

struct SphereMargin {
  Vector center;
  double radius = 1.0;
};

struct MlpLayer {
  Matrix weight;  // out x in
  Vector bias;
};

struct Mlp {
  std::vector<MlpLayer> layers;
  int source_class = 0;

  Vector logits(const Vector& x) const;
};

/// Desk-scale classifier with an explicit continuous margin S; the label is
/// sign(S) with S = 0 counted as adversarial.
class SyntheticOracle final : public Oracle {
 public:
  using Model = std::variant<LinearMargin, SphereMargin, Mlp>;

  static SyntheticOracle linear(Vector w, double b);
  static SyntheticOracle sphere(Vector center, double radius);
  static SyntheticOracle mlp(Mlp net);

  Eigen::Index dim() const override;
  QueryLabel classify(const Vector& x) const override;
  double margin(const Vector& x) const;

  const Model& model() const { return model_; }
  /// Clip inputs to [0, 1]^d before evaluation. Off by default.
  void set_clip(bool clip) { clip_ = clip; }
  bool clip() const { return clip_; }

 private:
  explicit SyntheticOracle(Model model) : model_(std::move(model)) {}

  Model model_;
  bool clip_ = false;
};

/// Reads {dims, weights, biases, source_class}. weights[i] is the row-major
/// dims[i+1] x dims[i] matrix of layer i, flattened.
SyntheticOracle load_mlp(const std::string& path);
SyntheticOracle parse_mlp(const std::string& json_text);

struct RemoteOptions {
  std::chrono::milliseconds timeout{2000};
  int retries = 2;
  bool clip = true;
};

class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, int attempts)
      : std::runtime_error(what), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

class TimeoutError : public TransportError {
 public:
  using TransportError::TransportError;
};

class HttpStatusError : public TransportError {
 public:
  HttpStatusError(const std::string& what, int status, int attempts)
      : TransportError(what, attempts), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

class MalformedResponseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// POST {"x": [...]} to `endpoint`, expecting {"label": 1 | -1}. Connection
/// failures, timeouts and 5xx responses are retried up to `retries` times;
/// a well-formed label is never retried.
QueryLabel remote_query(const std::string& endpoint, const Vector& x,
                        const RemoteOptions& options = {});

class RemoteOracle final : public Oracle {
 public:
  RemoteOracle(std::string endpoint, Eigen::Index dim, RemoteOptions options = {});
  Eigen::Index dim() const override { return dim_; }
  QueryLabel classify(const Vector& x) const override;

 private:
  std::string endpoint_;
  Eigen::Index dim_;
  RemoteOptions options_;
};

/// Charged evaluation: checks the budget, evaluates, and records the cost
/// before returning the label.
QueryLabel query(const Oracle& oracle, const Vector& x, CostLedger& ledger);

/// In-order evaluation of `xs`; throws BatchBudgetError with the evaluated
/// prefix at the first unaffordable query.
std::vector<QueryLabel> query_batch(const Oracle& oracle, std::span<const Vector> xs,
                                    CostLedger& ledger);

}  // namespace asym

#endif  // ASYMATTACK_ORACLE_HPP
