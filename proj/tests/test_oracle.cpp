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

#include "doctest.h"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "asymattack/oracle.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace asym;

namespace {

Vector e1(Eigen::Index d, double scale = 1.0) {
  Vector v = Vector::Zero(d);
  v[0] = scale;
  return v;
}

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path.string();
}

// Plain-loop forward pass over the JSON description, written separately from
// the Eigen implementation in the library.
int reference_label(const nlohmann::json& net, const std::vector<double>& x) {
  std::vector<double> h = x;
  const auto& dims = net["dims"];
  for (std::size_t layer = 0; layer + 1 < dims.size(); ++layer) {
    const int in = dims[layer], out = dims[layer + 1];
    std::vector<double> next(out);
    for (int r = 0; r < out; ++r) {
      double acc = net["biases"][layer][r];
      for (int c = 0; c < in; ++c) acc += double(net["weights"][layer][r * in + c]) * h[c];
      next[r] = (layer + 2 < dims.size()) ? std::max(0.0, acc) : acc;
    }
    h = next;
  }
  const int src = net["source_class"];
  double best = -1e300;
  for (int k = 0; k < int(h.size()); ++k) {
    if (k != src) best = std::max(best, h[k]);
  }
  return best - h[src] >= 0 ? 1 : -1;
}

nlohmann::json random_net(std::vector<int> dims, int source, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.5);
  nlohmann::json net;
  net["dims"] = dims;
  net["source_class"] = source;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    std::vector<double> w(dims[i] * dims[i + 1]), b(dims[i + 1]);
    for (auto& v : w) v = normal(rng);
    for (auto& v : b) v = normal(rng);
    net["weights"].push_back(w);
    net["biases"].push_back(b);
  }
  return net;
}

}  // namespace

TEST_CASE("CostLedger arithmetic") {
  CostLedger ledger(7.0);
  ledger.record(QueryLabel::Adversarial);
  ledger.record(QueryLabel::Source);
  ledger.record(QueryLabel::Source);
  CHECK(ledger.n_low() == 1);
  CHECK(ledger.n_high() == 2);
  CHECK(ledger.total_cost() == 15.0);

  CostLedger flagged(1e5, 10, Accounting::FlaggedOnly);
  flagged.record(QueryLabel::Adversarial);
  flagged.record(QueryLabel::Source);
  CHECK(flagged.total_cost() == 1.0);
  CHECK(flagged.worst_case_query_cost() == 1.0);

  CHECK_THROWS_AS(CostLedger(0.5), DomainError);
  CHECK_THROWS_AS(CostLedger(2.0, 0.0), DomainError);
}

TEST_CASE("ledger conservation over random query sequences") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> c_dist(1.0, 1e4);
  for (int trial = 0; trial < 50; ++trial) {
    const double c = std::floor(c_dist(rng) * 8) / 8;  // dyadic, exact in binary
    CostLedger ledger(c);
    std::uint64_t lo = 0, hi = 0;
    for (int i = 0; i < 1000; ++i) {
      if (rng() % 3 == 0) {
        ledger.record(QueryLabel::Source);
        ++hi;
      } else {
        ledger.record(QueryLabel::Adversarial);
        ++lo;
      }
      REQUIRE(ledger.total_cost() == double(lo) + c * double(hi));
    }
  }
}

TEST_CASE("query on synthetic oracles") {
  const auto linear = SyntheticOracle::linear(e1(4), 0.0);
  CostLedger ledger(10.0);
  CHECK(query(linear, e1(4, 0.5), ledger) == QueryLabel::Adversarial);
  CHECK(ledger.n_low() == 1);
  const double before = ledger.total_cost();
  CHECK(query(linear, e1(4, -0.5), ledger) == QueryLabel::Source);
  CHECK(ledger.total_cost() - before == 10.0);

  // S = 0 is adversarial.
  CHECK(linear.classify(Vector::Zero(4)) == QueryLabel::Adversarial);

  const auto sphere = SyntheticOracle::sphere(Vector::Zero(3), 1.0);
  CHECK(query(sphere, e1(3, 2.0), ledger) == QueryLabel::Adversarial);
  CHECK(sphere.classify(e1(3, 0.5)) == QueryLabel::Source);

  CHECK_THROWS_AS(query(linear, Vector::Zero(3), ledger), InvalidDimensionError);

  SUBCASE("clipping") {
    auto clipped = SyntheticOracle::linear(e1(2), -0.5);
    CHECK(clipped.classify(e1(2, 3.0)) == QueryLabel::Adversarial);
    clipped.set_clip(true);
    CHECK(clipped.margin(e1(2, 3.0)) == doctest::Approx(0.5));
  }
}

TEST_CASE("determinism of synthetic oracles") {
  const auto oracle = parse_mlp(random_net({6, 8, 3}, 1, 3).dump());
  for (int i = 0; i < 50; ++i) {
    const Vector x = Vector::Random(6);
    CHECK(oracle.margin(x) == oracle.margin(x));
  }
}

TEST_CASE("query_batch") {
  const auto oracle = SyntheticOracle::linear(e1(3), 0.0);
  SUBCASE("ordered labels and ledger arithmetic") {
    std::vector<Vector> xs;
    for (int i = 0; i < 10; ++i) xs.push_back(e1(3, i < 6 ? 1.0 + i : -1.0 - i));
    CostLedger ledger(5.0);
    const auto labels = query_batch(oracle, xs, ledger);
    REQUIRE(labels.size() == 10);
    for (int i = 0; i < 10; ++i) CHECK(labels[i] == (i < 6 ? QueryLabel::Adversarial : QueryLabel::Source));
    CHECK(ledger.n_low() == 6);
    CHECK(ledger.n_high() == 4);
    CHECK(ledger.total_cost() == 6 + 4 * 5.0);
  }
  SUBCASE("empty batch") {
    CostLedger ledger(5.0);
    CHECK(query_batch(oracle, {}, ledger).empty());
    CHECK(ledger.total_cost() == 0.0);
  }
  SUBCASE("budget exhausted mid-batch") {
    CostLedger ledger(2.0, 3.0);
    std::vector<Vector> xs = {e1(3, 1.0), e1(3, -1.0), e1(3, 1.0), e1(3, 1.0)};
    try {
      query_batch(oracle, xs, ledger);
      FAIL("expected BatchBudgetError");
    } catch (const BatchBudgetError& e) {
      REQUIRE(e.prefix().size() == 2);
      CHECK(e.prefix()[0] == QueryLabel::Adversarial);
      CHECK(e.prefix()[1] == QueryLabel::Source);
      CHECK(e.spent() == 3.0);
      CHECK(e.spent() >= e.budget());
    }
    CHECK(ledger.n_queries() == 2);
    // Nothing more is evaluated once the budget is reached.
    CHECK_THROWS_AS(query(oracle, xs[0], ledger), AttackBudgetError);
    CHECK(ledger.n_queries() == 2);
  }
}

TEST_CASE("load_mlp") {
  SUBCASE("single linear layer reduces to a linear margin") {
    nlohmann::json net;
    net["dims"] = {3, 2};
    net["weights"] = {{1.0, 0.0, 0.0, 0.0, 1.0, 0.0}};
    net["biases"] = {{0.0, 0.0}};
    net["source_class"] = 0;
    const auto mlp = load_mlp(write_temp("asym_mlp_linear.json", net.dump()));
    Vector w(3);
    w << -1.0, 1.0, 0.0;
    const auto linear = SyntheticOracle::linear(w, 0.0);
    Rng rng(9);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 100; ++i) {
      Vector x(3);
      for (auto& v : x) v = normal(rng);
      CHECK(mlp.margin(x) == doctest::Approx(linear.margin(x)));
      CHECK(mlp.classify(x) == linear.classify(x));
    }
  }
  SUBCASE("3-layer, d=20, 5 classes agrees with a loop forward pass") {
    const auto net = random_net({20, 16, 12, 5}, 2, 77);
    const auto oracle = load_mlp(write_temp("asym_mlp_deep.json", net.dump()));
    CHECK(oracle.dim() == 20);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    int agree = 0, adversarial = 0;
    for (int i = 0; i < 100; ++i) {
      std::vector<double> x(20);
      for (auto& v : x) v = normal(rng);
      const int expected = reference_label(net, x);
      const int got = sign(oracle.classify(Eigen::Map<Vector>(x.data(), 20)));
      agree += expected == got;
      adversarial += got == 1;
    }
    CHECK(agree == 100);
    CHECK(adversarial > 0);
    CHECK(adversarial < 100);
  }
  SUBCASE("mismatched layer dims") {
    auto net = random_net({4, 3, 2}, 0, 1);
    net["dims"] = {4, 5, 2};
    CHECK_THROWS_AS(parse_mlp(net.dump()), ShapeError);
  }
  SUBCASE("malformed fields name the field") {
    auto net = random_net({4, 2}, 0, 1);
    net.erase("biases");
    try {
      parse_mlp(net.dump());
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("biases") != std::string::npos);
    }
    net = random_net({4, 2}, 0, 1);
    net["weights"][0][1] = "x";
    try {
      parse_mlp(net.dump());
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("weights[0]") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_mlp("{not json"), ParseError);
    CHECK_THROWS_AS(load_mlp("/nonexistent/file.json"), ParseError);
    net = random_net({4, 2}, 7, 1);
    CHECK_THROWS_AS(parse_mlp(net.dump()), ShapeError);
  }
}

namespace {

// Local stub speaking the remote oracle protocol.
class StubServer {
 public:
  explicit StubServer(httplib::Server::Handler handler) {
    server_.Post("/classify", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/classify"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("remote_query wire protocol") {
  RemoteOptions options;
  options.timeout = std::chrono::milliseconds(300);
  options.retries = 0;

  SUBCASE("fixed +1 and request body shape") {
    std::string seen_body, seen_type;
    StubServer server([&](const httplib::Request& req, httplib::Response& res) {
      seen_body = req.body;
      seen_type = req.get_header_value("Content-Type");
      res.set_content(R"({"label": 1})", "application/json");
    });
    Vector x(3);
    x << 0.25, 0.5, 1.0;
    CHECK(remote_query(server.url(), x, options) == QueryLabel::Adversarial);
    const auto body = nlohmann::json::parse(seen_body);
    CHECK(body["x"] == std::vector<double>{0.25, 0.5, 1.0});
    CHECK(seen_type == "application/json");
  }
  SUBCASE("500 then +1 with one retry") {
    std::atomic<int> calls{0};
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
      if (calls++ == 0) {
        res.status = 500;
        return;
      }
      res.set_content(R"({"label": -1})", "application/json");
    });
    options.retries = 1;
    CHECK(remote_query(server.url(), Vector::Zero(2), options) == QueryLabel::Source);
    CHECK(calls == 2);
  }
  SUBCASE("persistent 500 reports the status and attempts") {
    StubServer server([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    options.retries = 2;
    try {
      remote_query(server.url(), Vector::Zero(2), options);
      FAIL("expected HttpStatusError");
    } catch (const HttpStatusError& e) {
      CHECK(e.status() == 503);
      CHECK(e.attempts() == 3);
    }
  }
  SUBCASE("4xx is not retried") {
    std::atomic<int> calls{0};
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      res.status = 404;
    });
    options.retries = 3;
    CHECK_THROWS_AS(remote_query(server.url(), Vector::Zero(2), options), HttpStatusError);
    CHECK(calls == 1);
  }
  SUBCASE("invalid label is malformed, never retried") {
    std::atomic<int> calls{0};
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      res.set_content(R"({"label": 7})", "application/json");
    });
    options.retries = 3;
    CHECK_THROWS_AS(remote_query(server.url(), Vector::Zero(2), options), MalformedResponseError);
    CHECK(calls == 1);
  }
  SUBCASE("slow server times out") {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(800));
      res.set_content(R"({"label": 1})", "application/json");
    });
    options.timeout = std::chrono::milliseconds(100);
    CHECK_THROWS_AS(remote_query(server.url(), Vector::Zero(2), options), TimeoutError);
  }
  SUBCASE("connection refused is a transport error") {
    httplib::Server probe;
    const int port = probe.bind_to_any_port("127.0.0.1");
    probe.stop();
    try {
      remote_query("http://127.0.0.1:" + std::to_string(port) + "/x", Vector::Zero(2), options);
      FAIL("expected TransportError");
    } catch (const TransportError& e) {
      CHECK(e.attempts() == 1);
    }
  }
  SUBCASE("RemoteOracle clips and charges the ledger") {
    std::vector<double> seen;
    StubServer server([&](const httplib::Request& req, httplib::Response& res) {
      seen = nlohmann::json::parse(req.body)["x"].get<std::vector<double>>();
      res.set_content(R"({"label": -1})", "application/json");
    });
    RemoteOracle oracle(server.url(), 2, options);
    CostLedger ledger(4.0);
    Vector x(2);
    x << -3.0, 5.0;
    CHECK(query(oracle, x, ledger) == QueryLabel::Source);
    CHECK(seen == std::vector<double>{0.0, 1.0});
    CHECK(ledger.total_cost() == 4.0);
  }
}
