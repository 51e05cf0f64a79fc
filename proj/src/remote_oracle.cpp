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

#include <chrono>
#include <thread>

#include "asymattack/oracle.hpp"
#include "httplib.h"
#include "json.hpp"

namespace asym {
namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw DomainError("remote oracle: endpoint needs a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

QueryLabel parse_label(const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw MalformedResponseError("remote oracle: response is not JSON");
  }
  if (!doc.is_object() || !doc.contains("label") || !doc["label"].is_number_integer()) {
    throw MalformedResponseError("remote oracle: response lacks an integer 'label'");
  }
  const auto label = doc["label"].get<long long>();
  if (label == 1) return QueryLabel::Adversarial;
  if (label == -1) return QueryLabel::Source;
  throw MalformedResponseError("remote oracle: label must be 1 or -1, got " + std::to_string(label));
}

}  // namespace

QueryLabel remote_query(const std::string& endpoint, const Vector& x, const RemoteOptions& options) {
  const Endpoint ep = split_endpoint(endpoint);
  nlohmann::json request;
  request["x"] = std::vector<double>(x.data(), x.data() + x.size());
  const std::string body = request.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);

  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout);
  const int attempts_allowed = 1 + std::max(0, options.retries);
  std::string last_failure;
  bool last_was_timeout = false;
  int last_status = 0;

  for (int attempt = 1; attempt <= attempts_allowed; ++attempt) {
    httplib::Client client(ep.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    const auto started = std::chrono::steady_clock::now();
    auto result = client.Post(ep.path, body, "application/json");
    if (!result) {
      const auto elapsed = std::chrono::steady_clock::now() - started;
      const auto error = result.error();
      last_was_timeout = error == httplib::Error::ConnectionTimeout ||
                         (error == httplib::Error::Read && elapsed >= timeout);
      last_status = 0;
      last_failure = "remote oracle: " + httplib::to_string(error);
      continue;
    }
    if (result->status >= 500) {
      last_was_timeout = false;
      last_status = result->status;
      last_failure = "remote oracle: HTTP status " + std::to_string(result->status);
      continue;
    }
    if (result->status < 200 || result->status >= 300) {
      throw HttpStatusError("remote oracle: HTTP status " + std::to_string(result->status),
                            result->status, attempt);
    }
    return parse_label(result->body);
  }

  if (last_status != 0) throw HttpStatusError(last_failure, last_status, attempts_allowed);
  if (last_was_timeout) throw TimeoutError(last_failure + " (timeout)", attempts_allowed);
  throw TransportError(last_failure, attempts_allowed);
}

RemoteOracle::RemoteOracle(std::string endpoint, Eigen::Index dim, RemoteOptions options)
    : endpoint_(std::move(endpoint)), dim_(dim), options_(options) {
  if (dim < 1) throw InvalidDimensionError("remote oracle: dimension must be >= 1");
  split_endpoint(endpoint_);
}

QueryLabel RemoteOracle::classify(const Vector& x) const {
  return remote_query(endpoint_, options_.clip ? Vector(x.cwiseMax(0.0).cwiseMin(1.0)) : x, options_);
}

}  // namespace asym
