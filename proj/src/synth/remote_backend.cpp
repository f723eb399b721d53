// Copyright 2026 The ppcf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ppcf/synth/remote_backend.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ppcf/core/error.hpp"

namespace ppcf::synth {
namespace {

void SetTimeout(httplib::Client& client, double seconds) {
  const auto whole = static_cast<time_t>(std::floor(seconds));
  const auto micros = static_cast<time_t>((seconds - std::floor(seconds)) * 1e6);
  client.set_connection_timeout(whole, micros);
  client.set_read_timeout(whole, micros);
  client.set_write_timeout(whole, micros);
}

}  // namespace

RemoteBackend::RemoteBackend(RemoteOptions options) : options_(std::move(options)) {
  const std::string& url = options_.base_url;
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    ThrowUsage("remote backend: base_url must start with http:// or https://");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    ThrowUsage("remote backend: unsupported scheme '" + scheme + "'");
  }
  const std::size_t path_begin = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_begin);
  path_prefix_ = path_begin == std::string::npos ? "" : url.substr(path_begin);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (!(options_.timeout_seconds > 0.0)) ThrowUsage("remote backend: timeout must be positive");
  if (const char* key = std::getenv(options_.api_key_env.c_str())) api_key_ = key;
}

std::string RemoteBackend::Complete(const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
  messages.push_back({{"role", "user"}, {"content", request.user}});
  const nlohmann::json body = {{"model", options_.model},
                               {"messages", messages},
                               {"temperature", request.temperature},
                               {"seed", request.call_id}};
  const std::string payload = body.dump();
  const std::string path = path_prefix_ + "/chat/completions";

  std::string last_error;
  double backoff = options_.backoff_seconds;
  for (std::size_t attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0 && backoff > 0.0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
    ++attempts_;
    httplib::Client client(scheme_host_port_);
    SetTimeout(client, options_.timeout_seconds);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      ThrowBackend("remote backend: HTTP " + std::to_string(res->status) + ": " +
                   res->body.substr(0, 200));
    }
    try {
      const auto reply = nlohmann::json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      ThrowBackend(std::string("remote backend: malformed response: ") + e.what());
    }
  }
  ThrowBackend("remote backend: giving up after " + std::to_string(options_.retries + 1) +
               " attempts (" + last_error + ")");
}

}  // namespace ppcf::synth
