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

#pragma once

// Minimal blocking TCP sockets (POSIX) with RAII ownership.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ppcf::fed {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

// "host:port"; throws a usage error otherwise.
Endpoint ParseEndpoint(const std::string& text);
std::string FormatEndpoint(const Endpoint& e);

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept;
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }
  void Close();

  // Both throw a backend (transport) error on failure; RecvExact also on EOF.
  void SendAll(std::span<const std::uint8_t> bytes);
  std::vector<std::uint8_t> RecvExact(std::size_t n);

  // Read timeout in seconds; 0 disables.
  void SetReceiveTimeout(double seconds);

 private:
  int fd_ = -1;
};

class Listener {
 public:
  // Port 0 picks an ephemeral port; see port().
  explicit Listener(const Endpoint& endpoint);
  Socket Accept();
  std::uint16_t port() const { return port_; }
  const std::string& host() const { return host_; }
  void Close() { socket_.Close(); }

 private:
  Socket socket_;
  std::string host_;
  std::uint16_t port_ = 0;
};

// Retries refused connections until `timeout_seconds` elapses.
Socket Connect(const Endpoint& endpoint, double timeout_seconds = 10.0);

}  // namespace ppcf::fed
