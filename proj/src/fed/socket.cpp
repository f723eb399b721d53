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

#include "ppcf/fed/socket.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include "ppcf/core/error.hpp"

namespace ppcf::fed {
namespace {

[[noreturn]] void ThrowErrno(const std::string& what) {
  ThrowBackend("transport: " + what + ": " + std::strerror(errno));
}

sockaddr_in ResolveIpv4(const Endpoint& e) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(e.port);
  if (inet_pton(AF_INET, e.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(e.host.c_str(), nullptr, &hints, &res) != 0 || !res) {
    ThrowBackend("transport: cannot resolve host '" + e.host + "'");
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return addr;
}

}  // namespace

Endpoint ParseEndpoint(const std::string& text) {
  const std::size_t colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    ThrowUsage("endpoint must be host:port, got '" + text + "'");
  }
  Endpoint e;
  e.host = text.substr(0, colon);
  const std::string port = text.substr(colon + 1);
  for (char c : port) {
    if (c < '0' || c > '9') ThrowUsage("endpoint port must be numeric, got '" + port + "'");
  }
  if (port.size() > 5) ThrowUsage("endpoint port out of range: " + port);
  const unsigned long p = std::stoul(port);
  if (p > 65535) ThrowUsage("endpoint port out of range: " + port);
  e.port = static_cast<std::uint16_t>(p);
  return e;
}

std::string FormatEndpoint(const Endpoint& e) { return e.host + ":" + std::to_string(e.port); }

Socket::~Socket() { Close(); }

Socket::Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    Close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

void Socket::Close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::SendAll(std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      ThrowErrno("send");
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::vector<std::uint8_t> Socket::RecvExact(std::size_t n) {
  std::vector<std::uint8_t> buf(n);
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd_, buf.data() + got, n - got, 0);
    if (r < 0) {
      if (errno == EINTR) continue;
      ThrowErrno("recv");
    }
    if (r == 0) {
      ThrowBackend("transport: connection closed after " + std::to_string(got) + " of " +
                   std::to_string(n) + " bytes");
    }
    got += static_cast<std::size_t>(r);
  }
  return buf;
}

void Socket::SetReceiveTimeout(double seconds) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(seconds);
  tv.tv_usec = static_cast<suseconds_t>((seconds - static_cast<double>(tv.tv_sec)) * 1e6);
  if (::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv)) != 0) ThrowErrno("setsockopt");
}

Listener::Listener(const Endpoint& endpoint) : host_(endpoint.host) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) ThrowErrno("socket");
  socket_ = Socket(fd);
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = ResolveIpv4(endpoint);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ThrowErrno("bind " + FormatEndpoint(endpoint));
  }
  if (::listen(fd, 4) != 0) ThrowErrno("listen");
  socklen_t len = sizeof(addr);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) ThrowErrno("getsockname");
  port_ = ntohs(addr.sin_port);
}

Socket Listener::Accept() {
  while (true) {
    const int fd = ::accept(socket_.fd(), nullptr, nullptr);
    if (fd >= 0) {
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return Socket(fd);
    }
    if (errno != EINTR) ThrowErrno("accept");
  }
}

Socket Connect(const Endpoint& endpoint, double timeout_seconds) {
  const sockaddr_in addr = ResolveIpv4(endpoint);
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(timeout_seconds);
  while (true) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) ThrowErrno("socket");
    Socket s(fd);
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) {
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return s;
    }
    if ((errno != ECONNREFUSED && errno != EINTR) || std::chrono::steady_clock::now() >= deadline) {
      ThrowErrno("connect " + FormatEndpoint(endpoint));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

}  // namespace ppcf::fed
