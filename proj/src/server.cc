//
// Copyright 2026 The dpquery Authors.
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

#include "dpquery/server.h"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <utility>

#include "absl/strings/str_cat.h"
#include "dpquery/wire.h"

namespace dpquery {
namespace {

absl::Status SocketError(std::string_view what) {
  return absl::UnavailableError(
      absl::StrCat(std::string(what), ": ", std::strerror(errno)));
}

absl::StatusOr<sockaddr_in> Resolve(const std::string& host, uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res);
  if (rc != 0 || res == nullptr) {
    return absl::InvalidArgumentError(
        absl::StrCat("cannot resolve '", host, "': ", ::gai_strerror(rc)));
  }
  sockaddr_in addr;
  std::memcpy(&addr, res->ai_addr, sizeof(addr));
  ::freeaddrinfo(res);
  addr.sin_port = htons(port);
  return addr;
}

bool WriteAll(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<size_t>(n));
  }
  return true;
}

}  // namespace

absl::StatusOr<std::unique_ptr<Server>> Server::Start(
    const QueryService* service, const std::string& host, uint16_t port) {
  absl::StatusOr<sockaddr_in> addr = Resolve(host, port);
  if (!addr.ok()) return addr.status();
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) return SocketError("socket");
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(fd, reinterpret_cast<const sockaddr*>(&*addr), sizeof(*addr)) != 0 ||
      ::listen(fd, 256) != 0) {
    absl::Status s = SocketError(absl::StrCat("bind ", host, ":", port));
    ::close(fd);
    return s;
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
  int pipe_fds[2];
  if (::pipe2(pipe_fds, O_CLOEXEC) != 0) {
    absl::Status s = SocketError("pipe");
    ::close(fd);
    return s;
  }
  std::unique_ptr<Server> server(
      new Server(service, fd, ntohs(bound.sin_port), pipe_fds[0], pipe_fds[1]));
  server->acceptor_ = std::thread([s = server.get()] { s->AcceptLoop(); });
  return server;
}

Server::Server(const QueryService* service, int listen_fd, uint16_t port,
               int wake_read, int wake_write)
    : service_(service),
      listen_fd_(listen_fd),
      port_(port),
      wake_read_(wake_read),
      wake_write_(wake_write) {}

Server::~Server() { Stop().IgnoreError(); }

void Server::AcceptLoop() {
  pollfd fds[2] = {{listen_fd_, POLLIN, 0}, {wake_read_, POLLIN, 0}};
  while (!stopping_.load()) {
    if (::poll(fds, 2, -1) < 0) {
      if (errno == EINTR) continue;
      return;
    }
    if (fds[1].revents != 0) return;
    if ((fds[0].revents & POLLIN) == 0) continue;
    const int client = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (client < 0) continue;
    ReapFinished();
    std::lock_guard lock(connections_mu_);
    if (stopping_.load()) {
      ::close(client);
      return;
    }
    auto connection = std::make_unique<Connection>();
    connection->fd = client;
    Connection* c = connection.get();
    connections_.push_back(std::move(connection));
    c->thread = std::thread([this, c] { Serve(c); });
  }
}

void Server::ReapFinished() {
  std::vector<std::unique_ptr<Connection>> finished;
  {
    std::lock_guard lock(connections_mu_);
    auto it = std::partition(
        connections_.begin(), connections_.end(),
        [](const std::unique_ptr<Connection>& c) { return !c->done.load(); });
    for (auto f = it; f != connections_.end(); ++f) {
      finished.push_back(std::move(*f));
    }
    connections_.erase(it, connections_.end());
  }
  for (auto& c : finished) {
    c->thread.join();
    ::close(c->fd);
  }
}

void Server::Serve(Connection* connection) {
  const int fd = connection->fd;
  std::string buffer;
  char chunk[64 * 1024];
  bool open = true;
  while (open) {
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<size_t>(n));
    size_t start = 0;
    for (size_t nl; (nl = buffer.find('\n', start)) != std::string::npos;
         start = nl + 1) {
      std::string_view line(buffer.data() + start, nl - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty()) continue;
      const std::string reply = HandleRequestLine(*service_, line) + "\n";
      if (!WriteAll(fd, reply)) {
        open = false;
        break;
      }
    }
    buffer.erase(0, start);
    if (open && buffer.size() > kMaxRequestBytes) {
      WriteAll(fd, EncodeProtocolError("request too long") + "\n");
      open = false;
    }
  }
  ::shutdown(fd, SHUT_RDWR);
  connection->done.store(true);
}

absl::Status Server::Stop() {
  std::lock_guard stop_lock(stop_mu_);
  if (stopped_) return absl::OkStatus();
  stopped_ = true;
  stopping_.store(true);
  const char byte = 0;
  (void)!::write(wake_write_, &byte, 1);
  acceptor_.join();
  std::vector<std::unique_ptr<Connection>> connections;
  {
    std::lock_guard lock(connections_mu_);
    connections = std::move(connections_);
  }
  // A read shutdown lets an in-flight request finish and reply.
  for (auto& c : connections) ::shutdown(c->fd, SHUT_RD);
  for (auto& c : connections) {
    c->thread.join();
    ::close(c->fd);
  }
  ::close(listen_fd_);
  ::close(wake_read_);
  ::close(wake_write_);
  return service_->ledger().Sync();
}

absl::StatusOr<LineClient> LineClient::Connect(const std::string& host,
                                               uint16_t port) {
  absl::StatusOr<sockaddr_in> addr = Resolve(host, port);
  if (!addr.ok()) return addr.status();
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) return SocketError("socket");
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&*addr), sizeof(*addr)) !=
      0) {
    absl::Status s = SocketError(absl::StrCat("connect ", host, ":", port));
    ::close(fd);
    return s;
  }
  return LineClient(fd);
}

LineClient::LineClient(LineClient&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), buffer_(std::move(other.buffer_)) {}

LineClient& LineClient::operator=(LineClient&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
    buffer_ = std::move(other.buffer_);
  }
  return *this;
}

LineClient::~LineClient() {
  if (fd_ >= 0) ::close(fd_);
}

absl::StatusOr<std::string> LineClient::Call(std::string_view request) {
  if (fd_ < 0) return absl::FailedPreconditionError("client is closed");
  if (!WriteAll(fd_, absl::StrCat(std::string(request), "\n"))) {
    return SocketError("send");
  }
  char chunk[64 * 1024];
  for (;;) {
    const size_t nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n < 0) return SocketError("recv");
    if (n == 0) return absl::UnavailableError("server closed the connection");
    buffer_.append(chunk, static_cast<size_t>(n));
  }
}

}  // namespace dpquery
