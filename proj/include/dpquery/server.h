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

// Newline-delimited JSON over TCP. Each connection gets a thread; requests on
// one connection are answered in order.

#ifndef DPQUERY_SERVER_H_
#define DPQUERY_SERVER_H_

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpquery/query_service.h"

namespace dpquery {

// Requests longer than this are answered with a protocol error and the
// connection is closed.
inline constexpr size_t kMaxRequestBytes = 1 << 20;

class Server {
 public:
  // Port 0 picks a free port; see port(). `service` must outlive the server.
  static absl::StatusOr<std::unique_ptr<Server>> Start(
      const QueryService* service, const std::string& host, uint16_t port);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  uint16_t port() const { return port_; }

  // Stops accepting, closes open connections once their current request is
  // answered, and flushes the budget journal. Idempotent.
  absl::Status Stop();

 private:
  struct Connection {
    int fd = -1;
    std::thread thread;
    std::atomic<bool> done{false};
  };

  Server(const QueryService* service, int listen_fd, uint16_t port,
         int wake_read, int wake_write);
  void AcceptLoop();
  void Serve(Connection* connection);
  void ReapFinished();

  const QueryService* service_;
  int listen_fd_;
  uint16_t port_;
  int wake_read_;
  int wake_write_;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex connections_mu_;
  std::vector<std::unique_ptr<Connection>> connections_;
  std::mutex stop_mu_;
  bool stopped_ = false;
};

// Blocking line client, for tests and tools.
class LineClient {
 public:
  static absl::StatusOr<LineClient> Connect(const std::string& host,
                                            uint16_t port);
  LineClient(LineClient&& other) noexcept;
  LineClient& operator=(LineClient&& other) noexcept;
  ~LineClient();

  // Sends one line (a newline is appended) and returns the reply line
  // without its newline.
  absl::StatusOr<std::string> Call(std::string_view request);

 private:
  explicit LineClient(int fd) : fd_(fd) {}
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace dpquery

#endif  // DPQUERY_SERVER_H_
