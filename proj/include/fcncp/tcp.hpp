#ifndef FCNCP_TCP_HPP
#define FCNCP_TCP_HPP

#include <functional>
#include <string>

#include "fcncp/federation.hpp"
#include "fcncp/message.hpp"

namespace fcncp {

/// Observes every frame crossing a connection (both directions); used by the
/// transport tests to scan captures.
using FrameCapture = std::function<void(const std::vector<std::uint8_t>&)>;

/// Length-prefixed frame transport over a connected socket.
class FrameConn {
 public:
  explicit FrameConn(int fd) : fd_(fd) {}
  FrameConn(FrameConn&& o) noexcept : fd_(o.fd_), capture_(std::move(o.capture_)) {
    o.fd_ = -1;
  }
  ~FrameConn();
  FrameConn(const FrameConn&) = delete;
  FrameConn& operator=(const FrameConn&) = delete;

  void set_capture(FrameCapture c) { capture_ = std::move(c); }
  void send(const Message& m);
  Message recv();

 private:
  int fd_ = -1;
  FrameCapture capture_;
};

struct ServerReport {
  std::vector<std::vector<double>> rel_err;  ///< per client, per round
  std::size_t rounds = 0;
  std::vector<bool> converged;
  std::vector<std::vector<std::size_t>> locations;  ///< per client
  bool aborted = false;
  std::string error;
};

struct ClientReport {
  FactorSet factors;
  std::vector<double> rel_err;
  bool converged = false;
  std::vector<std::size_t> locations;
};

/// Central server over TCP. Binds on construction; port() reports the bound
/// port (useful with port 0).
class TcpServer {
 public:
  TcpServer(const std::string& host, std::uint16_t port);
  ~TcpServer();
  std::uint16_t port() const { return port_; }

  /// Accepts both clients and drives the whole protocol. A client disconnect
  /// aborts the run with the partial traces preserved in the report.
  ServerReport run(const RunConfig& config, FrameCapture capture = {});

 private:
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Client role over TCP; blocks until the server signals completion.
ClientReport run_tcp_client(const RunConfig& config, std::size_t client_index,
                            DenseTensor tensor, const std::string& host,
                            std::uint16_t port, FrameCapture capture = {});

/// Splits "host:port"; throws on malformed input.
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint);

}  // namespace fcncp

#endif
