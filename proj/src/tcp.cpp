#include "fcncp/tcp.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <thread>

namespace fcncp {

namespace {

[[noreturn]] void sys_fail(const std::string& what) {
  throw Error(ErrorCode::io, what + ": " + std::strerror(errno));
}

void write_all(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      sys_fail("send");
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

// Returns false on clean EOF at a frame boundary.
bool read_all(int fd, std::uint8_t* data, std::size_t len, bool eof_ok) {
  std::size_t got = 0;
  while (got < len) {
    const ssize_t n = ::recv(fd, data + got, len - got, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      sys_fail("recv");
    }
    if (n == 0) {
      if (eof_ok && got == 0) return false;
      throw Error(ErrorCode::protocol, "peer closed connection mid-frame");
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

FrameConn::~FrameConn() {
  if (fd_ >= 0) ::close(fd_);
}

void FrameConn::send(const Message& m) {
  const std::vector<std::uint8_t> frame = encode_message(m);
  if (capture_) capture_(frame);
  write_all(fd_, frame.data(), frame.size());
}

Message FrameConn::recv() {
  std::uint8_t head[4];
  if (!read_all(fd_, head, 4, true))
    throw Error(ErrorCode::protocol, "connection closed by peer");
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(head[i]) << (8 * i);
  if (len > kMaxFrameBytes)
    throw Error(ErrorCode::protocol, "frame length overflow; tearing down connection");
  std::vector<std::uint8_t> frame(4 + len);
  std::memcpy(frame.data(), head, 4);
  read_all(fd_, frame.data() + 4, len, false);
  if (capture_) capture_(frame);
  return decode_message(frame);
}

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint) {
  const auto pos = endpoint.rfind(':');
  if (pos == std::string::npos || pos == 0 || pos + 1 >= endpoint.size())
    throw Error(ErrorCode::invalid_argument, "endpoint must be host:port");
  const std::string host = endpoint.substr(0, pos);
  int port = 0;
  try {
    port = std::stoi(endpoint.substr(pos + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::invalid_argument, "invalid port in endpoint");
  }
  if (port < 0 || port > 65535)
    throw Error(ErrorCode::invalid_argument, "port out of range");
  return {host, static_cast<std::uint16_t>(port)};
}

TcpServer::TcpServer(const std::string& host, std::uint16_t port) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) sys_fail("socket");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw Error(ErrorCode::invalid_argument, "invalid listen address: " + host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    const int e = errno;
    ::close(listen_fd_);
    errno = e;
    sys_fail("bind");
  }
  if (::listen(listen_fd_, 2) < 0) sys_fail("listen");
  sockaddr_in bound{};
  socklen_t blen = sizeof(bound);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &blen);
  port_ = ntohs(bound.sin_port);
}

TcpServer::~TcpServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

ServerReport TcpServer::run(const RunConfig& config, FrameCapture capture) {
  ServerReport rep;
  rep.rel_err.resize(2);
  rep.converged.assign(2, false);
  rep.locations.resize(2);
  std::vector<FrameConn> conns;
  std::vector<std::size_t> conn_of_client(2, 0);
  try {
    for (int i = 0; i < 2; ++i) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) sys_fail("accept");
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      conns.emplace_back(fd);
      conns.back().set_capture(capture);
    }
    for (std::size_t i = 0; i < 2; ++i) {
      const Message hello = conns[i].recv();
      if (hello.type != MsgType::Hello || hello.client > 1)
        throw Error(ErrorCode::protocol, "expected HELLO with client index 0 or 1");
      conn_of_client[hello.client] = i;
    }
    auto& c0 = conns[conn_of_client[0]];
    auto& c1 = conns[conn_of_client[1]];

    auto expect = [](FrameConn& c, MsgType ty) {
      Message m = c.recv();
      if (m.type != ty)
        throw Error(ErrorCode::protocol, "unexpected message type");
      return m;
    };

    const Message f0 = expect(c0, MsgType::Factors);
    const Message f1 = expect(c1, MsgType::Factors);
    SelectionResult sel = select_couplings(f0.matrices, f1.matrices,
                                           config.coupled_modes, config.max_coupled());
    rep.locations[0] = sel.locations1;
    rep.locations[1] = sel.locations2;
    for (std::size_t k = 0; k < 2; ++k) {
      Message loc;
      loc.type = MsgType::Locations;
      for (std::size_t v : k == 0 ? sel.locations1 : sel.locations2)
        loc.indices.push_back(v);
      (k == 0 ? c0 : c1).send(loc);
    }

    auto expect_upload = [&](FrameConn& c, std::uint32_t round) {
      Message m = expect(c, MsgType::PublicUpload);
      if (m.round != round)
        throw Error(ErrorCode::protocol, "barrier violation: wrong round in upload");
      return m;
    };

    Message u0 = expect_upload(c0, 0);
    Message u1 = expect_upload(c1, 0);
    auto to_cols = [](const Message& m) {
      GlobalColumns g;
      g.per_mode = m.matrices;
      return g;
    };
    std::vector<GlobalColumns> uploads = {to_cols(u0), to_cols(u1)};
    GlobalColumns global = init_global(uploads);
    ConvergenceTracker tracker(2, config.epsilon);
    tracker.record({u0.rel_err, u1.rel_err});

    bool done = false;
    for (std::uint32_t t = 1; t <= config.max_rounds && !done; ++t) {
      Message bcast;
      bcast.type = MsgType::GlobalBcast;
      bcast.round = t;
      bcast.flag = 0;
      bcast.matrices = global.per_mode;
      c0.send(bcast);
      c1.send(bcast);
      u0 = expect_upload(c0, t);
      u1 = expect_upload(c1, t);
      uploads[0] = to_cols(u0);
      uploads[1] = to_cols(u1);
      global = server_update_global(global, uploads, config.rho, config.alpha);
      rep.rel_err[0].push_back(u0.rel_err);
      rep.rel_err[1].push_back(u1.rel_err);
      rep.rounds = t;
      done = tracker.record({u0.rel_err, u1.rel_err});
    }
    rep.converged.assign(tracker.client_converged().begin(),
                         tracker.client_converged().end());

    Message fin;
    fin.type = MsgType::GlobalBcast;
    fin.round = static_cast<std::uint32_t>(rep.rounds) + 1;
    fin.flag = 1;
    fin.matrices = global.per_mode;
    c0.send(fin);
    c1.send(fin);
    Message bye;
    bye.type = MsgType::Shutdown;
    c0.send(bye);
    c1.send(bye);
  } catch (const Error& e) {
    rep.aborted = true;
    rep.error = e.what();
  }
  return rep;
}

ClientReport run_tcp_client(const RunConfig& config, std::size_t client_index,
                            DenseTensor tensor, const std::string& host,
                            std::uint16_t port, FrameCapture capture) {
  if (client_index > 1)
    throw Error(ErrorCode::invalid_argument, "client index must be 0 or 1");
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) sys_fail("socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw Error(ErrorCode::invalid_argument, "invalid connect address: " + host);
  }
  // retry briefly so a client can start before the server finishes binding
  int attempts = 50;
  while (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    if ((errno == ECONNREFUSED || errno == EINTR) && --attempts > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
      continue;
    }
    const int e = errno;
    ::close(fd);
    errno = e;
    sys_fail("connect");
  }
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  FrameConn conn(fd);
  conn.set_capture(std::move(capture));

  Message hello;
  hello.type = MsgType::Hello;
  hello.client = static_cast<std::uint32_t>(client_index);
  conn.send(hello);

  ClientSession session(std::move(tensor), config.clients[client_index].rank,
                        config.clients[client_index].seed, config.compressed);
  Message fac;
  fac.type = MsgType::Factors;
  fac.matrices = session.burn_in(config.burn_in, config.coupled_modes);
  conn.send(fac);

  const Message loc = conn.recv();
  if (loc.type != MsgType::Locations)
    throw Error(ErrorCode::protocol, "expected LOCATIONS");
  CouplingSpec spec;
  spec.coupled_modes = config.coupled_modes;
  spec.L = config.L;
  for (std::uint64_t v : loc.indices) spec.locations.push_back(v);
  session.set_coupling(spec);

  ClientReport rep;
  rep.locations = spec.locations;

  auto send_upload = [&](std::uint32_t round, const GlobalColumns& cols) {
    Message up;
    up.type = MsgType::PublicUpload;
    up.round = round;
    up.rel_err = session.current_rel_err();
    up.matrices = cols.per_mode;
    conn.send(up);
  };
  send_upload(0, session.coupled_columns());
  const double burn_in_err = session.current_rel_err();

  for (;;) {
    const Message m = conn.recv();
    if (m.type == MsgType::Shutdown) break;
    if (m.type != MsgType::GlobalBcast)
      throw Error(ErrorCode::protocol, "expected GLOBAL_BCAST");
    if (m.flag != 0) continue;  // final model note; wait for SHUTDOWN
    GlobalColumns global;
    global.per_mode = m.matrices;
    const GlobalColumns upload = session.round(global, config.rho);
    rep.rel_err.push_back(session.current_rel_err());
    send_upload(m.round, upload);
  }
  const std::size_t n = rep.rel_err.size();
  if (n >= 2)
    rep.converged = std::abs(rep.rel_err[n - 1] - rep.rel_err[n - 2]) < config.epsilon;
  else if (n == 1)
    rep.converged = std::abs(rep.rel_err[0] - burn_in_err) < config.epsilon;
  rep.factors = session.factors();
  return rep;
}

}  // namespace fcncp
