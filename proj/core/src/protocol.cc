// Copyright 2026 The edupipe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing,
// software distributed under the License is distributed on an
// "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, either express or implied.  See the License for the
// specific language governing permissions and limitations
// under the License.

#include "edupipe/protocol.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace edupipe {

Bytes EncodeFrame(ByteView body) {
  if (body.size() > kMaxFrameBytes) Fail(ErrorCode::kTransportFailure, "frame too large");
  Bytes out;
  out.reserve(body.size() + 4);
  PutU32BE(out, static_cast<std::uint32_t>(body.size()));
  PutBytes(out, body);
  return out;
}

Bytes DecodeFrame(ByteView frame) {
  ByteReader r(frame);
  std::uint32_t n = r.U32BE();
  if (n != r.remaining()) Fail(ErrorCode::kMalformedRecord, "frame length mismatch");
  return r.TakeBytes(n);
}

namespace {

Bytes ErrorReply(ErrorCode code, const std::string& message) {
  Bytes out;
  PutU8(out, static_cast<std::uint8_t>(ReplyStatus::kError));
  PutU32BE(out, static_cast<std::uint32_t>(code));
  PutString(out, message);
  return out;
}

void PutOptionalBytes(Bytes& out, const std::optional<Bytes>& v) {
  PutU8(out, v ? 1 : 0);
  if (v) PutLengthPrefixed(out, *v);
}

std::optional<Bytes> ReadOptionalBytes(ByteReader& r) {
  if (r.U8() == 0) return std::nullopt;
  ByteView v = r.LengthPrefixed();
  return Bytes(v.begin(), v.end());
}

Signature ReadSignature(ByteReader& r) { return Signature::FromBytes(r.Take(Signature::kSize)); }

}  // namespace

void StoreService::SetStore(DemandStore* store) {
  std::lock_guard<std::mutex> l(mu_);
  store_ = store;
}

void StoreService::SetWalHandler(WalEndpointHandler* handler) {
  std::lock_guard<std::mutex> l(mu_);
  wal_ = handler;
}

Bytes StoreService::Handle(ByteView request_body) {
  try {
    ByteReader r(request_body);
    auto op = static_cast<OpCode>(r.U8());
    return Dispatch(op, r);
  } catch (const Error& e) {
    return ErrorReply(e.code(), e.what());
  } catch (const std::exception& e) {
    return ErrorReply(ErrorCode::kTransportFailure, e.what());
  }
}

Bytes StoreService::Dispatch(OpCode op, ByteReader& args) {
  DemandStore* store;
  WalEndpointHandler* wal;
  {
    std::lock_guard<std::mutex> l(mu_);
    store = store_;
    wal = wal_;
  }
  if (store == nullptr) Fail(ErrorCode::kStoreUnreachable, "no store attached");

  Bytes out;
  PutU8(out, static_cast<std::uint8_t>(ReplyStatus::kOk));
  switch (op) {
    case OpCode::kPut: {
      PutOutcome o = store->PutDemand(DecodeDemand(args.Take(args.remaining())));
      PutU8(out, static_cast<std::uint8_t>(o.status));
      PutOptionalBytes(out, o.result);
      break;
    }
    case OpCode::kClaim: {
      std::string tier = args.LengthPrefixedString();
      OperationPool pool;
      std::uint64_t n = args.U64BE();
      for (std::uint64_t i = 0; i < n; ++i) pool.insert(args.LengthPrefixedString());
      auto now = static_cast<TimestampMs>(args.U64BE());
      auto d = store->ClaimPending(tier, pool, now);
      PutU8(out, d ? 1 : 0);
      if (d) PutBytes(out, EncodeDemand(*d));
      break;
    }
    case OpCode::kStoreResult: {
      Signature sig = ReadSignature(args);
      ByteView result = args.LengthPrefixed();
      std::string tier = args.LengthPrefixedString();
      auto now = static_cast<TimestampMs>(args.U64BE());
      StoreStatus s = store->StoreResult(sig, Bytes(result.begin(), result.end()), tier, now);
      PutU8(out, static_cast<std::uint8_t>(s));
      break;
    }
    case OpCode::kLookup:
      PutOptionalBytes(out, store->Lookup(ReadSignature(args)));
      break;
    case OpCode::kPeerQuery: {
      PutOptionalBytes(out, store->Peek(ReadSignature(args)));
      break;
    }
    case OpCode::kRequeueExpired: {
      auto now = static_cast<TimestampMs>(args.U64BE());
      auto lease = static_cast<DurationMs>(args.U64BE());
      auto sigs = store->RequeueExpired(now, lease);
      PutU64BE(out, sigs.size());
      for (const auto& s : sigs) PutBytes(out, s.view());
      break;
    }
    case OpCode::kLocate:
      PutU8(out, static_cast<std::uint8_t>(store->Locate(ReadSignature(args))));
      break;
    case OpCode::kLiveClaims: {
      std::string tier = args.LengthPrefixedString();
      auto now = static_cast<TimestampMs>(args.U64BE());
      auto lease = static_cast<DurationMs>(args.U64BE());
      PutU64BE(out, store->LiveClaimsHeldBy(tier, now, lease));
      break;
    }
    case OpCode::kStats: {
      StoreStats s = store->Stats();
      for (auto v : {s.puts, s.claims, s.hits, s.misses, s.stores, s.requeues, s.lookups,
                     s.duplicates}) {
        PutU64BE(out, v);
      }
      break;
    }
    case OpCode::kWalPull: {
      if (wal == nullptr) Fail(ErrorCode::kTransportFailure, "no WAL endpoint on this host");
      auto seq = wal->HighestSeq();
      PutU8(out, seq ? 1 : 0);
      PutU64BE(out, seq.value_or(0));
      break;
    }
    case OpCode::kWalPush: {
      if (wal == nullptr) Fail(ErrorCode::kTransportFailure, "no WAL endpoint on this host");
      PutU64BE(out, wal->PushRecords(args.Take(args.remaining())));
      break;
    }
    default:
      Fail(ErrorCode::kMalformedRecord, "unknown op-code " + std::to_string(static_cast<int>(op)));
  }
  return out;
}

Bytes InMemoryTransport::RoundTrip(ByteView request_body) {
  if (down_) Fail(ErrorCode::kStoreUnreachable, "in-memory store link is down");
  Bytes request = EncodeFrame(request_body);
  Bytes reply = EncodeFrame(service_->Handle(DecodeFrame(request)));
  return DecodeFrame(reply);
}

Bytes FramedStoreClient::Call(OpCode op, const Bytes& args) {
  Bytes body;
  body.reserve(args.size() + 1);
  PutU8(body, static_cast<std::uint8_t>(op));
  PutBytes(body, args);
  Bytes reply = transport_->RoundTrip(body);
  ByteReader r(reply);
  auto status = static_cast<ReplyStatus>(r.U8());
  if (status == ReplyStatus::kError) {
    auto code = static_cast<ErrorCode>(r.U32BE());
    // The message already carries the code name prefix from the server.
    throw Error(code, "remote: " + ToString(r.Take(r.remaining())));
  }
  return Bytes(reply.begin() + 1, reply.end());
}

PutOutcome FramedStoreClient::PutDemand(const Demand& d) {
  Bytes reply = Call(OpCode::kPut, EncodeDemand(d));
  ByteReader r(reply);
  PutOutcome o;
  o.status = static_cast<PutStatus>(r.U8());
  o.result = ReadOptionalBytes(r);
  return o;
}

std::optional<Demand> FramedStoreClient::ClaimPending(const std::string& tier,
                                                      const OperationPool& pool,
                                                      TimestampMs now) {
  Bytes args;
  PutLengthPrefixed(args, tier);
  PutU64BE(args, pool.size());
  for (const auto& op : pool) PutLengthPrefixed(args, op);
  PutU64BE(args, static_cast<std::uint64_t>(now));
  Bytes reply = Call(OpCode::kClaim, args);
  ByteReader r(reply);
  if (r.U8() == 0) return std::nullopt;
  return DecodeDemand(r.Take(r.remaining()));
}

StoreStatus FramedStoreClient::StoreResult(const Signature& sig, const Bytes& result,
                                           const std::string& tier, TimestampMs now) {
  Bytes args;
  PutBytes(args, sig.view());
  PutLengthPrefixed(args, result);
  PutLengthPrefixed(args, tier);
  PutU64BE(args, static_cast<std::uint64_t>(now));
  Bytes reply = Call(OpCode::kStoreResult, args);
  ByteReader r(reply);
  return static_cast<StoreStatus>(r.U8());
}

std::optional<Bytes> FramedStoreClient::Lookup(const Signature& sig) {
  Bytes args(sig.view().begin(), sig.view().end());
  Bytes reply = Call(OpCode::kLookup, args);
  ByteReader r(reply);
  return ReadOptionalBytes(r);
}

std::optional<Bytes> FramedStoreClient::PeerQuery(const Signature& sig) {
  Bytes args(sig.view().begin(), sig.view().end());
  Bytes reply = Call(OpCode::kPeerQuery, args);
  ByteReader r(reply);
  return ReadOptionalBytes(r);
}

std::vector<Signature> FramedStoreClient::RequeueExpired(TimestampMs now, DurationMs lease) {
  Bytes args;
  PutU64BE(args, static_cast<std::uint64_t>(now));
  PutU64BE(args, static_cast<std::uint64_t>(lease));
  Bytes reply = Call(OpCode::kRequeueExpired, args);
  ByteReader r(reply);
  std::uint64_t n = r.U64BE();
  std::vector<Signature> out;
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(ReadSignature(r));
  return out;
}

SignatureLocation FramedStoreClient::Locate(const Signature& sig) {
  Bytes args(sig.view().begin(), sig.view().end());
  Bytes reply = Call(OpCode::kLocate, args);
  ByteReader r(reply);
  return static_cast<SignatureLocation>(r.U8());
}

std::size_t FramedStoreClient::LiveClaimsHeldBy(const std::string& tier, TimestampMs now,
                                                DurationMs lease) {
  Bytes args;
  PutLengthPrefixed(args, tier);
  PutU64BE(args, static_cast<std::uint64_t>(now));
  PutU64BE(args, static_cast<std::uint64_t>(lease));
  Bytes reply = Call(OpCode::kLiveClaims, args);
  ByteReader r(reply);
  return static_cast<std::size_t>(r.U64BE());
}

StoreStats FramedStoreClient::Stats() {
  Bytes reply = Call(OpCode::kStats, {});
  ByteReader r(reply);
  StoreStats s;
  s.puts = r.U64BE();
  s.claims = r.U64BE();
  s.hits = r.U64BE();
  s.misses = r.U64BE();
  s.stores = r.U64BE();
  s.requeues = r.U64BE();
  s.lookups = r.U64BE();
  s.duplicates = r.U64BE();
  return s;
}

std::optional<std::uint64_t> FramedStoreClient::WalPull() {
  Bytes reply = Call(OpCode::kWalPull, {});
  ByteReader r(reply);
  bool present = r.U8() != 0;
  std::uint64_t seq = r.U64BE();
  return present ? std::optional<std::uint64_t>(seq) : std::nullopt;
}

std::size_t FramedStoreClient::WalPush(ByteView records) {
  Bytes reply = Call(OpCode::kWalPush, Bytes(records.begin(), records.end()));
  ByteReader r(reply);
  return static_cast<std::size_t>(r.U64BE());
}

namespace {

bool WriteAll(int fd, ByteView data) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

bool ReadAll(int fd, std::uint8_t* buf, std::size_t len) {
  std::size_t off = 0;
  while (off < len) {
    ssize_t n = ::recv(fd, buf + off, len - off, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

// Reads one frame body; nullopt on orderly close or error.
std::optional<Bytes> ReadFrame(int fd) {
  std::uint8_t header[4];
  if (!ReadAll(fd, header, sizeof(header))) return std::nullopt;
  ByteReader r(ByteView(header, 4));
  std::uint32_t n = r.U32BE();
  if (n > kMaxFrameBytes) return std::nullopt;
  Bytes body(n);
  if (n > 0 && !ReadAll(fd, body.data(), n)) return std::nullopt;
  return body;
}

}  // namespace

TcpFrameServer::TcpFrameServer(StoreService* service, std::string bind_host, std::uint16_t port)
    : service_(service) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) Fail(ErrorCode::kIoFailure, std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind_host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    Fail(ErrorCode::kBadConfig, "bad bind address '" + bind_host + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    std::string err = std::strerror(errno);
    ::close(listen_fd_);
    Fail(ErrorCode::kIoFailure, "bind/listen: " + err);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  accept_thread_ = std::thread([this] { AcceptLoop(); });
}

TcpFrameServer::~TcpFrameServer() { Stop(); }

void TcpFrameServer::Stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> threads;
  {
    std::lock_guard<std::mutex> l(conn_mu_);
    for (int fd : connection_fds_) ::shutdown(fd, SHUT_RDWR);
    threads.swap(connection_threads_);
  }
  for (auto& t : threads) t.join();
}

void TcpFrameServer::AcceptLoop() {
  while (!stopping_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard<std::mutex> l(conn_mu_);
    if (stopping_) {
      ::close(fd);
      return;
    }
    connection_fds_.push_back(fd);
    connection_threads_.emplace_back([this, fd] { ServeConnection(fd); });
  }
}

void TcpFrameServer::ServeConnection(int fd) {
  while (!stopping_) {
    auto body = ReadFrame(fd);
    if (!body) break;
    Bytes reply = EncodeFrame(service_->Handle(*body));
    if (!WriteAll(fd, reply)) break;
  }
  std::lock_guard<std::mutex> l(conn_mu_);
  std::erase(connection_fds_, fd);
  ::close(fd);
}

TcpTransport::TcpTransport(std::string host, std::uint16_t port)
    : host_(std::move(host)), port_(port) {}

TcpTransport::~TcpTransport() {
  std::lock_guard<std::mutex> l(mu_);
  CloseLocked();
}

void TcpTransport::CloseLocked() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void TcpTransport::ConnectLocked() {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  std::string port = std::to_string(port_);
  if (::getaddrinfo(host_.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr) {
    Fail(ErrorCode::kStoreUnreachable, "cannot resolve " + host_);
  }
  int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0 || ::connect(fd, res->ai_addr, res->ai_addrlen) != 0) {
    std::string err = std::strerror(errno);
    if (fd >= 0) ::close(fd);
    ::freeaddrinfo(res);
    Fail(ErrorCode::kStoreUnreachable, host_ + ":" + port + ": " + err);
  }
  ::freeaddrinfo(res);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  fd_ = fd;
}

Bytes TcpTransport::RoundTrip(ByteView request_body) {
  std::lock_guard<std::mutex> l(mu_);
  Bytes frame = EncodeFrame(request_body);
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (fd_ < 0) ConnectLocked();
    if (WriteAll(fd_, frame)) {
      if (auto reply = ReadFrame(fd_)) return std::move(*reply);
    }
    CloseLocked();
  }
  Fail(ErrorCode::kStoreUnreachable, "connection to " + host_ + " lost");
}

std::pair<std::string, std::uint16_t> ParseStoreAddress(const std::string& addr, bool allow_any_port) {
  std::string rest = addr;
  if (rest.rfind("tcp://", 0) == 0) rest = rest.substr(6);
  auto colon = rest.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size()) {
    Fail(ErrorCode::kBadConfig, "store address must be tcp://host:port, got '" + addr + "'");
  }
  int port = 0;
  try {
    port = std::stoi(rest.substr(colon + 1));
  } catch (const std::exception&) {
    Fail(ErrorCode::kBadConfig, "bad port in '" + addr + "'");
  }
  if (port < (allow_any_port ? 0 : 1) || port > 65535) Fail(ErrorCode::kBadConfig, "port out of range in '" + addr + "'");
  return {rest.substr(0, colon), static_cast<std::uint16_t>(port)};
}

}  // namespace edupipe
