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

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "edupipe/store.h"

namespace edupipe {

// Store frame protocol. A frame is a u32 BE length followed by that many
// bytes. A request frame body is an op-code byte then the op's argument
// record; a response body is a status byte then the reply record.
enum class OpCode : std::uint8_t {
  kPut = 0x01,
  kClaim = 0x02,
  kStoreResult = 0x03,
  kLookup = 0x04,
  kRequeueExpired = 0x05,
  kLocate = 0x06,
  kLiveClaims = 0x07,
  kStats = 0x08,
  kPeerQuery = 0x09,
  kWalPull = 0x10,
  kWalPush = 0x11,
};

enum class ReplyStatus : std::uint8_t { kOk = 0, kError = 1 };

inline constexpr std::size_t kMaxFrameBytes = 256u << 20;

Bytes EncodeFrame(ByteView body);
// Decodes one complete frame; throws kMalformedRecord if `frame` is not
// exactly one frame.
Bytes DecodeFrame(ByteView frame);

// Synchronous request/response channel carrying frame bodies.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Bytes RoundTrip(ByteView request_body) = 0;
};

// Handlers for the WAL shipping op-codes; implemented by replica hosts.
class WalEndpointHandler {
 public:
  virtual ~WalEndpointHandler() = default;
  // Highest sequence number held, or nullopt if empty.
  virtual std::optional<std::uint64_t> HighestSeq() = 0;
  // Concatenated WAL record encodings; returns records applied.
  virtual std::size_t PushRecords(ByteView records) = 0;
};

// Server side of the protocol: decodes a request body, dispatches to the
// store, encodes the reply body. The store behind it can be swapped (the
// simulator replaces it after a crash).
class StoreService {
 public:
  explicit StoreService(DemandStore* store) : store_(store) {}

  void SetStore(DemandStore* store);
  void SetWalHandler(WalEndpointHandler* handler);

  // Never throws; errors become kError replies carrying the error code and
  // message.
  Bytes Handle(ByteView request_body);

 private:
  Bytes Dispatch(OpCode op, ByteReader& args);

  std::mutex mu_;
  DemandStore* store_;
  WalEndpointHandler* wal_ = nullptr;
};

// Loops frames through EncodeFrame/DecodeFrame to a local service so the
// simulator exercises exactly the bytes TCP would carry.
class InMemoryTransport final : public Transport {
 public:
  explicit InMemoryTransport(StoreService* service) : service_(service) {}

  Bytes RoundTrip(ByteView request_body) override;
  // While down, every round trip throws kStoreUnreachable.
  void SetDown(bool down) { down_ = down; }

 private:
  StoreService* service_;
  std::atomic<bool> down_{false};
};

// StoreEndpoint over any transport.
class FramedStoreClient final : public StoreEndpoint {
 public:
  explicit FramedStoreClient(std::shared_ptr<Transport> transport)
      : transport_(std::move(transport)) {}

  PutOutcome PutDemand(const Demand& d) override;
  std::optional<Demand> ClaimPending(const std::string& tier, const OperationPool& pool,
                                     TimestampMs now) override;
  StoreStatus StoreResult(const Signature& sig, const Bytes& result, const std::string& tier,
                          TimestampMs now) override;
  std::optional<Bytes> Lookup(const Signature& sig) override;
  std::vector<Signature> RequeueExpired(TimestampMs now, DurationMs lease) override;
  SignatureLocation Locate(const Signature& sig) override;
  std::size_t LiveClaimsHeldBy(const std::string& tier, TimestampMs now,
                               DurationMs lease) override;
  StoreStats Stats() override;

  // Result held by the remote store's warehouse, served as a peer answer.
  std::optional<Bytes> PeerQuery(const Signature& sig);
  std::optional<std::uint64_t> WalPull();
  std::size_t WalPush(ByteView records);

 private:
  Bytes Call(OpCode op, const Bytes& args);

  std::shared_ptr<Transport> transport_;
};

// Blocking TCP server for the frame protocol; one thread per connection.
class TcpFrameServer {
 public:
  // port 0 picks an ephemeral port.
  TcpFrameServer(StoreService* service, std::string bind_host, std::uint16_t port);
  ~TcpFrameServer();

  TcpFrameServer(const TcpFrameServer&) = delete;
  TcpFrameServer& operator=(const TcpFrameServer&) = delete;

  std::uint16_t port() const { return port_; }
  void Stop();

 private:
  void AcceptLoop();
  void ServeConnection(int fd);

  StoreService* service_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex conn_mu_;
  std::vector<std::thread> connection_threads_;
  std::vector<int> connection_fds_;
};

// Client transport over one persistent TCP connection (reconnects on
// failure). Thread-safe; round trips are serialized.
class TcpTransport final : public Transport {
 public:
  TcpTransport(std::string host, std::uint16_t port);
  ~TcpTransport() override;

  Bytes RoundTrip(ByteView request_body) override;

 private:
  void ConnectLocked();
  void CloseLocked();

  std::string host_;
  std::uint16_t port_;
  std::mutex mu_;
  int fd_ = -1;
};

// Parses "tcp://host:port" (or "host:port").
std::pair<std::string, std::uint16_t> ParseStoreAddress(const std::string& addr, bool allow_any_port = false);

}  // namespace edupipe
