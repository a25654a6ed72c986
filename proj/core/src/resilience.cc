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

#include "edupipe/resilience.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>

namespace edupipe {

namespace {

constexpr char kWalMagic[] = {'D', 'W', 'A', 'L'};
constexpr std::uint8_t kWalVersion = 1;
constexpr std::size_t kWalHeaderSize = 5;
constexpr char kCheckpointMagic[] = {'D', 'C', 'K', 'P'};
constexpr std::uint8_t kCheckpointVersion = 1;
constexpr std::uint32_t kAbsent = 0xFFFFFFFFu;

Bytes WalHeader() {
  Bytes h(kWalMagic, kWalMagic + 4);
  PutU8(h, kWalVersion);
  return h;
}

// The checksummed span: sig | before-len | before | after-len | after.
Bytes CrcBody(const Signature& sig, const std::optional<Bytes>& before, const Bytes& after) {
  Bytes b;
  PutBytes(b, sig.view());
  if (before) {
    PutU32BE(b, static_cast<std::uint32_t>(before->size()));
    PutBytes(b, *before);
  } else {
    PutU32BE(b, kAbsent);
  }
  PutU32BE(b, static_cast<std::uint32_t>(after.size()));
  PutBytes(b, after);
  return b;
}

[[noreturn]] void FailErrno(const std::string& what, const std::string& path) {
  Fail(ErrorCode::kIoFailure, what + " " + path + ": " + std::strerror(errno));
}

}  // namespace

std::uint32_t WalRecordCrc(const Signature& sig, const std::optional<Bytes>& before,
                           const Bytes& after) {
  return Crc32(CrcBody(sig, before, after));
}

WalRecord MakeWalRecord(const Signature& sig, std::optional<Bytes> before, Bytes after) {
  WalRecord r;
  r.signature = sig;
  r.crc = WalRecordCrc(sig, before, after);
  r.before = std::move(before);
  r.after = std::move(after);
  return r;
}

void EncodeWalRecord(Bytes& out, const WalRecord& rec) {
  PutU64BE(out, rec.seq);
  PutBytes(out, CrcBody(rec.signature, rec.before, rec.after));
  PutU32BE(out, rec.crc);
}

std::optional<WalRecord> TryDecodeWalRecord(ByteReader& reader) {
  try {
    WalRecord r;
    r.seq = reader.U64BE();
    r.signature = Signature::FromBytes(reader.Take(Signature::kSize));
    std::uint32_t before_len = reader.U32BE();
    if (before_len != kAbsent) r.before = reader.TakeBytes(before_len);
    std::uint32_t after_len = reader.U32BE();
    r.after = reader.TakeBytes(after_len);
    r.crc = reader.U32BE();
    if (r.crc != WalRecordCrc(r.signature, r.before, r.after)) return std::nullopt;
    return r;
  } catch (const Error&) {
    return std::nullopt;
  }
}

FileStorage::FileStorage(std::string path, bool sync) : path_(std::move(path)), sync_(sync) {}

Bytes FileStorage::ReadAll() {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return {};
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void FileStorage::Append(ByteView data) {
  int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) FailErrno("open", path_);
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      ::close(fd);
      FailErrno("write", path_);
    }
    off += static_cast<std::size_t>(n);
  }
  if (sync_ && ::fsync(fd) != 0) {
    ::close(fd);
    FailErrno("fsync", path_);
  }
  ::close(fd);
}

void FileStorage::Replace(ByteView data) {
  std::string tmp = path_ + ".tmp";
  ::unlink(tmp.c_str());
  FileStorage(tmp, sync_).Append(data);
  if (data.empty()) {
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) FailErrno("open", tmp);
    ::close(fd);
  }
  if (::rename(tmp.c_str(), path_.c_str()) != 0) FailErrno("rename", path_);
}

Bytes MemoryStorage::ReadAll() {
  std::lock_guard<std::mutex> l(mu_);
  return data_;
}

void MemoryStorage::Append(ByteView data) {
  std::lock_guard<std::mutex> l(mu_);
  data_.insert(data_.end(), data.begin(), data.end());
}

void MemoryStorage::Replace(ByteView data) {
  std::lock_guard<std::mutex> l(mu_);
  data_.assign(data.begin(), data.end());
}

std::size_t MemoryStorage::size() const {
  std::lock_guard<std::mutex> l(mu_);
  return data_.size();
}

void MemoryStorage::TruncateTo(std::size_t size) {
  std::lock_guard<std::mutex> l(mu_);
  if (size < data_.size()) data_.resize(size);
}

Wal::Wal(std::shared_ptr<DurableStorage> storage, std::size_t capacity)
    : storage_(std::move(storage)), capacity_(capacity) {
  if (capacity_ == 0) Fail(ErrorCode::kBadParameter, "WAL capacity must be positive");
  std::lock_guard<std::mutex> l(mu_);
  LoadLocked();
}

void Wal::LoadLocked() {
  Bytes data = storage_->ReadAll();
  records_.clear();
  if (data.empty()) {
    storage_->Replace(WalHeader());
    next_seq_ = std::max<std::uint64_t>(next_seq_, 0);
    return;
  }
  if (data.size() < kWalHeaderSize) {
    // A crash while writing the header leaves nothing worth keeping.
    truncated_bytes_ += data.size();
    storage_->Replace(WalHeader());
    return;
  }
  if (std::memcmp(data.data(), kWalMagic, 4) != 0 || data[4] != kWalVersion) {
    Fail(ErrorCode::kIoFailure, "not a WAL file (bad magic or version)");
  }
  ByteReader reader(ByteView(data).subspan(kWalHeaderSize));
  std::size_t valid_end = kWalHeaderSize;
  while (!reader.empty()) {
    auto rec = TryDecodeWalRecord(reader);
    if (!rec) break;
    if (!records_.empty() && rec->seq <= records_.back().seq) break;
    records_.push_back(std::move(*rec));
    valid_end = data.size() - reader.remaining();
  }
  if (valid_end < data.size()) {
    truncated_bytes_ += data.size() - valid_end;
    storage_->Replace(ByteView(data).first(valid_end));
  }
  if (!records_.empty()) next_seq_ = std::max(next_seq_, records_.back().seq + 1);
}

void Wal::RewriteLocked() {
  Bytes all = WalHeader();
  for (const auto& r : records_) EncodeWalRecord(all, r);
  storage_->Replace(all);
}

void Wal::EvictForAppendLocked() {
  if (records_.size() < capacity_) return;
  const WalRecord& oldest = records_.front();
  if (!checkpointed_through_ || oldest.seq > *checkpointed_through_) {
    Fail(ErrorCode::kCapacityExhausted,
         "WAL full and record " + std::to_string(oldest.seq) + " is not checkpointed");
  }
  records_.pop_front();
  RewriteLocked();
}

std::uint64_t Wal::Append(const WalRecord& rec) {
  if (rec.crc != WalRecordCrc(rec.signature, rec.before, rec.after)) {
    Fail(ErrorCode::kChecksumMismatch, "WAL record crc does not validate");
  }
  std::lock_guard<std::mutex> l(mu_);
  EvictForAppendLocked();
  WalRecord stored = rec;
  stored.seq = next_seq_;
  Bytes encoded;
  EncodeWalRecord(encoded, stored);
  storage_->Append(encoded);
  records_.push_back(std::move(stored));
  return next_seq_++;
}

std::uint64_t Wal::Append(const Signature& sig, std::optional<Bytes> before, Bytes after) {
  return Append(MakeWalRecord(sig, std::move(before), std::move(after)));
}

bool Wal::AppendShipped(const WalRecord& rec) {
  if (rec.crc != WalRecordCrc(rec.signature, rec.before, rec.after)) {
    Fail(ErrorCode::kChecksumMismatch, "shipped WAL record crc does not validate");
  }
  std::lock_guard<std::mutex> l(mu_);
  if (!records_.empty() && rec.seq <= records_.back().seq) return false;
  if (records_.empty() && rec.seq < next_seq_) return false;
  EvictForAppendLocked();
  Bytes encoded;
  EncodeWalRecord(encoded, rec);
  storage_->Append(encoded);
  records_.push_back(rec);
  next_seq_ = rec.seq + 1;
  return true;
}

void Wal::MarkCheckpointed(std::uint64_t seq) {
  std::lock_guard<std::mutex> l(mu_);
  if (!checkpointed_through_ || seq > *checkpointed_through_) checkpointed_through_ = seq;
}

std::size_t Wal::Replay(DemandStore& store) {
  std::vector<WalRecord> recs;
  {
    std::lock_guard<std::mutex> l(mu_);
    LoadLocked();
    recs.assign(records_.begin(), records_.end());
  }
  std::size_t applied = 0;
  for (auto& r : recs) {
    if (store.InstallResult(r.signature, std::move(r.after))) ++applied;
  }
  return applied;
}

std::vector<WalRecord> Wal::Records() const {
  std::lock_guard<std::mutex> l(mu_);
  return {records_.begin(), records_.end()};
}

std::vector<WalRecord> Wal::RecordsAfter(std::optional<std::uint64_t> seq) const {
  std::lock_guard<std::mutex> l(mu_);
  std::vector<WalRecord> out;
  for (const auto& r : records_) {
    if (!seq || r.seq > *seq) out.push_back(r);
  }
  return out;
}

std::optional<std::uint64_t> Wal::HighestSeq() const {
  std::lock_guard<std::mutex> l(mu_);
  if (records_.empty()) return std::nullopt;
  return records_.back().seq;
}

std::optional<std::uint64_t> Wal::OldestSeq() const {
  std::lock_guard<std::mutex> l(mu_);
  if (records_.empty()) return std::nullopt;
  return records_.front().seq;
}

std::optional<std::uint64_t> Wal::CheckpointedThrough() const {
  std::lock_guard<std::mutex> l(mu_);
  return checkpointed_through_;
}

std::size_t Wal::size() const {
  std::lock_guard<std::mutex> l(mu_);
  return records_.size();
}

std::size_t Wal::truncated_bytes() const {
  std::lock_guard<std::mutex> l(mu_);
  return truncated_bytes_;
}

Bytes EncodeCheckpoint(const Checkpoint& cp) {
  Bytes out(kCheckpointMagic, kCheckpointMagic + 4);
  PutU8(out, kCheckpointVersion);
  PutU8(out, cp.through_seq ? 1 : 0);
  PutU64BE(out, cp.through_seq.value_or(0));
  PutU64BE(out, cp.entries.size());
  for (const auto& [sig, value] : cp.entries) {
    PutBytes(out, sig.view());
    PutU32BE(out, static_cast<std::uint32_t>(value.size()));
    PutBytes(out, value);
  }
  PutU32BE(out, Crc32(out));
  return out;
}

Checkpoint DecodeCheckpoint(ByteView data) {
  if (data.size() < 4) Fail(ErrorCode::kMalformedRecord, "checkpoint too short");
  std::uint32_t crc = 0;
  {
    ByteReader tail(data.last(4));
    crc = tail.U32BE();
  }
  ByteView body = data.first(data.size() - 4);
  if (Crc32(body) != crc) Fail(ErrorCode::kChecksumMismatch, "checkpoint crc mismatch");
  ByteReader r(body);
  ByteView magic = r.Take(4);
  if (std::memcmp(magic.data(), kCheckpointMagic, 4) != 0) {
    Fail(ErrorCode::kMalformedRecord, "bad checkpoint magic");
  }
  if (r.U8() != kCheckpointVersion) Fail(ErrorCode::kMalformedRecord, "bad checkpoint version");
  Checkpoint cp;
  bool has_through = r.U8() != 0;
  std::uint64_t through = r.U64BE();
  if (has_through) cp.through_seq = through;
  std::uint64_t n = r.U64BE();
  for (std::uint64_t i = 0; i < n; ++i) {
    Signature sig = Signature::FromBytes(r.Take(Signature::kSize));
    std::uint32_t len = r.U32BE();
    cp.entries.emplace(sig, r.TakeBytes(len));
  }
  if (!r.empty()) Fail(ErrorCode::kMalformedRecord, "trailing bytes in checkpoint");
  return cp;
}

std::size_t RecoverStore(DemandStore& store, Wal& wal, DurableStorage* checkpoint_storage) {
  std::size_t installed = 0;
  if (checkpoint_storage != nullptr) {
    Bytes data = checkpoint_storage->ReadAll();
    if (!data.empty()) {
      Checkpoint cp = DecodeCheckpoint(data);
      for (auto& [sig, value] : cp.entries) {
        if (store.InstallResult(sig, std::move(value))) ++installed;
      }
      if (cp.through_seq) wal.MarkCheckpointed(*cp.through_seq);
    }
  }
  return installed + wal.Replay(store);
}

DurableLog::DurableLog(std::shared_ptr<Wal> wal, std::shared_ptr<DurableStorage> checkpoint_storage,
                       std::size_t checkpoint_interval)
    : wal_(std::move(wal)),
      checkpoint_storage_(std::move(checkpoint_storage)),
      checkpoint_interval_(checkpoint_interval) {}

void DurableLog::OnCommit(const Signature& sig, const std::optional<Bytes>& before,
                          const Bytes& after) {
  wal_->Append(sig, before, after);
  std::lock_guard<std::mutex> l(mu_);
  std::uint64_t index = appends_++;
  ++since_checkpoint_;
  for (const auto& r : replicas_) {
    if (r.mode == ReplicationMode::kEager) eager_pending_ = true;
  }
  if (crash_after_ && *crash_after_ == index) {
    crash_fired_ = true;
    throw SimulatedCrash(index);
  }
}

void DurableLog::AfterCommit(DemandStore& store) {
  bool checkpoint = false;
  bool ship = false;
  {
    std::lock_guard<std::mutex> l(mu_);
    if (checkpoint_interval_ > 0 && since_checkpoint_ >= checkpoint_interval_) checkpoint = true;
    ship = eager_pending_;
    eager_pending_ = false;
  }
  if (checkpoint) CheckpointNow(store);
  if (ship) {
    std::vector<Replica> targets;
    {
      std::lock_guard<std::mutex> l(mu_);
      targets = replicas_;
    }
    for (const auto& r : targets) {
      if (r.mode == ReplicationMode::kEager) ShipWal(*wal_, *r.endpoint);
    }
  }
}

void DurableLog::CheckpointNow(DemandStore& store) {
  std::lock_guard<std::mutex> cl(checkpoint_mu_);
  // Every record at or below `through` was appended inside a store commit
  // that finished before the snapshot below could take the store lock.
  auto through = wal_->HighestSeq();
  Checkpoint cp;
  cp.through_seq = through;
  cp.entries = store.WarehouseSnapshot();
  if (checkpoint_storage_ != nullptr) checkpoint_storage_->Replace(EncodeCheckpoint(cp));
  if (through) wal_->MarkCheckpointed(*through);
  std::vector<Replica> targets;
  {
    std::lock_guard<std::mutex> l(mu_);
    since_checkpoint_ = 0;
    ++checkpoints_;
    targets = replicas_;
  }
  for (const auto& r : targets) {
    if (r.mode == ReplicationMode::kLazy) ShipWal(*wal_, *r.endpoint);
  }
}

void DurableLog::AddReplica(WalEndpointHandler* replica, ReplicationMode mode) {
  std::lock_guard<std::mutex> l(mu_);
  replicas_.push_back({replica, mode});
}

std::size_t DurableLog::ShipAll() {
  std::vector<Replica> targets;
  {
    std::lock_guard<std::mutex> l(mu_);
    targets = replicas_;
  }
  std::size_t n = 0;
  for (const auto& r : targets) n += ShipWal(*wal_, *r.endpoint);
  return n;
}

void DurableLog::CrashAfterAppend(std::optional<std::uint64_t> index) {
  std::lock_guard<std::mutex> l(mu_);
  crash_after_ = index;
}

bool DurableLog::crash_fired() const {
  std::lock_guard<std::mutex> l(mu_);
  return crash_fired_;
}

std::uint64_t DurableLog::appends() const {
  std::lock_guard<std::mutex> l(mu_);
  return appends_;
}

std::uint64_t DurableLog::checkpoints() const {
  std::lock_guard<std::mutex> l(mu_);
  return checkpoints_;
}

std::size_t ShipWal(const Wal& src, WalEndpointHandler& dst) {
  std::optional<std::uint64_t> have;
  try {
    have = dst.HighestSeq();
  } catch (const Error& e) {
    Fail(ErrorCode::kTransportFailure, std::string("replica unreachable: ") + e.what());
  }
  auto records = src.RecordsAfter(have);
  if (records.empty()) return 0;
  std::uint64_t needed = have ? *have + 1 : 0;
  if (records.front().seq > needed) {
    Fail(ErrorCode::kTransportFailure, "replica needs seq " + std::to_string(needed) +
                                           " but the oldest retained is " +
                                           std::to_string(records.front().seq));
  }
  Bytes payload;
  for (const auto& r : records) EncodeWalRecord(payload, r);
  try {
    return dst.PushRecords(payload);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kTransportFailure) throw;
    Fail(ErrorCode::kTransportFailure, std::string("ship failed: ") + e.what());
  }
}

std::optional<std::uint64_t> RemoteWalEndpoint::HighestSeq() { return client_->WalPull(); }

std::size_t RemoteWalEndpoint::PushRecords(ByteView records) { return client_->WalPush(records); }

ReplicaHost::ReplicaHost(std::shared_ptr<Wal> wal, DemandStore* store,
                         std::shared_ptr<DurableStorage> checkpoint_storage)
    : wal_(std::move(wal)),
      store_(store),
      checkpoint_storage_(checkpoint_storage ? std::move(checkpoint_storage)
                                             : std::make_shared<MemoryStorage>()) {}

std::optional<std::uint64_t> ReplicaHost::HighestSeq() { return wal_->HighestSeq(); }

std::size_t ReplicaHost::PushRecords(ByteView records) {
  std::lock_guard<std::mutex> l(mu_);
  ByteReader reader(records);
  std::size_t applied = 0;
  while (!reader.empty()) {
    auto rec = TryDecodeWalRecord(reader);
    if (!rec) Fail(ErrorCode::kChecksumMismatch, "corrupt shipped WAL record");
    auto have = wal_->HighestSeq();
    if (have && rec->seq > *have + 1) {
      Fail(ErrorCode::kTransportFailure, "gap in shipped WAL at seq " + std::to_string(rec->seq));
    }
    if (wal_->size() >= wal_->capacity()) {
      Checkpoint cp;
      cp.through_seq = have;
      cp.entries = store_->WarehouseSnapshot();
      checkpoint_storage_->Replace(EncodeCheckpoint(cp));
      if (have) wal_->MarkCheckpointed(*have);
    }
    if (wal_->AppendShipped(*rec)) {
      store_->InstallResult(rec->signature, rec->after);
      ++applied;
    }
  }
  return applied;
}

}  // namespace edupipe
