// Copyright 2026 The Speechprint Authors. All Rights Reserved.
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


#include "speechprint/server.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <utility>

#include "speechprint/bytes.h"
#include "speechprint/errors.h"
#include "speechprint/log.h"

namespace speechprint {
namespace {

bool KnownOpcode(uint8_t op) {
  switch (static_cast<Opcode>(op)) {
    case Opcode::kAudioChunk:
    case Opcode::kEnd:
    case Opcode::kResult:
    case Opcode::kError:
      return true;
  }
  return false;
}

// Reads exactly n bytes. Returns false on end of stream before the first
// byte; a partial read throws ProtocolError.
bool ReadExact(int fd, uint8_t* out, size_t n) {
  size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, out + got, n - got, 0);
    if (r == 0) {
      if (got == 0) return false;
      throw ProtocolError("connection closed inside a frame");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("recv failed: ") + std::strerror(errno));
    }
    got += static_cast<size_t>(r);
  }
  return true;
}

std::vector<uint8_t> ErrorPayload(std::string_view message) {
  return {message.begin(), message.end()};
}

}  // namespace

std::vector<uint8_t> EncodeFrame(Opcode opcode, std::span<const uint8_t> payload) {
  if (payload.size() > kMaxFramePayload) throw ProtocolError("frame too large");
  ByteWriter w;
  w.U32(static_cast<uint32_t>(payload.size()));
  w.U8(static_cast<uint8_t>(opcode));
  w.Raw(payload);
  return w.Take();
}

std::vector<uint8_t> EncodeResultPayload(const IdentifyOutcome& outcome) {
  ByteWriter w;
  w.U8(static_cast<uint8_t>(outcome.status));
  w.U64(outcome.file_id);
  w.U64(outcome.label_id);
  w.F32(static_cast<float>(outcome.confidence));
  return w.Take();
}

IdentifyOutcome DecodeResultPayload(std::span<const uint8_t> payload) {
  if (payload.size() != kResultPayloadBytes) {
    throw ProtocolError("RESULT payload must be 21 bytes");
  }
  ByteReader<ProtocolError> r(payload);
  IdentifyOutcome out;
  const uint8_t status = r.U8();
  if (status > static_cast<uint8_t>(OutcomeStatus::kError)) {
    throw ProtocolError("unknown RESULT status");
  }
  out.status = static_cast<OutcomeStatus>(status);
  out.file_id = r.U64();
  out.label_id = r.U64();
  out.confidence = r.F32();
  return out;
}

std::optional<Frame> ReadFrame(int fd) {
  uint8_t header[5];
  if (!ReadExact(fd, header, sizeof(header))) return std::nullopt;
  ByteReader<ProtocolError> r(header);
  const uint32_t length = r.U32();
  const uint8_t op = r.U8();
  if (!KnownOpcode(op)) throw ProtocolError("unknown opcode");
  if (length > kMaxFramePayload) throw ProtocolError("frame too large");
  Frame f;
  f.opcode = static_cast<Opcode>(op);
  f.payload.resize(length);
  if (length > 0 && !ReadExact(fd, f.payload.data(), length)) {
    throw ProtocolError("connection closed inside a frame");
  }
  return f;
}

void WriteAll(int fd, std::span<const uint8_t> bytes) {
  size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t w = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("send failed: ") + std::strerror(errno));
    }
    sent += static_cast<size_t>(w);
  }
}

void WriteFrame(int fd, Opcode opcode, std::span<const uint8_t> payload) {
  WriteAll(fd, EncodeFrame(opcode, payload));
}

QueryBatcher::QueryBatcher(const Engine& engine, std::chrono::microseconds window)
    : engine_(engine), window_(window), worker_([this] { Loop(); }) {}

QueryBatcher::~QueryBatcher() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

QueryResult QueryBatcher::Query(const std::vector<SubFingerprint>& subs) {
  auto pending = std::make_unique<Pending>();
  pending->subs = subs;
  auto future = pending->result.get_future();
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (stop_) return engine_.Query(subs);
    queue_.push_back(std::move(pending));
  }
  cv_.notify_all();
  return future.get();
}

size_t QueryBatcher::batches_run() const {
  std::lock_guard<std::mutex> lock(mu_);
  return batches_;
}

size_t QueryBatcher::queries_run() const {
  std::lock_guard<std::mutex> lock(mu_);
  return queries_;
}

void QueryBatcher::Loop() {
  std::unique_lock<std::mutex> lock(mu_);
  while (true) {
    cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
    if (queue_.empty()) return;  // stopping
    const auto deadline = std::chrono::steady_clock::now() + window_;
    cv_.wait_until(lock, deadline, [this] { return stop_; });
    auto batch = std::move(queue_);
    queue_.clear();
    ++batches_;
    queries_ += batch.size();
    lock.unlock();

    std::vector<std::vector<SubFingerprint>> queries;
    queries.reserve(batch.size());
    for (auto& p : batch) queries.push_back(std::move(p->subs));
    try {
      auto results = engine_.QueryBatch(queries);
      for (size_t i = 0; i < batch.size(); ++i) {
        batch[i]->result.set_value(std::move(results[i]));
      }
    } catch (...) {
      for (auto& p : batch) p->result.set_exception(std::current_exception());
    }
    lock.lock();
  }
}

Server::Server(Engine& engine, ServerOptions options)
    : engine_(engine), options_(std::move(options)) {
  options_.session.Validate();
  if (!options_.labeler) options_.labeler = std::make_shared<PendingLabeler>();
  batcher_ = std::make_unique<QueryBatcher>(engine_, options_.batch_window);
}

Server::~Server() { Stop(); }

void Server::Start() {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(options_.port);
  if (::getaddrinfo(options_.host.c_str(), port.c_str(), &hints, &res) != 0 || !res) {
    throw IoError("cannot resolve " + options_.host);
  }
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    throw IoError("socket() failed");
  }
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(fd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd, 128) != 0) {
    const std::string why = std::strerror(errno);
    ::freeaddrinfo(res);
    ::close(fd);
    throw IoError("cannot listen on " + options_.host + ":" + port + ": " + why);
  }
  ::freeaddrinfo(res);
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  listen_fd_ = fd;
  accept_thread_ = std::thread([this] { AcceptLoop(); });
}

void Server::AcceptLoop() {
  while (true) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      std::lock_guard<std::mutex> lock(mu_);
      if (!stopping_) LogWarning(std::string("accept failed: ") + std::strerror(errno));
      return;
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    ReapFinished();
    std::lock_guard<std::mutex> lock(mu_);
    if (stopping_) {
      ::close(fd);
      return;
    }
    sessions_.emplace_back();
    Session* s = &sessions_.back();
    s->fd = fd;
    s->thread = std::thread([this, s] { Serve(s); });
  }
}

void Server::ReapFinished() {
  std::list<Session> finished;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (it->done) {
        auto next = std::next(it);
        finished.splice(finished.end(), sessions_, it);
        it = next;
      } else {
        ++it;
      }
    }
  }
  for (auto& s : finished) s.thread.join();
}

void Server::Serve(Session* session) {
  const int fd = session->fd;
  IdentifySession id_session(
      engine_, options_.session,
      [this](const std::vector<SubFingerprint>& subs) { return batcher_->Query(subs); });
  bool answered = false;
  auto answer = [&](const IdentifyOutcome& out) {
    if (out.status == OutcomeStatus::kError) {
      WriteFrame(fd, Opcode::kError, ErrorPayload(out.error));
    } else {
      WriteFrame(fd, Opcode::kResult, EncodeResultPayload(out));
    }
    answered = true;
    return out.status != OutcomeStatus::kError;
  };
  try {
    while (true) {
      auto frame = ReadFrame(fd);
      if (!frame) break;  // peer went away or the server is stopping
      if (frame->opcode == Opcode::kAudioChunk) {
        if (answered) continue;
        if (auto out = id_session.Feed(frame->payload)) {
          if (!answer(*out)) break;
        }
      } else if (frame->opcode == Opcode::kEnd) {
        if (!answered) answer(id_session.Finish(*options_.labeler));
        break;
      } else {
        throw ProtocolError("clients may only send AUDIO_CHUNK and END");
      }
    }
  } catch (const ProtocolError& e) {
    try {
      WriteFrame(fd, Opcode::kError, ErrorPayload(e.what()));
    } catch (const Error&) {
    }
  } catch (const Error& e) {
    LogWarning(std::string("session failed: ") + e.what());
  }
  ::shutdown(fd, SHUT_WR);
  ::close(fd);
  std::lock_guard<std::mutex> lock(mu_);
  session->fd = -1;
  session->done = true;
  ++served_;
}

void Server::Stop() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (stopping_) return;
    stopping_ = true;
    if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
    // Sessions see end of input at their next read; work already under way
    // (an enrollment included) runs to completion first.
    for (auto& s : sessions_) {
      if (s.fd >= 0) ::shutdown(s.fd, SHUT_RD);
    }
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  std::list<Session> all;
  {
    std::lock_guard<std::mutex> lock(mu_);
    all.splice(all.end(), sessions_);
  }
  for (auto& s : all) s.thread.join();
}

size_t Server::sessions_served() const {
  std::lock_guard<std::mutex> lock(mu_);
  return served_;
}

int ConnectTcp(const std::string& host, uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || !res) {
    throw IoError("cannot resolve " + host);
  }
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0 || ::connect(fd, res->ai_addr, res->ai_addrlen) != 0) {
    const std::string why = std::strerror(errno);
    ::freeaddrinfo(res);
    if (fd >= 0) ::close(fd);
    throw IoError("cannot connect to " + host + ":" + service + ": " + why);
  }
  ::freeaddrinfo(res);
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

IdentifyOutcome ClientIdentify(const std::string& host, uint16_t port,
                               std::span<const uint8_t> wav, size_t chunk_bytes) {
  if (chunk_bytes == 0) throw ConfigError("chunk size must be positive");
  const int fd = ConnectTcp(host, port);
  auto to_outcome = [](const std::optional<Frame>& f) {
    if (!f) throw ProtocolError("server closed without answering");
    if (f->opcode == Opcode::kResult) return DecodeResultPayload(f->payload);
    IdentifyOutcome out;
    out.status = OutcomeStatus::kError;
    if (f->opcode == Opcode::kError) {
      out.error.assign(f->payload.begin(), f->payload.end());
    } else {
      out.error = "unexpected frame from server";
    }
    return out;
  };
  IdentifyOutcome result;
  try {
    std::optional<Frame> early;
    for (size_t pos = 0; pos < wav.size() && !early; pos += chunk_bytes) {
      pollfd p{fd, POLLIN, 0};
      if (::poll(&p, 1, 0) > 0) {
        early = ReadFrame(fd);
        break;
      }
      try {
        WriteFrame(fd, Opcode::kAudioChunk,
                   wav.subspan(pos, std::min(chunk_bytes, wav.size() - pos)));
      } catch (const IoError&) {
        // The server answered and closed; its frame is still readable.
        early = ReadFrame(fd);
        if (!early) throw;
      }
    }
    if (early) {
      result = to_outcome(early);
      try {
        WriteFrame(fd, Opcode::kEnd, {});
      } catch (const IoError&) {
      }
    } else {
      WriteFrame(fd, Opcode::kEnd, {});
      result = to_outcome(ReadFrame(fd));
    }
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  return result;
}

}  // namespace speechprint
