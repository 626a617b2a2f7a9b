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


// Streaming identification over TCP. A frame is a little-endian u32 payload
// length, a u8 opcode and the payload. Clients send AUDIO_CHUNK frames of
// WAV bytes and END; the server answers with one RESULT or ERROR frame and
// closes the connection.

#ifndef SPEECHPRINT_SERVER_H_
#define SPEECHPRINT_SERVER_H_

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <future>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "speechprint/pipeline.h"

namespace speechprint {

enum class Opcode : uint8_t {
  kAudioChunk = 0x01,
  kEnd = 0x02,
  kResult = 0x10,
  kError = 0x11,
};

inline constexpr uint32_t kMaxFramePayload = 16u << 20;
inline constexpr size_t kResultPayloadBytes = 1 + 8 + 8 + 4;

struct Frame {
  Opcode opcode = Opcode::kError;
  std::vector<uint8_t> payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

std::vector<uint8_t> EncodeFrame(Opcode opcode, std::span<const uint8_t> payload);

// RESULT payload: status u8, file_id u64, label_id u64, confidence f32.
std::vector<uint8_t> EncodeResultPayload(const IdentifyOutcome& outcome);
// Throws ProtocolError on a malformed payload.
IdentifyOutcome DecodeResultPayload(std::span<const uint8_t> payload);

// Blocking frame I/O on a connected socket. ReadFrame returns nullopt on a
// clean end of stream before any header byte and throws ProtocolError on an
// unknown opcode, an oversized length or a truncated frame; IoError on
// socket failure.
std::optional<Frame> ReadFrame(int fd);
void WriteFrame(int fd, Opcode opcode, std::span<const uint8_t> payload);
void WriteAll(int fd, std::span<const uint8_t> bytes);

// Collects queries for up to `window` after the first one arrives and runs
// them as a single Engine::QueryBatch.
class QueryBatcher {
 public:
  QueryBatcher(const Engine& engine, std::chrono::microseconds window);
  ~QueryBatcher();

  QueryBatcher(const QueryBatcher&) = delete;
  QueryBatcher& operator=(const QueryBatcher&) = delete;

  // Blocks until the batch containing this query has run.
  QueryResult Query(const std::vector<SubFingerprint>& subs);

  size_t batches_run() const;
  size_t queries_run() const;

 private:
  struct Pending {
    std::vector<SubFingerprint> subs;
    std::promise<QueryResult> result;
  };
  void Loop();

  const Engine& engine_;
  const std::chrono::microseconds window_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::unique_ptr<Pending>> queue_;
  bool stop_ = false;
  size_t batches_ = 0;
  size_t queries_ = 0;
  std::thread worker_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  uint16_t port = 0;  // 0 picks a free port
  std::chrono::microseconds batch_window{20000};
  SessionOptions session;
  std::shared_ptr<Labeler> labeler = std::make_shared<PendingLabeler>();
};

class Server {
 public:
  Server(Engine& engine, ServerOptions options);
  ~Server();  // calls Stop()

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts accepting in a background thread. Throws IoError.
  void Start();
  uint16_t port() const { return port_; }

  // Stops accepting, lets every open session finish what it is doing
  // (including an enrollment in progress) and joins all threads.
  void Stop();

  size_t sessions_served() const;
  const QueryBatcher& batcher() const { return *batcher_; }

 private:
  struct Session {
    int fd = -1;
    std::thread thread;
    bool done = false;
  };
  void AcceptLoop();
  void Serve(Session* session);
  void ReapFinished();

  Engine& engine_;
  ServerOptions options_;
  std::unique_ptr<QueryBatcher> batcher_;
  int listen_fd_ = -1;
  uint16_t port_ = 0;
  std::thread accept_thread_;
  mutable std::mutex mu_;
  std::list<Session> sessions_;
  size_t served_ = 0;
  bool stopping_ = false;
};

// Connects, streams `wav` in `chunk_bytes` frames followed by END and waits
// for the answer. The server may answer before END; remaining chunks are
// then not sent. An ERROR frame becomes an kError outcome.
IdentifyOutcome ClientIdentify(const std::string& host, uint16_t port,
                               std::span<const uint8_t> wav, size_t chunk_bytes);

// Opens a TCP connection; throws IoError.
int ConnectTcp(const std::string& host, uint16_t port);

}  // namespace speechprint

#endif  // SPEECHPRINT_SERVER_H_
