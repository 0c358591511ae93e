#pragma once

// JSON-lines tagging protocol.
//
//   request:  {"id": <uint64>, "tokens": ["türkiye","nin",...]}
//   response: {"id": <uint64>, "punct": ["apostrophe",...], "caps": ["One",...]}
//   error:    {"id": <uint64>, "error": "<message>"}
//
// One object per LF-terminated line; unknown fields are ignored. A server
// answers every request id exactly once; unparseable lines get an error
// object with id 0.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "noktalama/labels.hpp"
#include "noktalama/tagger.hpp"
#include "noktalama/tokenizer.hpp"

namespace noktalama {

struct WireRequest {
  std::uint64_t id = 0;
  std::vector<std::string> tokens;
};

struct WireResponse {
  std::uint64_t id = 0;
  std::optional<Prediction> prediction;
  std::optional<std::string> error;
};

std::string encode_request(std::uint64_t id, std::span<const std::string> tokens);
std::string encode_response(std::uint64_t id, const Prediction& prediction);
std::string encode_error(std::uint64_t id, std::string_view message);

/// Both throw ProtocolError on malformed lines.
WireRequest decode_request(std::string_view line);
WireResponse decode_response(std::string_view line);

/// "tcp://host:port", "host:port" or "exec:<shell command>" (stdio pipe).
struct Endpoint {
  enum class Kind { Tcp, Command };
  Kind kind = Kind::Tcp;
  std::string host;
  std::uint16_t port = 0;
  std::string command;

  /// Throws InvalidArgument.
  static Endpoint parse(std::string_view spec);
  std::string to_string() const;
};

struct ClientOptions {
  /// Longest wait without any progress, including connection setup.
  std::chrono::milliseconds timeout{30000};
  std::size_t max_in_flight = 256;
};

/// One connection to a tagging server. Not thread-safe; use one per worker.
class ProtocolClient {
 public:
  /// Connects (retrying refused TCP connections) until options.timeout
  /// elapses, then throws Timeout.
  ProtocolClient(const Endpoint& endpoint, ClientOptions options = {});
  ~ProtocolClient();
  ProtocolClient(ProtocolClient&&) noexcept;
  ProtocolClient& operator=(ProtocolClient&&) noexcept;

  /// Pipelines one request per sequence and matches responses by id.
  /// Throws ProtocolError, Timeout or LengthMismatch(id).
  std::vector<Prediction> predict_batch(const std::vector<std::vector<std::string>>& batch);

 private:
  class Connection;
  std::unique_ptr<Connection> connection_;
  ClientOptions options_;
  std::uint64_t next_id_ = 1;
};

/// Opens a connection, runs one batch and closes it.
std::vector<Prediction> external_predict_batch(
    const Endpoint& endpoint, const std::vector<std::vector<std::string>>& batch,
    ClientOptions options = {});

/// TaggerBackend view of a remote server. Keeps one lazily opened connection.
class ExternalBackend final : public TaggerBackend {
 public:
  ExternalBackend(Endpoint endpoint, ClientOptions options = {},
                  std::size_t max_length = kDefaultMaxLen, std::string name = "");
  ~ExternalBackend() override;

  std::string model_name() const override { return name_; }
  std::size_t max_length() const override { return max_length_; }
  Prediction predict(std::span<const Token> tokens) const override;
  std::vector<Prediction> predict_batch(
      const std::vector<std::vector<Token>>& batch) const override;

 private:
  Endpoint endpoint_;
  ClientOptions options_;
  std::size_t max_length_;
  std::string name_;
  mutable std::mutex mutex_;
  mutable std::unique_ptr<ProtocolClient> client_;
};

/// Answers one request line with `backend`. Token surfaces are mapped to ids
/// through `vocab` when given (unknown surfaces get the unk id).
std::string handle_request_line(std::string_view line, const TaggerBackend& backend,
                                const Vocab* vocab);

/// Serves requests read from `in_fd` until EOF, writing replies to `out_fd`.
void serve_stream(int in_fd, int out_fd, const TaggerBackend& backend, const Vocab* vocab);

/// TCP server on 127.0.0.1 running on a background thread; each connection
/// is served sequentially on its own thread.
class LoopbackServer {
 public:
  LoopbackServer(const TaggerBackend& backend, const Vocab* vocab, std::uint16_t port = 0);
  ~LoopbackServer();
  LoopbackServer(const LoopbackServer&) = delete;
  LoopbackServer& operator=(const LoopbackServer&) = delete;

  std::uint16_t port() const { return port_; }
  Endpoint endpoint() const;
  /// Blocks until stop() or destruction.
  void wait();
  void stop();

 private:
  void accept_loop();

  const TaggerBackend& backend_;
  const Vocab* vocab_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex workers_mutex_;
  std::vector<std::thread> workers_;
  std::vector<int> client_fds_;
};

}  // namespace noktalama
