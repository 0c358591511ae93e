#include "noktalama/protocol.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <map>

#include <json.hpp>

#include "noktalama/error.hpp"

namespace noktalama {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------------------
// Messages

std::string encode_request(std::uint64_t id, std::span<const std::string> tokens) {
  ordered_json j;
  j["id"] = id;
  j["tokens"] = std::vector<std::string>(tokens.begin(), tokens.end());
  return j.dump();
}

std::string encode_response(std::uint64_t id, const Prediction& prediction) {
  ordered_json j;
  j["id"] = id;
  ordered_json punct = ordered_json::array();
  for (PunctLabel l : prediction.punct) punct.push_back(to_string(l));
  ordered_json caps = ordered_json::array();
  for (CapTag c : prediction.caps) caps.push_back(to_string(c));
  j["punct"] = std::move(punct);
  j["caps"] = std::move(caps);
  return j.dump();
}

std::string encode_error(std::uint64_t id, std::string_view message) {
  ordered_json j;
  j["id"] = id;
  j["error"] = std::string(message);
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

namespace {

json parse_object(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("message is not a JSON object");
  return j;
}

std::uint64_t parse_id(const json& j) {
  const auto it = j.find("id");
  if (it == j.end() || !it->is_number_unsigned()) {
    if (it != j.end() && it->is_number_integer() && it->get<std::int64_t>() >= 0) {
      return it->get<std::uint64_t>();
    }
    throw ProtocolError("missing or invalid \"id\"");
  }
  return it->get<std::uint64_t>();
}

std::vector<std::string> string_array(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array()) {
    throw ProtocolError(std::string("missing or invalid \"") + key + "\"");
  }
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_string()) throw ProtocolError(std::string("non-string entry in \"") + key + "\"");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

WireRequest decode_request(std::string_view line) {
  const json j = parse_object(line);
  WireRequest r;
  r.id = parse_id(j);
  r.tokens = string_array(j, "tokens");
  return r;
}

WireResponse decode_response(std::string_view line) {
  const json j = parse_object(line);
  WireResponse r;
  r.id = parse_id(j);
  if (const auto err = j.find("error"); err != j.end()) {
    r.error = err->is_string() ? err->get<std::string>() : err->dump();
    return r;
  }
  Prediction p;
  for (const std::string& s : string_array(j, "punct")) {
    const auto l = parse_punct_label(s);
    if (!l) throw ProtocolError("unknown punctuation label '" + s + "'");
    p.punct.push_back(*l);
  }
  for (const std::string& s : string_array(j, "caps")) {
    const auto c = parse_cap_tag(s);
    if (!c) throw ProtocolError("unknown capitalization label '" + s + "'");
    p.caps.push_back(*c);
  }
  r.prediction = std::move(p);
  return r;
}

Endpoint Endpoint::parse(std::string_view spec) {
  Endpoint e;
  if (spec.rfind("exec:", 0) == 0) {
    e.kind = Kind::Command;
    e.command = std::string(spec.substr(5));
    if (e.command.empty()) throw InvalidArgument("empty command in endpoint");
    return e;
  }
  if (spec.rfind("tcp://", 0) == 0) spec.remove_prefix(6);
  const auto colon = spec.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw InvalidArgument("endpoint must be host:port, tcp://host:port or exec:<command>");
  }
  e.kind = Kind::Tcp;
  e.host = std::string(spec.substr(0, colon));
  const std::string_view port = spec.substr(colon + 1);
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc() || ptr != port.data() + port.size() || value == 0 || value > 65535) {
    throw InvalidArgument("invalid port in endpoint '" + std::string(spec) + "'");
  }
  e.port = static_cast<std::uint16_t>(value);
  return e;
}

std::string Endpoint::to_string() const {
  if (kind == Kind::Command) return "exec:" + command;
  return "tcp://" + host + ":" + std::to_string(port);
}

// ---------------------------------------------------------------------------
// Client

namespace {

void set_nonblocking(int fd) {
  const int flags = fcntl(fd, F_GETFL, 0);
  fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

int remaining_ms(Clock::time_point deadline) {
  const auto left =
      std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left <= 0 ? 0 : static_cast<int>(left);
}

int connect_tcp(const Endpoint& ep, std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  std::string last_error = "timed out";
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  while (true) {
    addrinfo* res = nullptr;
    const int rc = getaddrinfo(ep.host.c_str(), std::to_string(ep.port).c_str(), &hints, &res);
    if (rc != 0) {
      last_error = gai_strerror(rc);
    } else {
      for (addrinfo* a = res; a; a = a->ai_next) {
        const int fd = socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
        if (fd < 0) continue;
        set_nonblocking(fd);
        int status = connect(fd, a->ai_addr, a->ai_addrlen);
        if (status < 0 && errno == EINPROGRESS) {
          pollfd p{fd, POLLOUT, 0};
          if (poll(&p, 1, remaining_ms(deadline)) > 0) {
            int err = 0;
            socklen_t len = sizeof(err);
            getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
            status = err == 0 ? 0 : -1;
            errno = err;
          } else {
            errno = ETIMEDOUT;
          }
        }
        if (status == 0) {
          freeaddrinfo(res);
          return fd;
        }
        last_error = std::strerror(errno);
        close(fd);
      }
      freeaddrinfo(res);
    }
    if (remaining_ms(deadline) == 0) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(std::min(50, remaining_ms(deadline))));
  }
  throw Timeout("timed out connecting to " + ep.to_string() + " within " +
                std::to_string(timeout.count()) + " ms (" + last_error + ")");
}

}  // namespace

class ProtocolClient::Connection {
 public:
  Connection(const Endpoint& ep, std::chrono::milliseconds timeout) : endpoint_(ep) {
    if (ep.kind == Endpoint::Kind::Tcp) {
      read_fd_ = write_fd_ = connect_tcp(ep, timeout);
      is_socket_ = true;
      return;
    }
    signal(SIGPIPE, SIG_IGN);
    int to_child[2];
    int from_child[2];
    if (pipe2(to_child, O_CLOEXEC) != 0 || pipe2(from_child, O_CLOEXEC) != 0) {
      throw BackendUnavailable(std::string("pipe: ") + std::strerror(errno));
    }
    child_ = fork();
    if (child_ < 0) throw BackendUnavailable(std::string("fork: ") + std::strerror(errno));
    if (child_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      execl("/bin/sh", "sh", "-c", ep.command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    set_nonblocking(write_fd_);
    set_nonblocking(read_fd_);
  }

  ~Connection() {
    if (is_socket_) {
      close(read_fd_);
      return;
    }
    if (write_fd_ >= 0) close(write_fd_);
    if (read_fd_ >= 0) close(read_fd_);
    if (child_ > 0) {
      for (int i = 0; i < 50; ++i) {
        if (waitpid(child_, nullptr, WNOHANG) == child_) return;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      kill(child_, SIGKILL);
      waitpid(child_, nullptr, 0);
    }
  }

  /// Writes `out` while collecting `want` response lines.
  std::vector<std::string> exchange(std::string out, std::size_t want,
                                    std::chrono::milliseconds timeout) {
    std::vector<std::string> lines;
    std::size_t written = 0;
    char chunk[65536];
    while (lines.size() < want) {
      pollfd fds[2];
      nfds_t n = 0;
      fds[n++] = {read_fd_, POLLIN, 0};
      const bool pending = written < out.size();
      if (pending && write_fd_ != read_fd_) {
        fds[n++] = {write_fd_, POLLOUT, 0};
      } else if (pending) {
        fds[0].events |= POLLOUT;
      }
      const int rc = poll(fds, n, static_cast<int>(timeout.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError(std::string("poll: ") + std::strerror(errno));
      }
      if (rc == 0) {
        throw Timeout("timed out waiting for " + endpoint_.to_string() + " within " +
                      std::to_string(timeout.count()) + " ms (" + std::to_string(lines.size()) +
                      " of " + std::to_string(want) + " responses received)");
      }
      if (pending) {
        const short revents = write_fd_ == read_fd_ ? fds[0].revents : fds[1].revents;
        if (revents & (POLLOUT | POLLERR | POLLHUP)) {
          const ssize_t k = is_socket_
                                ? send(write_fd_, out.data() + written, out.size() - written,
                                       MSG_NOSIGNAL)
                                : write(write_fd_, out.data() + written, out.size() - written);
          if (k < 0 && errno != EAGAIN && errno != EINTR) {
            throw ProtocolError("write to " + endpoint_.to_string() +
                                " failed: " + std::strerror(errno));
          }
          if (k > 0) written += static_cast<std::size_t>(k);
        }
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        const ssize_t k = read(read_fd_, chunk, sizeof(chunk));
        if (k == 0) {
          throw ProtocolError("connection closed by " + endpoint_.to_string() + " after " +
                              std::to_string(lines.size()) + " of " + std::to_string(want) +
                              " responses");
        }
        if (k < 0) {
          if (errno == EAGAIN || errno == EINTR) continue;
          throw ProtocolError("read from " + endpoint_.to_string() +
                              " failed: " + std::strerror(errno));
        }
        buffer_.append(chunk, static_cast<std::size_t>(k));
        std::size_t pos;
        while ((pos = buffer_.find('\n')) != std::string::npos) {
          lines.push_back(buffer_.substr(0, pos));
          buffer_.erase(0, pos + 1);
        }
      }
    }
    return lines;
  }

 private:
  Endpoint endpoint_;
  int read_fd_ = -1;
  int write_fd_ = -1;
  bool is_socket_ = false;
  pid_t child_ = -1;
  std::string buffer_;
};

ProtocolClient::ProtocolClient(const Endpoint& endpoint, ClientOptions options)
    : connection_(std::make_unique<Connection>(endpoint, options.timeout)), options_(options) {}

ProtocolClient::~ProtocolClient() = default;
ProtocolClient::ProtocolClient(ProtocolClient&&) noexcept = default;
ProtocolClient& ProtocolClient::operator=(ProtocolClient&&) noexcept = default;

std::vector<Prediction> ProtocolClient::predict_batch(
    const std::vector<std::vector<std::string>>& batch) {
  std::vector<Prediction> out(batch.size());
  const std::size_t window = std::max<std::size_t>(1, options_.max_in_flight);
  for (std::size_t begin = 0; begin < batch.size(); begin += window) {
    const std::size_t end = std::min(batch.size(), begin + window);
    std::map<std::uint64_t, std::size_t> pending;
    std::string payload;
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint64_t id = next_id_++;
      pending.emplace(id, i);
      payload += encode_request(id, batch[i]);
      payload += '\n';
    }
    const auto lines = connection_->exchange(std::move(payload), end - begin, options_.timeout);
    for (const std::string& line : lines) {
      const WireResponse r = decode_response(line);
      const auto it = pending.find(r.id);
      if (it == pending.end()) {
        if (r.error) throw ProtocolError("server error for id " + std::to_string(r.id) + ": " + *r.error);
        throw ProtocolError("unexpected or duplicate response id " + std::to_string(r.id));
      }
      if (r.error) throw ProtocolError("server error for id " + std::to_string(r.id) + ": " + *r.error);
      const std::size_t n = batch[it->second].size();
      if (r.prediction->punct.size() != n || r.prediction->caps.size() != n) {
        throw LengthMismatch(r.id, std::to_string(n) + " tokens but " +
                                       std::to_string(r.prediction->punct.size()) + " punct and " +
                                       std::to_string(r.prediction->caps.size()) + " caps labels");
      }
      out[it->second] = std::move(*r.prediction);
      pending.erase(it);
    }
  }
  return out;
}

std::vector<Prediction> external_predict_batch(const Endpoint& endpoint,
                                               const std::vector<std::vector<std::string>>& batch,
                                               ClientOptions options) {
  if (batch.empty()) return {};
  ProtocolClient client(endpoint, options);
  return client.predict_batch(batch);
}

namespace {

std::vector<std::string> surfaces(std::span<const Token> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) out.push_back(t.surface);
  return out;
}

}  // namespace

ExternalBackend::ExternalBackend(Endpoint endpoint, ClientOptions options,
                                 std::size_t max_length, std::string name)
    : endpoint_(std::move(endpoint)),
      options_(options),
      max_length_(max_length),
      name_(name.empty() ? endpoint_.to_string() : std::move(name)) {}

ExternalBackend::~ExternalBackend() = default;

Prediction ExternalBackend::predict(std::span<const Token> tokens) const {
  check_length(tokens.size());
  return predict_batch({std::vector<Token>(tokens.begin(), tokens.end())}).front();
}

std::vector<Prediction> ExternalBackend::predict_batch(
    const std::vector<std::vector<Token>>& batch) const {
  std::vector<std::vector<std::string>> wire;
  wire.reserve(batch.size());
  for (const auto& tokens : batch) {
    check_length(tokens.size());
    wire.push_back(surfaces(tokens));
  }
  if (wire.empty()) return {};
  const std::lock_guard lock(mutex_);
  if (!client_) client_ = std::make_unique<ProtocolClient>(endpoint_, options_);
  try {
    return client_->predict_batch(wire);
  } catch (...) {
    client_.reset();  // the stream may hold stale replies
    throw;
  }
}

// ---------------------------------------------------------------------------
// Server

std::string handle_request_line(std::string_view line, const TaggerBackend& backend,
                                const Vocab* vocab) {
  std::uint64_t id = 0;
  try {
    const json j = parse_object(line);
    id = parse_id(j);
    const std::vector<std::string> surfaces = string_array(j, "tokens");
    if (surfaces.size() > backend.max_length()) {
      return encode_error(id, "length exceeded: " + std::to_string(surfaces.size()) +
                                  " tokens, limit " + std::to_string(backend.max_length()));
    }
    std::vector<Token> tokens;
    tokens.reserve(surfaces.size());
    std::size_t word = 0;
    for (std::size_t i = 0; i < surfaces.size(); ++i) {
      Token t;
      t.surface = surfaces[i];
      if (vocab) {
        t.is_continuation = t.surface.rfind(vocab->continuation_prefix(), 0) == 0;
        t.vocab_id = vocab->find(t.surface).value_or(vocab->unk_id());
      } else {
        t.is_continuation = t.surface.rfind("##", 0) == 0;
      }
      if (i > 0 && !t.is_continuation) ++word;
      t.word_index = word;
      tokens.push_back(std::move(t));
    }
    return encode_response(id, predict(backend, tokens));
  } catch (const std::exception& e) {
    return encode_error(id, e.what());
  }
}

namespace {

bool write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t k = send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (k < 0 && errno == ENOTSOCK) {
      const ssize_t w = write(fd, data.data(), data.size());
      if (w < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      data.remove_prefix(static_cast<std::size_t>(w));
      continue;
    }
    if (k < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(k));
  }
  return true;
}

}  // namespace

void serve_stream(int in_fd, int out_fd, const TaggerBackend& backend, const Vocab* vocab) {
  std::string buffer;
  char chunk[65536];
  while (true) {
    const ssize_t k = read(in_fd, chunk, sizeof(chunk));
    if (k < 0) {
      if (errno == EINTR) continue;
      return;
    }
    if (k == 0) break;
    buffer.append(chunk, static_cast<std::size_t>(k));
    std::size_t pos;
    std::string replies;
    while ((pos = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      replies += handle_request_line(line, backend, vocab);
      replies += '\n';
    }
    if (!replies.empty() && !write_all(out_fd, replies)) return;
  }
  if (!buffer.empty()) {
    write_all(out_fd, handle_request_line(buffer, backend, vocab) + "\n");
  }
}

LoopbackServer::LoopbackServer(const TaggerBackend& backend, const Vocab* vocab,
                               std::uint16_t port)
    : backend_(backend), vocab_(vocab) {
  listen_fd_ = socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      listen(listen_fd_, 16) != 0) {
    const std::string reason = std::strerror(errno);
    close(listen_fd_);
    throw IoError("cannot listen on 127.0.0.1:" + std::to_string(port) + ": " + reason);
  }
  socklen_t len = sizeof(addr);
  getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

LoopbackServer::~LoopbackServer() {
  stop();
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    const std::lock_guard lock(workers_mutex_);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
}

Endpoint LoopbackServer::endpoint() const {
  Endpoint e;
  e.kind = Endpoint::Kind::Tcp;
  e.host = "127.0.0.1";
  e.port = port_;
  return e;
}

void LoopbackServer::stop() {
  if (stopping_.exchange(true)) return;
  shutdown(listen_fd_, SHUT_RDWR);
  const std::lock_guard lock(workers_mutex_);
  for (int fd : client_fds_) shutdown(fd, SHUT_RDWR);
}

void LoopbackServer::wait() {
  if (acceptor_.joinable()) acceptor_.join();
}

void LoopbackServer::accept_loop() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int rc = poll(&p, 1, 100);
    if (rc <= 0) continue;
    const int fd = accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    const std::lock_guard lock(workers_mutex_);
    if (stopping_) {
      close(fd);
      break;
    }
    client_fds_.push_back(fd);
    workers_.emplace_back([this, fd] {
      serve_stream(fd, fd, backend_, vocab_);
      shutdown(fd, SHUT_RDWR);
      const std::lock_guard inner(workers_mutex_);
      std::erase(client_fds_, fd);
      close(fd);
    });
  }
  close(listen_fd_);
}

}  // namespace noktalama
