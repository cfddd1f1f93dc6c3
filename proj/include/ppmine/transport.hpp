#pragma once

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ppmine/errors.hpp"
#include "ppmine/message.hpp"

namespace ppmine::net {

inline constexpr std::size_t max_frame_bytes = 16 * 1024 * 1024;

class transport {
 public:
  virtual ~transport() = default;
  virtual void send(const protocol_message& msg) = 0;
  virtual std::optional<protocol_message> receive(
      const party_id& self, std::chrono::milliseconds timeout) = 0;
};

// In-process backend: one queue per registered party, a single lock, and a
// global append-only audit of every message in send order.  Every send goes
// through the wire codec so both backends exercise identical serialization.
class loopback_transport final : public transport {
 public:
  void register_endpoint(const party_id& p) {
    std::lock_guard lk(mu_);
    queues_[p];  // default-construct the inbox
  }

  void send(const protocol_message& msg) override {
    std::string frame = encode_frame(msg);
    if (frame.size() > max_frame_bytes)
      throw transport_error("frame exceeds " +
                            std::to_string(max_frame_bytes) + " bytes");
    protocol_message wired = decode_frame(frame);
    std::lock_guard lk(mu_);
    auto it = queues_.find(wired.to);
    if (it == queues_.end())
      throw routing_error("no endpoint registered for " + to_string(wired.to));
    audit_.push_back(wired);
    it->second.push_back(std::move(wired));
    cv_.notify_all();
  }

  std::optional<protocol_message> receive(
      const party_id& self, std::chrono::milliseconds timeout) override {
    std::unique_lock lk(mu_);
    auto it = queues_.find(self);
    if (it == queues_.end())
      throw routing_error("no endpoint registered for " + to_string(self));
    if (!cv_.wait_for(lk, timeout, [&] { return !it->second.empty(); }))
      return std::nullopt;
    protocol_message msg = std::move(it->second.front());
    it->second.pop_front();
    return msg;
  }

  std::vector<protocol_message> audit() const {
    std::lock_guard lk(mu_);
    return audit_;
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<party_id, std::deque<protocol_message>> queues_;
  std::vector<protocol_message> audit_;
};

struct tcp_options {
  int connect_retries = 40;
  std::chrono::milliseconds retry_delay{250};
};

namespace detail {

inline int connect_once(const std::string& host, const std::string& port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0) return -1;
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  freeaddrinfo(res);
  return fd;
}

inline void split_host_port(const std::string& addr, std::string& host,
                            std::string& port) {
  std::size_t colon = addr.rfind(':');
  if (colon == std::string::npos || colon + 1 == addr.size())
    throw invalid_input("address must be host:port, got '" + addr + "'");
  host = addr.substr(0, colon);
  port = addr.substr(colon + 1);
}

inline bool write_all(int fd, const char* data, std::size_t len) {
  std::size_t sent = 0;
  while (sent < len) {
    ssize_t n = ::send(fd, data + sent, len - sent, MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && (errno == EINTR)) continue;
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace detail

// One listening socket per party; one persistent outbound connection per
// destination; newline-delimited frames capped at max_frame_bytes.  Messages
// to self bypass the socket layer but are still logged.
class tcp_transport final : public transport {
 public:
  tcp_transport(party_id self, const std::string& bind_addr,
                std::map<party_id, std::string> address_book,
                tcp_options options = {})
      : self_(self), book_(std::move(address_book)), opt_(options) {
    std::string host, port;
    detail::split_host_port(bind_addr, host, port);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.empty() ? nullptr : host.c_str(), port.c_str(),
                    &hints, &res) != 0)
      throw transport_error("cannot resolve bind address " + bind_addr);
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      listen_fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (listen_fd_ < 0) continue;
      int one = 1;
      setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
      if (::bind(listen_fd_, ai->ai_addr, ai->ai_addrlen) == 0 &&
          ::listen(listen_fd_, 64) == 0)
        break;
      ::close(listen_fd_);
      listen_fd_ = -1;
    }
    freeaddrinfo(res);
    if (listen_fd_ < 0)
      throw transport_error("cannot listen on " + bind_addr);
    acceptor_ = std::thread([this] { accept_loop(); });
  }

  ~tcp_transport() override {
    stopping_ = true;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    {
      std::lock_guard lk(mu_);
      for (auto& [_, fd] : out_conns_) {
        ::shutdown(fd, SHUT_RDWR);
        ::close(fd);
      }
      out_conns_.clear();
      for (int fd : in_conns_) ::shutdown(fd, SHUT_RDWR);
    }
    if (acceptor_.joinable()) acceptor_.join();
    for (auto& t : readers_)
      if (t.joinable()) t.join();
    std::lock_guard lk(mu_);
    for (int fd : in_conns_) ::close(fd);
    in_conns_.clear();
  }

  void send(const protocol_message& msg) override {
    std::string frame = encode_frame(msg);
    if (frame.size() > max_frame_bytes)
      throw transport_error("frame exceeds " +
                            std::to_string(max_frame_bytes) + " bytes");
    if (msg.to == self_) {
      std::lock_guard lk(mu_);
      sent_audit_.push_back(msg);
      inbox_.push_back(decode_frame(frame));
      cv_.notify_all();
      return;
    }
    auto addr_it = book_.find(msg.to);
    if (addr_it == book_.end())
      throw routing_error("no address for " + to_string(msg.to));
    std::lock_guard lk(send_mu_);
    int fd = outbound_fd(msg.to, addr_it->second);
    if (!detail::write_all(fd, frame.data(), frame.size())) {
      close_outbound(msg.to);
      throw transport_error("write to " + to_string(msg.to) + " failed");
    }
    std::lock_guard lk2(mu_);
    sent_audit_.push_back(msg);
  }

  std::optional<protocol_message> receive(
      const party_id& self, std::chrono::milliseconds timeout) override {
    if (self != self_)
      throw routing_error("transport bound to " + to_string(self_) +
                          ", receive asked for " + to_string(self));
    std::unique_lock lk(mu_);
    if (!cv_.wait_for(lk, timeout, [&] { return !inbox_.empty(); }))
      return std::nullopt;
    protocol_message msg = std::move(inbox_.front());
    inbox_.pop_front();
    return msg;
  }

  std::vector<protocol_message> sent_audit() const {
    std::lock_guard lk(mu_);
    return sent_audit_;
  }

 private:
  int outbound_fd(const party_id& to, const std::string& addr) {
    {
      std::lock_guard lk(mu_);
      auto it = out_conns_.find(to);
      if (it != out_conns_.end()) return it->second;
    }
    std::string host, port;
    detail::split_host_port(addr, host, port);
    int fd = -1;
    int attempts = 0;
    while (fd < 0) {
      fd = detail::connect_once(host, port);
      if (fd >= 0) break;
      if (++attempts > opt_.connect_retries)
        throw transport_error("cannot connect to " + to_string(to) + " at " +
                              addr + " after " + std::to_string(attempts - 1) +
                              " retries");
      std::this_thread::sleep_for(opt_.retry_delay);
    }
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lk(mu_);
    out_conns_[to] = fd;
    return fd;
  }

  void close_outbound(const party_id& to) {
    std::lock_guard lk(mu_);
    auto it = out_conns_.find(to);
    if (it != out_conns_.end()) {
      ::close(it->second);
      out_conns_.erase(it);
    }
  }

  void accept_loop() {
    for (;;) {
      int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) {
        if (stopping_) return;
        if (errno == EINTR) continue;
        return;
      }
      std::lock_guard lk(mu_);
      if (stopping_) {
        ::close(fd);
        return;
      }
      in_conns_.push_back(fd);
      readers_.emplace_back([this, fd] { read_loop(fd); });
    }
  }

  void read_loop(int fd) {
    std::string buffer;
    char chunk[65536];
    for (;;) {
      ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
      if (n <= 0) {
        if (n < 0 && errno == EINTR) continue;
        return;
      }
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t start = 0;
      for (;;) {
        std::size_t nl = buffer.find('\n', start);
        if (nl == std::string::npos) break;
        std::string_view frame(buffer.data() + start, nl - start + 1);
        if (frame.size() <= max_frame_bytes) {
          try {
            protocol_message msg = decode_frame(frame);
            std::lock_guard lk(mu_);
            inbox_.push_back(std::move(msg));
            cv_.notify_all();
          } catch (const codec_error&) {
            // malformed peer frame: drop it; the protocol layer times out
          }
        }
        start = nl + 1;
      }
      buffer.erase(0, start);
      if (buffer.size() > max_frame_bytes) return;  // oversized frame: reject
    }
  }

  party_id self_;
  std::map<party_id, std::string> book_;
  tcp_options opt_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::vector<std::thread> readers_;
  mutable std::mutex mu_;
  std::mutex send_mu_;
  std::condition_variable cv_;
  std::deque<protocol_message> inbox_;
  std::map<party_id, int> out_conns_;
  std::vector<int> in_conns_;
  std::vector<protocol_message> sent_audit_;
};

}  // namespace ppmine::net
