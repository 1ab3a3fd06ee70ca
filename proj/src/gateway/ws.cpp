#include "coreg/gateway/ws.hpp"

#include <cctype>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace coreg::gateway {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

std::optional<std::string> query_param(std::string_view target, std::string_view key) {
  const auto q = target.find('?');
  if (q == std::string_view::npos) return std::nullopt;
  auto rest = target.substr(q + 1);
  while (!rest.empty()) {
    const auto amp = rest.find('&');
    const auto pair = rest.substr(0, amp);
    const auto eq = pair.find('=');
    if (pair.substr(0, eq) == key) {
      std::string out;
      const auto raw = eq == std::string_view::npos ? std::string_view{} : pair.substr(eq + 1);
      for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '+') {
          out += ' ';
        } else if (raw[i] == '%' && i + 2 < raw.size() && std::isxdigit(static_cast<unsigned char>(raw[i + 1])) &&
                   std::isxdigit(static_cast<unsigned char>(raw[i + 2]))) {
          out += static_cast<char>(std::stoi(std::string(raw.substr(i + 1, 2)), nullptr, 16));
          i += 2;
        } else {
          out += raw[i];
        }
      }
      return out;
    }
    if (amp == std::string_view::npos) break;
    rest = rest.substr(amp + 1);
  }
  return std::nullopt;
}

namespace {

class ServerConn final : public Outbox, public std::enable_shared_from_this<ServerConn> {
 public:
  ServerConn(tcp::socket socket, Hub& hub, const std::string& token)
      : ws_(std::move(socket)), hub_(hub), token_(token) {}

  void run() {
    http::async_read(ws_.next_layer(), buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
  }

  void send(std::string frame) override {
    net::post(ws_.get_executor(), [self = shared_from_this(), frame = std::move(frame)]() mutable {
      self->queue_.push_back(std::move(frame));
      if (!self->writing_) self->write_next();
    });
  }

  void close() override {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      self->closing_ = true;
      if (!self->writing_) self->write_next();
    });
  }

 private:
  bool authorized() const {
    if (token_.empty()) return true;
    const auto target = std::string_view(req_.target().data(), req_.target().size());
    if (auto t = query_param(target, "token"); t && *t == token_) return true;
    const auto auth = req_[http::field::authorization];
    return std::string_view(auth.data(), auth.size()) == "Bearer " + token_;
  }

  void reject(http::status status, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::content_type, "text/plain");
    res->body() = std::move(body);
    res->prepare_payload();
    res->keep_alive(false);
    http::async_write(ws_.next_layer(), *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->ws_.next_layer().socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  void on_request(beast::error_code ec) {
    if (ec) return;
    const auto target = std::string_view(req_.target().data(), req_.target().size());
    const auto path = target.substr(0, target.find('?'));
    if (path != "/ws" || !websocket::is_upgrade(req_)) return reject(http::status::not_found, "not found\n");
    if (!authorized()) return reject(http::status::unauthorized, "unauthorized\n");
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req_, [self = shared_from_this()](beast::error_code ec2) { self->on_accept(ec2); });
  }

  void on_accept(beast::error_code ec) {
    if (ec) return;
    ws_.text(true);
    id_ = hub_.attach(shared_from_this());
    attached_ = true;
    read_next();
  }

  void read_next() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->detach();
        return;
      }
      const auto text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->hub_.on_frame(self->id_, text);
      self->read_next();
    });
  }

  void write_next() {
    if (queue_.empty()) {
      if (closing_ && !closed_) {
        closed_ = true;
        ws_.async_close(websocket::close_code::normal,
                        [self = shared_from_this()](beast::error_code) { self->detach(); });
      }
      return;
    }
    if (closed_) {
      queue_.clear();
      return;
    }
    writing_ = true;
    ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      self->queue_.pop_front();
      if (ec) {
        self->queue_.clear();
        self->detach();
        return;
      }
      self->write_next();
    });
  }

  void detach() {
    if (attached_) {
      attached_ = false;
      hub_.detach(id_);
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  Hub& hub_;
  std::string token_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::deque<std::string> queue_;
  bool writing_ = false;
  bool closing_ = false;
  bool closed_ = false;
  bool attached_ = false;
  ConnectionId id_ = 0;
};

}  // namespace

struct WsServer::Impl {
  Hub& hub;
  ServerOptions options;
  net::io_context ioc{1};
  std::optional<tcp::acceptor> acceptor;
  std::thread thread;
  bool running = false;

  Impl(Hub& h, ServerOptions o) : hub(h), options(std::move(o)) {}

  void accept_next() {
    acceptor->async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<ServerConn>(std::move(socket), hub, options.token)->run();
      accept_next();
    });
  }
};

WsServer::WsServer(Hub& hub, ServerOptions options) : impl_(std::make_unique<Impl>(hub, std::move(options))) {}

WsServer::~WsServer() { stop(); }

unsigned short WsServer::start() {
  auto& s = *impl_;
  try {
    const auto address = net::ip::make_address(s.options.host);
    s.acceptor.emplace(s.ioc);
    const tcp::endpoint ep{address, s.options.port};
    s.acceptor->open(ep.protocol());
    s.acceptor->set_option(net::socket_base::reuse_address(true));
    s.acceptor->bind(ep);
    s.acceptor->listen(net::socket_base::max_listen_connections);
  } catch (const boost::system::system_error& e) {
    throw std::runtime_error("cannot listen on " + s.options.host + ":" + std::to_string(s.options.port) + ": " +
                             e.code().message());
  }
  s.accept_next();
  s.running = true;
  s.thread = std::thread([&s] { s.ioc.run(); });
  return s.acceptor->local_endpoint().port();
}

void WsServer::stop() {
  auto& s = *impl_;
  if (!s.running) return;
  s.running = false;
  net::post(s.ioc, [&s] {
    beast::error_code ignored;
    s.acceptor->close(ignored);
  });
  s.ioc.stop();
  if (s.thread.joinable()) s.thread.join();
  s.hub.clear();
}

struct WsClient::Impl {
  net::io_context ioc{1};
  std::optional<websocket::stream<beast::tcp_stream>> ws;
  beast::flat_buffer buffer;
  std::deque<std::string> outq;
  bool writing = false;
  bool closing = false;
  std::thread thread;

  mutable std::mutex mu;
  std::condition_variable cv;
  std::deque<std::string> inbox;
  bool closed = true;
  std::uint64_t seq = 0;

  void read_next() {
    ws->async_read(buffer, [this](beast::error_code ec, std::size_t) {
      if (ec) {
        mark_closed();
        return;
      }
      {
        std::lock_guard lock(mu);
        inbox.push_back(beast::buffers_to_string(buffer.data()));
      }
      buffer.consume(buffer.size());
      cv.notify_all();
      read_next();
    });
  }

  void write_next() {
    if (writing) return;
    if (outq.empty()) {
      if (closing) {
        closing = false;
        ws->async_close(websocket::close_code::normal, [](beast::error_code) {});
      }
      return;
    }
    writing = true;
    ws->async_write(net::buffer(outq.front()), [this](beast::error_code ec, std::size_t) {
      writing = false;
      outq.pop_front();
      if (ec) {
        outq.clear();
        return;
      }
      write_next();
    });
  }

  void mark_closed() {
    {
      std::lock_guard lock(mu);
      closed = true;
    }
    cv.notify_all();
  }
};

WsClient::WsClient() : impl_(std::make_unique<Impl>()) {}

WsClient::~WsClient() { close(); }

void WsClient::connect(const std::string& host, unsigned short port, const std::string& target) {
  auto& c = *impl_;
  try {
    tcp::resolver resolver(c.ioc);
    c.ws.emplace(c.ioc);
    const auto results = resolver.resolve(host, std::to_string(port));
    beast::get_lowest_layer(*c.ws).connect(results);
    websocket::response_type res;
    c.ws->handshake(res, host + ":" + std::to_string(port), target);
    c.ws->text(true);
  } catch (const beast::system_error& e) {
    throw ConnectError("connect to " + host + ":" + std::to_string(port) + target + " failed: " + e.code().message());
  }
  {
    std::lock_guard lock(c.mu);
    c.closed = false;
  }
  c.read_next();
  c.thread = std::thread([&c] { c.ioc.run(); });
}

std::uint64_t WsClient::send(Message m, SessionMs ts) {
  Envelope env;
  {
    std::lock_guard lock(impl_->mu);
    env.seq = ++impl_->seq;
  }
  env.ts = ts;
  env.message = std::move(m);
  send_raw(encode(env));
  return env.seq;
}

void WsClient::send_raw(std::string frame) {
  auto& c = *impl_;
  if (!c.ws) return;
  net::post(c.ioc, [&c, frame = std::move(frame)]() mutable {
    c.outq.push_back(std::move(frame));
    c.write_next();
  });
}

std::optional<std::string> WsClient::receive_raw(std::chrono::milliseconds timeout) {
  auto& c = *impl_;
  std::unique_lock lock(c.mu);
  c.cv.wait_for(lock, timeout, [&c] { return !c.inbox.empty() || c.closed; });
  if (c.inbox.empty()) return std::nullopt;
  auto frame = std::move(c.inbox.front());
  c.inbox.pop_front();
  return frame;
}

std::optional<Envelope> WsClient::receive(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    auto frame = receive_raw(std::max(left, std::chrono::milliseconds(0)));
    if (!frame) return std::nullopt;
    try {
      return decode(*frame);
    } catch (const DecodeError&) {
    }
  }
}

std::optional<Envelope> WsClient::receive_kind(MessageKind kind, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    auto env = receive(left);
    if (!env) return std::nullopt;
    if (env->kind() == kind) return env;
  }
}

bool WsClient::closed() const {
  std::lock_guard lock(impl_->mu);
  return impl_->closed && impl_->inbox.empty();
}

void WsClient::close() {
  auto& c = *impl_;
  if (!c.thread.joinable()) return;
  net::post(c.ioc, [&c] {
    c.closing = true;
    c.write_next();
  });
  {
    std::unique_lock lock(c.mu);
    c.cv.wait_for(lock, std::chrono::seconds(2), [&c] { return c.closed; });
  }
  c.ioc.stop();
  c.thread.join();
  c.ws.reset();
  c.mark_closed();
}

}  // namespace coreg::gateway
