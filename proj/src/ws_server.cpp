#include "fic_teleop/ws_server.hpp"

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <deque>
#include <filesystem>
#include <set>

namespace fic_teleop {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace fs = std::filesystem;
using tcp = asio::ip::tcp;

std::string resolve_static_path(const std::string& root, const std::string& target) {
  std::string path = target.substr(0, target.find_first_of("?#"));
  if (path.empty() || path[0] != '/') return {};
  if (path.find("..") != std::string::npos || path.find('\0') != std::string::npos) return {};
  if (path.back() == '/') path += "index.html";
  return (fs::path(root) / path.substr(1)).string();
}

namespace {

std::string mime_type(const std::string& path) {
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".csv") return "text/csv";
  return "application/octet-stream";
}

class WsClient;

struct Hub {
  std::set<std::shared_ptr<WsClient>> clients;
  std::atomic<std::size_t> count{0};

  void add(std::shared_ptr<WsClient> c) {
    clients.insert(std::move(c));
    count = clients.size();
  }
  void remove(const std::shared_ptr<WsClient>& c) {
    clients.erase(c);
    count = clients.size();
  }
};

class WsClient : public std::enable_shared_from_this<WsClient> {
 public:
  WsClient(tcp::socket socket, LiveSession& session, Hub& hub)
      : ws_(std::move(socket)), session_(session), hub_(hub) {}

  void start(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->hub_.add(self);
      self->send(self->session_.hello());
      self->read();
    });
  }

  void send(std::string text) {
    if (queue_.size() >= kClientQueueLimit) {
      // Keep the message currently being written; drop the oldest waiting one.
      queue_.erase(queue_.begin() + (writing_ ? 1 : 0));
      ++dropped_;
    }
    queue_.push_back(std::move(text));
    if (!writing_) write();
  }

  void close() {
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->hub_.remove(self);
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      if (auto err = self->session_.handle_message(text)) {
        self->send(to_string(WireMessage{"event", 0, 0.0, {{"event", "error"}, {"message", *err}}}));
      }
      self->read();
    });
  }

  void write() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(asio::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->queue_.pop_front();
                      self->writing_ = false;
                      if (ec) {
                        self->hub_.remove(self);
                        return;
                      }
                      if (!self->queue_.empty()) self->write();
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  LiveSession& session_;
  Hub& hub_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  bool writing_ = false;
  std::size_t dropped_ = 0;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, LiveSession& session, Hub& hub, std::string root)
      : stream_(std::move(socket)), session_(session), hub_(hub), root_(std::move(root)) {}

  void start() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (ec) return;
                       self->handle();
                     });
  }

  void handle() {
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/ws") {
        stream_.expires_never();
        std::make_shared<WsClient>(stream_.release_socket(), session_, hub_)->start(std::move(req_));
        return;
      }
      return reply(http::status::not_found, "no WebSocket endpoint here\n", "text/plain");
    }
    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
      return reply(http::status::method_not_allowed, "GET only\n", "text/plain");
    }
    const std::string path = resolve_static_path(root_, std::string(req_.target()));
    if (path.empty()) return reply(http::status::bad_request, "bad path\n", "text/plain");

    http::file_body::value_type body;
    beast::error_code ec;
    body.open(path.c_str(), beast::file_mode::scan, ec);
    if (ec) return reply(http::status::not_found, "not found\n", "text/plain");
    auto res = std::make_shared<http::response<http::file_body>>(
        std::piecewise_construct, std::make_tuple(std::move(body)),
        std::make_tuple(http::status::ok, req_.version()));
    res->set(http::field::content_type, mime_type(path));
    res->keep_alive(req_.keep_alive());
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code e, std::size_t) {
      self->after_write(e, res->keep_alive());
    });
  }

  void reply(http::status status, const std::string& text, const std::string& type) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::content_type, type);
    res->keep_alive(req_.keep_alive());
    res->body() = text;
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code e, std::size_t) {
      self->after_write(e, res->keep_alive());
    });
  }

  void after_write(beast::error_code ec, bool keep_alive) {
    if (ec) return;
    if (!keep_alive) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    read();
  }

  beast::tcp_stream stream_;
  LiveSession& session_;
  Hub& hub_;
  std::string root_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

struct WsServer::Impl {
  Impl(LiveSession& s, ServerOptions o) : session(s), opts(std::move(o)), acceptor(ioc) {}

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec != asio::error::operation_aborted) spdlog::warn("accept failed: {}", ec.message());
        if (!acceptor.is_open()) return;
      } else {
        std::make_shared<HttpConnection>(std::move(socket), session, hub, opts.static_dir)->start();
      }
      accept();
    });
  }

  LiveSession& session;
  ServerOptions opts;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  Hub hub;
  std::optional<asio::executor_work_guard<asio::io_context::executor_type>> work;
};

WsServer::WsServer(LiveSession& session, ServerOptions opts)
    : impl_(std::make_unique<Impl>(session, std::move(opts))) {
  // Outgoing messages come from the simulation thread; hop onto the I/O thread.
  session.set_publisher([impl = impl_.get()](const std::string& text) {
    asio::post(impl->ioc, [impl, text] {
      for (const auto& c : impl->hub.clients) c->send(text);
    });
  });
}

WsServer::~WsServer() {
  impl_->session.set_publisher(nullptr);
  stop();
}

unsigned short WsServer::listen() {
  const tcp::endpoint ep(asio::ip::make_address(impl_->opts.host), impl_->opts.port);
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
  impl_->acceptor.bind(ep);
  impl_->acceptor.listen();
  impl_->accept();
  return impl_->acceptor.local_endpoint().port();
}

void WsServer::run() {
  impl_->work.emplace(impl_->ioc.get_executor());
  impl_->ioc.run();
}

void WsServer::stop() {
  asio::post(impl_->ioc, [impl = impl_.get()] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    for (const auto& c : impl->hub.clients) c->close();
    impl->hub.clients.clear();
    impl->hub.count = 0;
    impl->work.reset();
  });
  impl_->ioc.stop();
}

std::size_t WsServer::client_count() const { return impl_->hub.count; }

}  // namespace fic_teleop
