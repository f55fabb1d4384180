#include "meco/service/server.hpp"

#include <atomic>
#include <deque>
#include <fstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "meco/core/error.hpp"

namespace meco::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

constexpr std::size_t kMaxQueuedMessages = 4096;
constexpr std::uint64_t kMaxRequestBody = 1 << 20;
constexpr auto kHttpIdleTimeout = std::chrono::seconds(60);

void check_writable(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto probe = dir / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out || !(out << "ok")) {
      throw Error(ErrorCode::storage_failure, "data_dir " + dir.string() + " is not writable");
    }
  }
  std::filesystem::remove(probe, ec);
}

repository::RepositoryOptions repository_options(const ServiceConfig& c) {
  repository::RepositoryOptions o;
  o.data_dir = c.data_dir;
  o.store.sync = c.sync;
  o.store.snapshot_every = c.snapshot_every;
  o.store.fold.query_capacity = c.query_capacity;
  return o;
}

}  // namespace

struct Server::Impl {
  Impl(ServiceConfig c, std::unique_ptr<fetch::DocumentSource> s, Clock clock)
      : config(std::move(c)),
        ioc(static_cast<int>(config.io_threads)),
        workers(config.worker_threads),
        repo((check_writable(config.data_dir), repository_options(config)), std::move(clock)),
        source(s ? std::move(s) : std::make_unique<fetch::HttpFetcher>(config.fetch)),
        sessions(repo, *source, session::SessionOptions{config.heartbeat_timeout}),
        api(repo, sessions, ApiOptions{repository::RecommendOptions{config.weights, config.threshold}}),
        acceptor(net::make_strand(ioc)),
        reaper(ioc) {}

  void accept();
  void schedule_reap();

  ServiceConfig config;
  // Declared before the engine: subscribers it still holds own sockets.
  net::io_context ioc;
  net::thread_pool workers;
  repository::Repository repo;
  std::unique_ptr<fetch::DocumentSource> source;
  session::SessionEngine sessions;
  Api api;
  tcp::acceptor acceptor;
  net::steady_timer reaper;
  std::vector<std::thread> threads;
  unsigned short port = 0;
  bool running = false;
  bool stopped = false;
};

namespace {

template <typename Body>
void add_common_headers(http::response<Body>& res) {
  res.set(http::field::server, "mecocir");
  res.set(http::field::access_control_allow_origin, "*");
}

class WsSession : public std::enable_shared_from_this<WsSession>, public session::Subscriber {
 public:
  WsSession(tcp::socket&& socket, Server::Impl& impl, WorkspaceId ws, UserId user)
      : ws_(std::move(socket)), impl_(impl), workspace_(std::move(ws)), user_(std::move(user)),
        serial_(net::make_strand(impl.workers)) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.set_option(websocket::stream_base::decorator(
        [](websocket::response_type& res) { res.set(http::field::server, "mecocir"); }));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) {
        return;
      }
      self->do_read();
    });
  }

  bool deliver(const session::ServerMessage& message) override {
    if (pending_.fetch_add(1) >= kMaxQueuedMessages) {
      pending_.fetch_sub(1);
      return false;
    }
    net::post(ws_.get_executor(), [self = shared_from_this(), text = session::encode(message)]() mutable {
      self->outbox_.push_back(std::move(text));
      if (self->outbox_.size() == 1 && !self->writing_) {
        self->do_write();
      }
    });
    return true;
  }

  void close(std::string_view reason) override {
    net::post(ws_.get_executor(), [self = shared_from_this(), reason = std::string(reason)] {
      if (self->close_requested_) {
        return;
      }
      self->close_requested_ = true;
      self->close_reason_ = reason.substr(0, 120);
      if (!self->writing_) {
        self->do_close();
      }
    });
  }

 private:
  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      closed();
      return;
    }
    auto text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    std::size_t start = 0;
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string::npos) {
        end = text.size();
      }
      auto line = std::string_view(text).substr(start, end - start);
      start = end + 1;
      if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
        continue;
      }
      try {
        auto message = session::decode_client(line);
        net::post(serial_, [self = shared_from_this(), message = std::move(message)] {
          self->impl_.sessions.dispatch(self->workspace_, self->user_, self, message);
        });
      } catch (const session::ProtocolError& e) {
        deliver(session::ErrorMessage{"protocol_error", e.what(), std::nullopt});
      }
    }
    do_read();
  }

  void do_write() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      self->outbox_.pop_front();
      self->pending_.fetch_sub(1);
      if (ec) {
        self->outbox_.clear();
        return;
      }
      if (!self->outbox_.empty()) {
        self->do_write();
      } else if (self->close_requested_) {
        self->do_close();
      }
    });
  }

  void do_close() {
    if (closing_) {
      return;
    }
    closing_ = true;
    websocket::close_reason reason(websocket::close_code::normal);
    reason.reason = close_reason_;
    ws_.async_close(reason, [self = shared_from_this()](beast::error_code) {});
  }

  // The peer is gone; forget the member after anything it already sent.
  void closed() {
    net::post(serial_, [self = shared_from_this()] {
      self->impl_.sessions.disconnect(self->workspace_, self->user_, self.get());
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  Server::Impl& impl_;
  WorkspaceId workspace_;
  UserId user_;
  // Messages of one connection are handled in arrival order.
  net::strand<net::thread_pool::executor_type> serial_;
  beast::flat_buffer buffer_;

  // Owned by the socket's strand.
  std::deque<std::string> outbox_;
  bool writing_ = false;
  bool close_requested_ = false;
  bool closing_ = false;
  std::string close_reason_;

  std::atomic<std::size_t> pending_{0};
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, Server::Impl& impl) : stream_(std::move(socket)), impl_(impl) {}

  void run() {
    net::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->do_read(); });
  }

 private:
  void do_read() {
    parser_.emplace();
    parser_->body_limit(kMaxRequestBody);
    stream_.expires_after(kHttpIdleTimeout);
    http::async_read(stream_, buffer_, *parser_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec == http::error::end_of_stream) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    if (ec == http::error::body_limit) {
      respond_error(413, "payload_too_large", "request body exceeds 1 MiB", 11, false);
      return;
    }
    if (ec) {
      return;
    }
    auto req = parser_->release();
    if (websocket::is_upgrade(req)) {
      upgrade(std::move(req));
      return;
    }
    if (req.method() == http::verb::options) {
      http::response<http::string_body> res{http::status::no_content, req.version()};
      add_common_headers(res);
      res.set(http::field::access_control_allow_methods, "GET, POST, PATCH, OPTIONS");
      res.set(http::field::access_control_allow_headers, "Content-Type, X-User-Id");
      res.keep_alive(req.keep_alive());
      write(std::move(res));
      return;
    }
    net::post(impl_.workers, [self = shared_from_this(), req = std::move(req)] {
      HttpRequest request;
      request.method = std::string(req.method_string());
      request.target = std::string(req.target());
      for (const auto& field : req) {
        request.headers[std::string(field.name_string())] = std::string(field.value());
      }
      request.body = req.body();
      auto result = self->impl_.api.handle(request);
      http::response<http::string_body> res{static_cast<http::status>(result.status), req.version()};
      add_common_headers(res);
      res.set(http::field::content_type, "application/json");
      res.body() = result.body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
      res.keep_alive(req.keep_alive());
      res.prepare_payload();
      net::post(self->stream_.get_executor(),
                [self, res = std::move(res)]() mutable { self->write(std::move(res)); });
    });
  }

  void upgrade(http::request<http::string_body> req) {
    auto target = parse_target(std::string_view(req.target().data(), req.target().size()));
    if (!target || target->segments.size() != 2 || target->segments[0] != "ws") {
      respond_error(404, "not_found", "real-time endpoint is /ws/{workspace}?user=", req.version(), false);
      return;
    }
    const auto& ws = target->segments[1];
    auto user = target->query.find("user");
    if (!is_valid_workspace_id(ws) || user == target->query.end() || user->second.empty()) {
      respond_error(400, "invalid_argument", "a valid workspace id and user are required", req.version(), false);
      return;
    }
    stream_.expires_never();
    std::make_shared<WsSession>(stream_.release_socket(), impl_, WorkspaceId(ws), UserId(user->second))
        ->run(std::move(req));
  }

  void respond_error(int status, std::string_view code, std::string_view message, unsigned version, bool keep_alive) {
    http::response<http::string_body> res{static_cast<http::status>(status), version};
    add_common_headers(res);
    res.set(http::field::content_type, "application/json");
    res.body() = nlohmann::json{{"error", {{"code", code}, {"message", message}}}}.dump();
    res.keep_alive(keep_alive);
    res.prepare_payload();
    write(std::move(res));
  }

  void write(http::response<http::string_body> res) {
    auto owned = std::make_shared<http::response<http::string_body>>(std::move(res));
    http::async_write(stream_, *owned, [self = shared_from_this(), owned](beast::error_code ec, std::size_t) {
      if (ec) {
        return;
      }
      if (owned->need_eof()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  Server::Impl& impl_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
};

}  // namespace

void Server::Impl::accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec == net::error::operation_aborted || !acceptor.is_open()) {
      return;
    }
    if (!ec) {
      std::make_shared<HttpSession>(std::move(socket), *this)->run();
    }
    accept();
  });
}

void Server::Impl::schedule_reap() {
  auto period = std::min<std::chrono::milliseconds>(config.heartbeat_timeout / 4, std::chrono::seconds(1));
  reaper.expires_after(std::max(period, std::chrono::milliseconds(10)));
  reaper.async_wait([this](beast::error_code ec) {
    if (ec) {
      return;
    }
    net::post(workers, [this] { sessions.reap_idle(); });
    schedule_reap();
  });
}

Server::Server(ServiceConfig config, std::unique_ptr<fetch::DocumentSource> source, Clock clock)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(source), std::move(clock))) {}

Server::~Server() { stop(); }

unsigned short Server::start() {
  auto& i = *impl_;
  if (i.running || i.stopped) {
    throw Error(ErrorCode::invalid_argument, "server already started");
  }
  auto [host, port] = split_listen_address(i.config.listen_address);
  tcp::resolver resolver(i.ioc);
  auto endpoints = resolver.resolve(host, std::to_string(port), tcp::resolver::passive);
  if (endpoints.empty()) {
    throw Error(ErrorCode::invalid_argument, "cannot resolve " + host);
  }
  tcp::endpoint endpoint = endpoints.begin()->endpoint();
  i.acceptor.open(endpoint.protocol());
  i.acceptor.set_option(net::socket_base::reuse_address(true));
  i.acceptor.bind(endpoint);
  i.acceptor.listen(net::socket_base::max_listen_connections);
  i.port = i.acceptor.local_endpoint().port();
  i.accept();
  i.schedule_reap();
  for (std::size_t n = 0; n < i.config.io_threads; ++n) {
    i.threads.emplace_back([&i] { i.ioc.run(); });
  }
  i.running = true;
  spdlog::info("listening on {}:{} with data in {}", host, i.port, i.config.data_dir.string());
  return i.port;
}

void Server::stop() {
  auto& i = *impl_;
  if (i.stopped) {
    return;
  }
  i.stopped = true;
  if (i.running) {
    net::post(i.acceptor.get_executor(), [&i] {
      beast::error_code ignored;
      i.acceptor.close(ignored);
    });
    i.reaper.cancel();
    i.workers.join();
    i.ioc.stop();
    for (auto& t : i.threads) {
      t.join();
    }
    i.threads.clear();
  }
  i.repo.write_snapshots();
}

unsigned short Server::port() const noexcept { return impl_->port; }
const ServiceConfig& Server::config() const noexcept { return impl_->config; }
repository::Repository& Server::repository() noexcept { return impl_->repo; }
session::SessionEngine& Server::sessions() noexcept { return impl_->sessions; }
Api& Server::api() noexcept { return impl_->api; }

}  // namespace meco::service
