#include "uwbloc/gateway/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include "uwbloc/error.hpp"
#include "uwbloc/gateway/protocol.hpp"
#include "uwbloc/gateway/session.hpp"

namespace uwbloc::gateway {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

std::pair<std::string, std::uint16_t> parse_bind(std::string_view bind) {
  const std::size_t colon = bind.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == bind.size()) {
    throw Error(ErrorCode::InvalidArgument, "bind address must look like host:port");
  }
  const std::string port_text(bind.substr(colon + 1));
  std::size_t used = 0;
  unsigned long port = 0;
  try {
    port = std::stoul(port_text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port_text.size() || port > 65535) {
    throw Error(ErrorCode::InvalidArgument, "invalid port '" + port_text + "'");
  }
  return {std::string(bind.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

namespace {

class Connection;

}  // namespace

struct Server::Impl {
  Impl(ScenarioConfig c, ServerOptions o) : config(std::move(c)), options(std::move(o)), mission(config) {}

  ScenarioConfig config;
  ServerOptions options;

  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::unique_ptr<net::signal_set> signals;
  std::shared_ptr<Connection> active;  // io thread only
  std::uint64_t active_generation{0};  // io thread only

  // Shared between the io thread and the stepper.
  mutable std::mutex mutex;
  std::condition_variable cv;
  std::deque<std::pair<protocol::Message, std::string>> commands;  // message, request type
  bool connected{false};
  bool paused{false};
  bool stopping{false};
  std::uint64_t generation{0};

  // Stepper thread only, except for the locked readers below.
  mutable std::mutex mission_mutex;
  Mission mission;
  std::uint64_t seen_generation{0};

  void accept();
  void on_open(const std::shared_ptr<Connection>& c);
  void on_close(const Connection* c);
  void on_message(const std::string& text);
  void publish(std::string frame);
  void stepper();
};

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, Server::Impl& server) : ws_(std::move(socket)), server_(server) {}

  void run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->server_.on_open(self);
    });
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->server_.on_close(self.get());
        return;
      }
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->server_.on_message(text);
      self->read();
    });
  }

  void send(std::string frame, bool close_after = false) {
    outbox_.push_back(std::move(frame));
    close_after_ = close_after_ || close_after;
    if (!writing_) write();
  }

  void close() {
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void write() {
    writing_ = true;
    ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->outbox_.pop_front();
      if (ec) {
        self->writing_ = false;
        return;
      }
      if (!self->outbox_.empty()) {
        self->write();
        return;
      }
      self->writing_ = false;
      if (self->close_after_) {
        self->ws_.async_close(websocket::close_code::try_again_later, [self](beast::error_code) {});
      }
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  Server::Impl& server_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  bool writing_{false};
  bool close_after_{false};
};

std::string error_frame(ErrorCode code, const std::string& message, std::string request = {}) {
  return protocol::encode(protocol::ErrorMessage{std::string(to_string(code)), message, std::move(request)});
}

}  // namespace

void Server::Impl::accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<Connection>(std::move(socket), *this)->run();
    accept();
  });
}

void Server::Impl::on_open(const std::shared_ptr<Connection>& c) {
  if (active) {
    c->send(error_frame(ErrorCode::SessionBusy, "another operator is connected"), true);
    return;
  }
  active = c;
  {
    std::lock_guard lock(mutex);
    connected = true;
    active_generation = ++generation;
  }
  cv.notify_all();
  c->read();
}

void Server::Impl::on_close(const Connection* c) {
  if (active.get() != c) return;
  active.reset();
  {
    std::lock_guard lock(mutex);
    connected = false;
  }
  cv.notify_all();
}

void Server::Impl::on_message(const std::string& text) {
  protocol::Message m;
  try {
    m = protocol::decode(text);
  } catch (const Error& e) {
    if (active) active->send(error_frame(e.code(), e.what()));
    return;
  }
  const std::string request(protocol::message_type(m));
  {
    std::lock_guard lock(mutex);
    if (std::holds_alternative<protocol::Pause>(m)) {
      paused = true;
    } else if (std::holds_alternative<protocol::Resume>(m)) {
      paused = false;
    } else if (std::holds_alternative<protocol::Hello>(m)) {
      // Greeting is sent on connect; nothing to do.
    } else if (protocol::to_command(m)) {
      commands.emplace_back(std::move(m), request);
    } else if (active) {
      active->send(error_frame(ErrorCode::ProtocolError, "'" + request + "' is a server message", request));
    }
  }
  cv.notify_all();
}

// Stepper thread: frames are tagged with the generation they were produced
// for, so nothing meant for a dropped connection reaches the next one.
void Server::Impl::publish(std::string frame) {
  net::post(ioc, [this, frame = std::move(frame), gen = seen_generation]() mutable {
    if (active && active_generation == gen) active->send(std::move(frame));
  });
}

void Server::Impl::stepper() {
  const auto snapshot_period = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(1.0 / options.snapshot_hz));
  auto next_snapshot = Clock::now();
  bool pacing = false;
  Clock::time_point pace_wall;
  double pace_sim = 0.0;

  mission.log().set_listener([this](const std::string& line) {
    if (seen_generation != 0) publish(R"({"type":"event","record":)" + line + "}");
  });

  for (;;) {
    bool greet = false;
    bool live = false;
    bool is_paused = false;
    {
      std::lock_guard lock(mutex);
      if (stopping) break;
      if (connected && generation != seen_generation) {
        seen_generation = generation;
        greet = true;
      }
      live = connected;
      is_paused = paused;
    }

    std::unique_lock mission_lock(mission_mutex);
    if (greet) {
      publish(protocol::encode(protocol::Hello{"uwbloc-gateway", protocol::kProtocolVersion, config.name}));
      for (const auto& line : mission.log().lines()) {
        publish(R"({"type":"event","record":)" + line + "}");
      }
      publish(protocol::encode(protocol::make_snapshot(mission, is_paused)));
    }

    // Commands wait in the queue while the mission is busy, so they land at
    // the same simulation instant a scripted operator would issue them.
    while (live && !mission.busy()) {
      std::pair<protocol::Message, std::string> next;
      {
        std::lock_guard lock(mutex);
        if (commands.empty()) break;
        next = std::move(commands.front());
        commands.pop_front();
      }
      try {
        mission.apply(*protocol::to_command(next.first));
      } catch (const Error& e) {
        publish(error_frame(e.code(), e.what(), next.second));
      }
    }

    const bool run = live && !is_paused && mission.busy();
    if (run) {
      if (!pacing) {
        pacing = true;
        pace_wall = Clock::now();
        pace_sim = mission.sim_time();
      }
      mission.step();
    } else {
      pacing = false;
    }

    const auto now = Clock::now();
    if (live && now >= next_snapshot) {
      publish(protocol::encode(protocol::make_snapshot(mission, is_paused)));
      next_snapshot = now + snapshot_period;
    }
    const double sim_now = mission.sim_time();
    mission_lock.unlock();

    std::unique_lock lock(mutex);
    auto wake = next_snapshot;
    if (run) {
      if (options.realtime_factor <= 0.0) continue;
      const auto due = pace_wall + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(
                                       (sim_now - pace_sim) / options.realtime_factor));
      wake = std::min(wake, due);
      cv.wait_until(lock, wake, [this] { return stopping; });
    } else {
      cv.wait_until(lock, live ? wake : Clock::now() + std::chrono::milliseconds(200), [&] {
        return stopping || (connected && generation != seen_generation) || paused != is_paused ||
               connected != live || (connected && !commands.empty() && !mission.busy());
      });
    }
  }
}

Server::Server(ScenarioConfig config, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(options))) {}

Server::~Server() {
  stop();
}

void Server::start() {
  auto& im = *impl_;
  beast::error_code ec;
  const auto address = net::ip::make_address(im.options.host, ec);
  if (ec) throw Error(ErrorCode::BindFailed, "invalid bind host '" + im.options.host + "'");
  const tcp::endpoint endpoint(address, im.options.port);
  im.acceptor.open(endpoint.protocol(), ec);
  if (!ec) im.acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) im.acceptor.bind(endpoint, ec);
  if (!ec) im.acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    throw Error(ErrorCode::BindFailed,
                "cannot listen on " + im.options.host + ":" + std::to_string(im.options.port) + ": " + ec.message());
  }
  if (im.options.handle_signals) {
    im.signals = std::make_unique<net::signal_set>(im.ioc, SIGINT, SIGTERM);
    im.signals->async_wait([this](beast::error_code ec, int) {
      if (!ec) stop();
    });
  }
  im.accept();
}

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
  auto& im = *impl_;
  std::thread stepper([&im] { im.stepper(); });
  im.ioc.run();
  {
    std::lock_guard lock(im.mutex);
    im.stopping = true;
  }
  im.cv.notify_all();
  stepper.join();
}

void Server::stop() {
  auto& im = *impl_;
  {
    std::lock_guard lock(im.mutex);
    im.stopping = true;
  }
  im.cv.notify_all();
  net::post(im.ioc, [&im] {
    beast::error_code ec;
    im.acceptor.close(ec);
    if (im.signals) im.signals->cancel(ec);
    if (im.active) im.active->close();
    im.active.reset();
    im.ioc.stop();
  });
}

std::vector<std::string> Server::event_lines() const {
  std::lock_guard lock(impl_->mission_mutex);
  return impl_->mission.log().lines();
}

std::vector<Command> Server::accepted_commands() const { return commands_from_events(event_lines()); }

}  // namespace uwbloc::gateway
