#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <csignal>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <future>
#include <iterator>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "json.hpp"

#include "ancsim/remote/bounded_queue.hpp"
#include "ancsim/remote/broker.hpp"
#include "ancsim/remote/envelope.hpp"
#include "ancsim/remote/telemetry.hpp"
#include "ancsim/sim/engine.hpp"
#include "ancsim/sim/scenario.hpp"

namespace ancsim {

class PortInUse : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ServeOptions {
    std::string bind = "127.0.0.1";
    unsigned short tcp_port = 7788;   // 0 picks a free port
    unsigned short http_port = 8080;  // 0 picks a free port
    double speed = 1.0;               // simulated seconds per wall second; 0 pauses
    std::filesystem::path static_dir;
    std::filesystem::path log_path;   // event log (ndjson); empty disables the file
    std::size_t command_queue = 256;
    std::size_t telemetry_queue = 1024;
    std::size_t event_queue = 4096;
    std::size_t session_queue = 4096;
    bool handle_signals = false;      // stop on SIGINT/SIGTERM
};

namespace serve_detail {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct Command {
    unsigned unit = 0;
    std::uint64_t seq = 0;
    nlohmann::json payload;
    double t_received = 0.0;
};

class Hub;

/// One client connection. Everything here runs on the io thread.
class Session : public std::enable_shared_from_this<Session> {
public:
    Session(Hub& hub, std::size_t cap) : hub_(hub), cap_(cap) {}
    virtual ~Session() = default;

    bool deliver(std::string line) {
        if (closed_) return false;
        if (out_.size() >= cap_) {
            ++dropped_;
            return false;
        }
        out_.push_back(std::move(line));
        if (!writing_) {
            writing_ = true;
            write_front();
        }
        return true;
    }

    std::uint64_t dropped() const noexcept { return dropped_; }
    Broker::SubscriberId id = 0;

protected:
    virtual void write_front() = 0;
    void wrote() {
        out_.pop_front();
        if (out_.empty()) {
            writing_ = false;
        } else {
            write_front();
        }
    }
    void on_line(std::string_view line);
    void closed();

    Hub& hub_;
    std::deque<std::string> out_;
    bool closed_ = false;

private:
    std::size_t cap_;
    bool writing_ = false;
    std::uint64_t dropped_ = 0;
};

/// Shared state between sessions, the pump and the DSP thread.
class Hub {
public:
    Hub(std::size_t units, const ServeOptions& o)
        : commands(o.command_queue), telemetry(o.telemetry_queue), events(o.event_queue), units_(units), opt_(o) {
        if (!o.log_path.empty()) {
            log_file_.open(o.log_path, std::ios::binary | std::ios::trunc);
            if (!log_file_) throw ConfigError("cannot open event log " + o.log_path.string());
        }
    }

    Broker broker;
    BoundedQueue<Command> commands;
    BoundedQueue<Envelope> telemetry;  // droppable
    BoundedQueue<Envelope> events;     // acks and events
    std::atomic<double> sim_time{0.0};

    std::uint64_t next_seq() { return ++seq_; }

    void attach(const std::shared_ptr<Session>& s) {
        std::weak_ptr<Session> w = s;
        s->id = broker.add_subscriber([w](const Envelope& e) {
            auto p = w.lock();
            return p && p->deliver(to_line(e));
        });
        s->deliver(to_line({"broker/hello", next_seq(), hello()}));
    }

    nlohmann::json hello() const {
        return {{"server", "ancsim"}, {"units", units_}, {"protocol", 1}};
    }

    void connection_error(Session& s, const std::string& what) {
        s.deliver(to_line({"broker/hello", next_seq(), {{"error", what}}}));
    }

    void handle_line(Session& s, std::string_view line) {
        if (line.empty()) return;
        Envelope e;
        try {
            e = parse_envelope(line);
        } catch (const ConfigError& ex) {
            connection_error(s, std::string("bad envelope: ") + ex.what());
            return;
        }
        const auto topic = parse_topic(e.topic);
        if (!topic) {
            connection_error(s, "malformed topic: " + e.topic);
            return;
        }
        switch (topic->kind) {
        case TopicKind::BrokerSubscribe: {
            std::vector<std::string> filters;
            if (e.payload.contains("filter") && e.payload.at("filter").is_string()) {
                filters.push_back(e.payload.at("filter").get<std::string>());
            }
            if (e.payload.contains("filters") && e.payload.at("filters").is_array()) {
                for (const auto& f : e.payload.at("filters")) {
                    if (f.is_string()) filters.push_back(f.get<std::string>());
                }
            }
            nlohmann::json accepted = nlohmann::json::array(), rejected = nlohmann::json::array();
            for (const auto& f : filters) (broker.subscribe(s.id, f) ? accepted : rejected).push_back(f);
            s.deliver(to_line({"broker/subscribe", next_seq(),
                               {{"ok", rejected.empty() && !filters.empty()}, {"filters", accepted}, {"rejected", rejected}}}));
            return;
        }
        case TopicKind::BrokerHello:
            s.deliver(to_line({"broker/hello", next_seq(), hello()}));
            return;
        case TopicKind::UnitCmd: {
            if (topic->unit >= units_) {
                publish({unit_topic(topic->unit, "ack"), 0, nack(e, "unknown-unit")});
                return;
            }
            Command c{topic->unit, e.seq, e.payload, sim_time.load()};
            if (!commands.try_push(std::move(c))) publish({unit_topic(topic->unit, "ack"), 0, nack(e, "busy")});
            return;
        }
        default:
            publish(std::move(e));
            return;
        }
    }

    /// Routes a server-originated envelope and records it. io thread only.
    void publish(Envelope e) {
        e.seq = next_seq();
        broker.route(e);
        const auto line = to_line(e);
        std::lock_guard lock(log_m_);
        log_.emplace_back(e.seq, line);
        if (log_file_) log_file_ << line << '\n';
    }

    /// Moves everything the DSP thread produced onto the wire.
    void pump() {
        while (auto e = events.try_pop()) publish(std::move(*e));
        while (auto e = telemetry.try_pop()) publish(std::move(*e));
        if (log_file_) log_file_.flush();
    }

    /// Logged lines with seq > since, newline-terminated.
    std::string log_text(std::uint64_t since = 0) const {
        std::lock_guard lock(log_m_);
        std::string out;
        for (const auto& [seq, line] : log_) {
            if (seq > since) out += line + '\n';
        }
        return out;
    }

    std::size_t log_size() const {
        std::lock_guard lock(log_m_);
        return log_.size();
    }

    const ServeOptions& options() const noexcept { return opt_; }

private:
    static nlohmann::json nack(const Envelope& e, const std::string& reason) {
        return {{"cmd", e.payload.is_object() ? e.payload.value("cmd", std::string{}) : std::string{}},
                {"cmd_seq", e.seq},
                {"ok", false},
                {"error", reason}};
    }

    std::size_t units_;
    ServeOptions opt_;
    std::uint64_t seq_ = 0;
    mutable std::mutex log_m_;
    std::vector<std::pair<std::uint64_t, std::string>> log_;
    std::ofstream log_file_;
};

inline void Session::on_line(std::string_view line) { hub_.handle_line(*this, line); }
inline void Session::closed() {
    if (closed_) return;
    closed_ = true;
    hub_.broker.remove_subscriber(id);
}

class TcpSession : public Session {
public:
    TcpSession(Hub& hub, tcp::socket sock, std::size_t cap) : Session(hub, cap), sock_(std::move(sock)) {}

    void start() {
        hub_.attach(shared_from_this());
        read();
    }

private:
    void read() {
        auto self = std::static_pointer_cast<TcpSession>(shared_from_this());
        net::async_read_until(sock_, net::dynamic_buffer(in_), '\n', [self](boost::system::error_code ec, std::size_t n) {
            if (ec) {
                self->closed();
                return;
            }
            std::string line = self->in_.substr(0, n - 1);
            self->in_.erase(0, n);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            self->on_line(line);
            self->read();
        });
    }

    void write_front() override {
        auto self = std::static_pointer_cast<TcpSession>(shared_from_this());
        if (out_.front().empty() || out_.front().back() != '\n') out_.front() += '\n';
        net::async_write(sock_, net::buffer(out_.front()), [self](boost::system::error_code ec, std::size_t) {
            if (ec) {
                self->closed();
                return;
            }
            self->wrote();
        });
    }

    tcp::socket sock_;
    std::string in_;
};

class WsSession : public Session {
public:
    WsSession(Hub& hub, tcp::socket sock, std::size_t cap) : Session(hub, cap), ws_(std::move(sock)) {}

    void start(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        auto self = std::static_pointer_cast<WsSession>(shared_from_this());
        ws_.async_accept(req, [self](beast::error_code ec) {
            if (ec) {
                self->closed();
                return;
            }
            self->hub_.attach(self);
            self->read();
        });
    }

private:
    void read() {
        auto self = std::static_pointer_cast<WsSession>(shared_from_this());
        ws_.async_read(buf_, [self](beast::error_code ec, std::size_t) {
            if (ec) {
                self->closed();
                return;
            }
            const std::string msg = beast::buffers_to_string(self->buf_.data());
            self->buf_.consume(self->buf_.size());
            std::size_t pos = 0;
            while (pos <= msg.size()) {
                const auto nl = msg.find('\n', pos);
                const auto end = nl == std::string::npos ? msg.size() : nl;
                self->on_line(std::string_view(msg).substr(pos, end - pos));
                if (nl == std::string::npos) break;
                pos = nl + 1;
            }
            self->read();
        });
    }

    void write_front() override {
        auto self = std::static_pointer_cast<WsSession>(shared_from_this());
        ws_.text(true);
        ws_.async_write(net::buffer(out_.front()), [self](beast::error_code ec, std::size_t) {
            if (ec) {
                self->closed();
                return;
            }
            self->wrote();
        });
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buf_;
};

inline std::string_view mime_type(const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html";
    if (ext == ".js" || ext == ".mjs") return "application/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    if (ext == ".ico") return "image/x-icon";
    if (ext == ".map") return "application/json";
    return "application/octet-stream";
}

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(Hub& hub, tcp::socket sock) : hub_(hub), stream_(std::move(sock)) {}

    void start() { read(); }

private:
    void read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        auto self = shared_from_this();
        http::async_read(stream_, buf_, req_, [self](beast::error_code ec, std::size_t) {
            if (ec) return;
            if (websocket::is_upgrade(self->req_)) {
                if (self->req_.target() != "/ws") {
                    self->respond(self->text(http::status::not_found, "websocket endpoint is /ws\n"));
                    return;
                }
                self->stream_.expires_never();
                auto ws = std::make_shared<WsSession>(self->hub_, self->stream_.release_socket(),
                                                      self->hub_.options().session_queue);
                ws->start(std::move(self->req_));
                return;
            }
            self->respond(self->handle());
        });
    }

    http::response<http::string_body> text(http::status st, std::string body, std::string_view type = "text/plain") {
        http::response<http::string_body> res{st, req_.version()};
        res.set(http::field::server, "ancsim");
        res.set(http::field::content_type, std::string(type));
        res.set(http::field::access_control_allow_origin, "*");
        res.keep_alive(req_.keep_alive());
        res.body() = std::move(body);
        res.prepare_payload();
        return res;
    }

    http::response<http::string_body> handle() {
        if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
            return text(http::status::method_not_allowed, "GET only\n");
        }
        std::string target(req_.target());
        std::string query;
        if (const auto q = target.find('?'); q != std::string::npos) {
            query = target.substr(q + 1);
            target.resize(q);
        }
        if (target == "/log") {
            std::uint64_t since = 0;
            if (query.rfind("since=", 0) == 0) {
                try {
                    since = std::stoull(query.substr(6));
                } catch (const std::exception&) {
                    return text(http::status::bad_request, "since must be an unsigned integer\n");
                }
            }
            return text(http::status::ok, hub_.log_text(since), "application/x-ndjson");
        }
        const auto& root = hub_.options().static_dir;
        if (root.empty() || target.find("..") != std::string::npos || target.empty() || target.front() != '/') {
            return text(http::status::not_found, "not found\n");
        }
        auto path = root / target.substr(1);
        if (target.back() == '/') path /= "index.html";
        std::ifstream in(path, std::ios::binary);
        if (!in || std::filesystem::is_directory(path)) return text(http::status::not_found, "not found\n");
        std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return text(http::status::ok, std::move(body), mime_type(path));
    }

    void respond(http::response<http::string_body> res) {
        auto self = shared_from_this();
        auto sp = std::make_shared<http::response<http::string_body>>(std::move(res));
        if (req_.method() == http::verb::head) sp->body().clear();
        http::async_write(stream_, *sp, [self, sp](beast::error_code ec, std::size_t) {
            if (ec || !sp->keep_alive()) {
                beast::error_code ignored;
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                return;
            }
            self->read();
        });
    }

    Hub& hub_;
    beast::tcp_stream stream_;
    beast::flat_buffer buf_;
    http::request<http::string_body> req_;
};

} // namespace serve_detail

/// Serve mode: a DSP thread that owns the engine, and one io thread for the
/// TCP (newline-delimited JSON) and HTTP/WebSocket front ends. The two sides
/// only meet in the bounded command, event and telemetry queues.
///
/// Units whose secondary path is configured as "oracle" get the true path and
/// start in their configured mode; the others wait in Idle for a calibrate
/// command.
class Server {
public:
    Server(Scenario scenario, ServeOptions opt)
        : scenario_(std::move(scenario)),
          opt_(std::move(opt)),
          hub_(scenario_.units.size(), opt_),
          tcp_acc_(io_),
          http_acc_(io_),
          pump_timer_(io_),
          signals_(io_) {
        if (!(opt_.speed >= 0.0)) throw ConfigError("serve: speed must be >= 0");
        namespace net = serve_detail::net;
        const auto addr = net::ip::make_address(opt_.bind);
        open(tcp_acc_, {addr, opt_.tcp_port}, "tcp");
        open(http_acc_, {addr, opt_.http_port}, "http");
    }

    ~Server() { stop(); }
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    unsigned short tcp_port() const { return tcp_acc_.local_endpoint().port(); }
    unsigned short http_port() const { return http_acc_.local_endpoint().port(); }
    double sim_time() const { return hub_.sim_time.load(); }
    std::uint64_t telemetry_dropped() const { return hub_.telemetry.dropped(); }
    std::string log_text(std::uint64_t since = 0) const { return hub_.log_text(since); }
    std::size_t subscribers() const { return hub_.broker.subscriber_count(); }

    void start() {
        if (started_) return;
        started_ = true;
        accept_tcp();
        accept_http();
        schedule_pump();
        if (opt_.handle_signals) {
            signals_.add(SIGINT);
            signals_.add(SIGTERM);
            signals_.async_wait([this](boost::system::error_code ec, int) {
                if (!ec) request_stop();
            });
        }
        dsp_ = std::thread([this] { dsp_loop(); });
        io_thread_ = std::thread([this] { io_.run(); });
    }

    /// Asks the server to stop; returns immediately.
    void request_stop() {
        {
            std::lock_guard lock(m_);
            stop_requested_ = true;
        }
        cv_.notify_all();
    }

    /// Blocks until request_stop() is called (or a signal arrives).
    void wait() {
        std::unique_lock lock(m_);
        cv_.wait(lock, [this] { return stop_requested_; });
    }

    /// Stops the simulation, flushes everything produced so far and closes the ports.
    void stop() {
        if (!started_ || stopped_) return;
        stopped_ = true;
        request_stop();
        if (dsp_.joinable()) dsp_.join();
        std::promise<void> done;
        auto fut = done.get_future();
        serve_detail::net::post(io_, [this, &done] {
            hub_.pump();
            boost::system::error_code ec;
            tcp_acc_.close(ec);
            http_acc_.close(ec);
            pump_timer_.cancel();
            signals_.cancel(ec);
            done.set_value();
        });
        fut.wait_for(std::chrono::seconds(5));
        io_.stop();
        if (io_thread_.joinable()) io_thread_.join();
    }

private:
    template <typename Acceptor>
    static void open(Acceptor& acc, const serve_detail::tcp::endpoint& ep, const char* what) {
        boost::system::error_code ec;
        acc.open(ep.protocol(), ec);
        if (!ec) acc.set_option(serve_detail::net::socket_base::reuse_address(true), ec);
        if (!ec) acc.bind(ep, ec);
        if (ec == boost::asio::error::address_in_use) {
            throw PortInUse(std::string(what) + " port " + std::to_string(ep.port()) + " is already in use");
        }
        if (!ec) acc.listen(serve_detail::net::socket_base::max_listen_connections, ec);
        if (ec) throw ConfigError(std::string("cannot listen on ") + what + " port: " + ec.message());
    }

    void accept_tcp() {
        tcp_acc_.async_accept([this](boost::system::error_code ec, serve_detail::tcp::socket s) {
            if (ec) return;
            std::make_shared<serve_detail::TcpSession>(hub_, std::move(s), opt_.session_queue)->start();
            accept_tcp();
        });
    }

    void accept_http() {
        http_acc_.async_accept([this](boost::system::error_code ec, serve_detail::tcp::socket s) {
            if (ec) return;
            std::make_shared<serve_detail::HttpSession>(hub_, std::move(s))->start();
            accept_http();
        });
    }

    void schedule_pump() {
        pump_timer_.expires_after(std::chrono::milliseconds(5));
        pump_timer_.async_wait([this](boost::system::error_code ec) {
            if (ec) return;
            hub_.pump();
            schedule_pump();
        });
    }

    bool stopping() {
        std::lock_guard lock(m_);
        return stop_requested_;
    }

    // Sleeps until the deadline or a stop request.
    void sleep_until(std::chrono::steady_clock::time_point t) {
        std::unique_lock lock(m_);
        cv_.wait_until(lock, t, [this] { return stop_requested_; });
    }

    void push_event(Envelope e) {
        if (!hub_.events.try_push(std::move(e))) ++events_dropped_;
    }

    void dsp_loop() {
        EngineOptions eo;
        eo.telemetry_hz = scenario_.telemetry_hz;
        Engine eng(scenario_.topology, scenario_.units, eo);
        for (std::size_t u = 0; u < eng.num_units(); ++u) {
            if (scenario_.units[u].secondary_path.method == SecondaryPathSetup::Method::Oracle) eng.use_oracle_path(u);
        }
        eng.mark_origin();
        for (std::size_t u = 0; u < eng.num_units(); ++u) {
            const auto& s = scenario_.units[u];
            if (!s.start_running || !eng.state(u).calibrated()) continue;
            const char* mode = s.controller.mode == ControlMode::Feedforward ? "feedforward" : "feedback";
            eng.apply_command(static_cast<unsigned>(u), {{"cmd", "set_mode"}, {"mode", mode}});
        }

        using clock = std::chrono::steady_clock;
        const auto wall0 = clock::now();
        const double period_s = 1.0 / scenario_.telemetry_hz;
        std::uint64_t paused_ticks = 0;
        while (!stopping()) {
            while (auto c = hub_.commands.try_pop()) {
                nlohmann::json ack{{"cmd", c->payload.is_object() ? c->payload.value("cmd", std::string{}) : std::string{}},
                                   {"cmd_seq", c->seq},
                                   {"t_received", c->t_received},
                                   {"t", eng.time()}};
                try {
                    const auto out = eng.apply_command(c->unit, c->payload);
                    ack["ok"] = out.ok;
                    ack["state"] = std::string(to_string(out.state));
                    if (!out.ok) ack["error"] = out.reason;
                    if (!out.detail.empty()) ack["detail"] = out.detail;
                } catch (const std::exception& ex) {
                    ack["ok"] = false;
                    ack["error"] = std::string("internal: ") + ex.what();
                }
                push_event({unit_topic(c->unit, "ack"), 0, std::move(ack)});
            }

            if (opt_.speed > 0.0) {
                eng.advance(eng.telemetry_period());
                for (const auto& f : eng.drain_telemetry()) hub_.telemetry.try_push(telemetry_envelope(f, 0));
                for (auto& ev : eng.drain_events()) {
                    nlohmann::json p = ev.detail;
                    p["type"] = ev.type;
                    p["t"] = eng.time();
                    push_event({unit_topic(ev.unit, "event"), 0, std::move(p)});
                }
                hub_.sim_time.store(eng.time());
                const auto due = wall0 + std::chrono::duration_cast<clock::duration>(
                                             std::chrono::duration<double>(eng.time() / opt_.speed));
                if (due > clock::now()) sleep_until(due);
            } else {
                // Paused: the clock is frozen but the cadence of snapshots continues.
                for (std::size_t u = 0; u < eng.num_units(); ++u) {
                    hub_.telemetry.try_push(telemetry_envelope(eng.snapshot(u), 0));
                }
                ++paused_ticks;
                sleep_until(wall0 + std::chrono::duration_cast<clock::duration>(
                                        std::chrono::duration<double>(paused_ticks * period_s)));
            }
        }
    }

    Scenario scenario_;
    ServeOptions opt_;
    serve_detail::Hub hub_;
    serve_detail::net::io_context io_;
    serve_detail::tcp::acceptor tcp_acc_;
    serve_detail::tcp::acceptor http_acc_;
    serve_detail::net::steady_timer pump_timer_;
    serve_detail::net::signal_set signals_;
    std::thread dsp_;
    std::thread io_thread_;
    std::mutex m_;
    std::condition_variable cv_;
    bool stop_requested_ = false;
    bool started_ = false;
    bool stopped_ = false;
    std::uint64_t events_dropped_ = 0;
};

} // namespace ancsim
