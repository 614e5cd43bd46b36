#include "speeji/service/http_server.hpp"

#include "speeji/errors.hpp"
#include "speeji/render.hpp"
#include "speeji/service/http_util.hpp"

#include <poll.h>
#include <sys/socket.h>

#include <atomic>
#include <charconv>
#include <iostream>
#include <list>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>
#include <json.hpp>

namespace speeji::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

constexpr std::string_view kServerName = "speeji";

Response make_response(const Request& req, http::status status, std::string body, std::string_view type) {
    Response res{status, req.version()};
    res.set(http::field::server, kServerName);
    res.set(http::field::content_type, type);
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
}

Response json_response(const Request& req, http::status status, std::string body) {
    return make_response(req, status, std::move(body), "application/json");
}

Response error_response(const Request& req, int status, std::string_view message) {
    nlohmann::ordered_json j;
    j["error"] = {{"status", status}, {"message", message}};
    return json_response(req, static_cast<http::status>(status), j.dump());
}

template <typename T>
std::string json_array(const std::vector<T>& items) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ',';
        out += to_json(items[i]);
    }
    return out + "]";
}

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> out;
    while (!path.empty()) {
        if (path.front() == '/') {
            path.remove_prefix(1);
            continue;
        }
        const std::size_t slash = path.find('/');
        out.emplace_back(path.substr(0, slash));
        path = slash == std::string_view::npos ? std::string_view{} : path.substr(slash);
    }
    return out;
}

int int_param(const Target& t, const std::string& key, int fallback) {
    auto it = t.query.find(key);
    if (it == t.query.end()) return fallback;
    int v = 0;
    const auto& s = it->second;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) {
        throw ServiceError(ServiceError::Code::BadRequest, fmt::format("{} must be an integer", key));
    }
    return v;
}

}  // namespace

struct HttpServer::Impl {
    struct Connection {
        explicit Connection(tcp::socket s) : socket(std::move(s)) {}
        tcp::socket socket;
        std::thread thread;
        std::atomic<bool> done{false};
    };

    Impl(MessageService& s, const std::string& host, std::uint16_t port)
        : service(s), acceptor(ioc, tcp::endpoint(net::ip::make_address(host), port)) {
        const auto ep = acceptor.local_endpoint();
        bound_port = ep.port();
        bound_address = fmt::format("http://{}:{}", ep.address().to_string(), bound_port);
        do_accept();
        accept_thread = std::thread([this] { ioc.run(); });
    }

    void do_accept() {
        acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            spawn(std::move(socket));
            do_accept();
        });
    }

    void spawn(tcp::socket socket) {
        std::lock_guard lock(mutex);
        for (auto it = connections.begin(); it != connections.end();) {
            if ((*it)->done) {
                (*it)->thread.join();
                it = connections.erase(it);
            } else {
                ++it;
            }
        }
        if (stopping) return;
        auto conn = std::make_unique<Connection>(std::move(socket));
        Connection* raw = conn.get();
        conn->thread = std::thread([this, raw] {
            session(*raw);
            raw->done = true;
        });
        connections.push_back(std::move(conn));
    }

    void stop() {
        {
            std::lock_guard lock(mutex);
            if (stopping) return;
            stopping = true;
        }
        net::post(ioc, [this] {
            beast::error_code ec;
            acceptor.close(ec);
        });
        accept_thread.join();
        std::list<std::unique_ptr<Connection>> open;
        {
            std::lock_guard lock(mutex);
            // Sockets are only closed by their owner here, so every handle is
            // still valid; shutdown wakes threads blocked in read.
            for (auto& c : connections) ::shutdown(c->socket.native_handle(), SHUT_RDWR);
            open.swap(connections);
        }
        for (auto& c : open) c->thread.join();
    }

    void session(Connection& c) {
        beast::flat_buffer buffer;
        beast::error_code ec;
        for (;;) {
            http::request_parser<http::string_body> parser;
            parser.body_limit(kMaxRequestBytes);
            http::read_header(c.socket, buffer, parser, ec);
            if (!ec && parser.get()[http::field::expect] == "100-continue") {
                http::response<http::empty_body> cont{http::status::continue_, 11};
                http::write(c.socket, cont, ec);
            }
            if (!ec) http::read(c.socket, buffer, parser, ec);
            if (ec == http::error::body_limit) {
                Request stub;
                stub.version(11);
                auto res = error_response(stub, 413, "request body too large");
                res.keep_alive(false);
                http::write(c.socket, res, ec);
                break;
            }
            if (ec) break;

            Request req = parser.release();
            if (websocket::is_upgrade(req)) {
                websocket_session(c, std::move(req));
                break;
            }
            Response res = handle(req);
            http::write(c.socket, res, ec);
            if (ec || !res.keep_alive()) break;
        }
        c.socket.shutdown(tcp::socket::shutdown_both, ec);
    }

    void websocket_session(Connection& c, Request req) {
        beast::error_code ec;
        const Target target = parse_target(req.target());
        std::shared_ptr<Subscription> sub;
        try {
            auto it = target.query.find("conversation");
            if (target.path != "/api/ws" || it == target.query.end()) {
                throw ServiceError(ServiceError::Code::NotFound, "websocket endpoint is /api/ws?conversation=<id>");
            }
            sub = service.subscribe(it->second);
        } catch (const ServiceError& e) {
            auto res = error_response(req, e.http_status(), e.what());
            res.keep_alive(false);
            http::write(c.socket, res, ec);
            return;
        }

        websocket::stream<tcp::socket&> ws(c.socket);
        ws.set_option(websocket::stream_base::decorator(
            [](websocket::response_type& res) { res.set(http::field::server, kServerName); }));
        ws.accept(req, ec);
        if (ec) return;
        ws.text(true);

        while (!stopping) {
            if (auto e = sub->next(std::chrono::milliseconds(50))) {
                ws.write(net::buffer(to_json(*e)), ec);
                if (ec) return;
                continue;
            }
            if (sub->closed()) {
                const auto reason = sub->overflowed()
                                        ? websocket::close_reason(websocket::close_code::policy_error, "subscriber too slow")
                                        : websocket::close_reason(websocket::close_code::going_away);
                ws.close(reason, ec);
                return;
            }
            // Client frames are ignored, but reading them answers pings and
            // notices close frames and dropped connections.
            pollfd p{c.socket.native_handle(), POLLIN, 0};
            if (::poll(&p, 1, 0) > 0) {
                beast::flat_buffer incoming;
                ws.read(incoming, ec);
                if (ec) return;
            }
        }
        ws.close(websocket::close_code::going_away, ec);
    }

    Response handle(const Request& req) {
        try {
            if (req.method() == http::verb::options) {
                Response res = make_response(req, http::status::no_content, "", "text/plain");
                res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
                res.set(http::field::access_control_allow_headers, "Content-Type");
                return res;
            }
            return route(req);
        } catch (const ServiceError& e) {
            return error_response(req, e.http_status(), e.what());
        } catch (const InputError& e) {
            return error_response(req, 400, e.what());
        } catch (const std::exception& e) {
            std::cerr << fmt::format("speeji: {} {} failed: {}\n", std::string_view(req.method_string()),
                                     std::string_view(req.target()), e.what());
            return error_response(req, 500, "internal error");
        }
    }

    Response route(const Request& req) {
        const Target target = parse_target(req.target());
        const auto parts = split_path(target.path);
        const bool get = req.method() == http::verb::get || req.method() == http::verb::head;
        const bool post = req.method() == http::verb::post;

        auto not_found = [&] { return error_response(req, 404, fmt::format("no route for {}", target.path)); };
        auto wrong_method = [&] { return error_response(req, 405, "method not allowed"); };
        if (parts.size() < 2 || parts[0] != "api") return not_found();

        if (parts[1] == "conversations") {
            if (parts.size() == 2) {
                if (post) return create_conversation(req);
                if (get) return json_response(req, http::status::ok, json_array(service.list_conversations()));
                return wrong_method();
            }
            if (parts.size() == 4 && parts[3] == "messages") {
                if (post) return post_message(req, parts[2]);
                if (get) return list_messages(req, target, parts[2]);
                return wrong_method();
            }
            return not_found();
        }
        if (parts[1] == "messages" && parts.size() >= 3 && parts.size() <= 4) {
            if (!get) return wrong_method();
            const std::string& mid = parts[2];
            if (parts.size() == 3) return json_response(req, http::status::ok, to_json(service.get_message(mid)));
            if (parts[3] == "audio") {
                const auto bytes = service.message_audio(mid);
                return make_response(req, http::status::ok, std::string(bytes.begin(), bytes.end()), "audio/wav");
            }
            if (parts[3] == "waveform.svg") return waveform(req, target, mid);
            return not_found();
        }
        if (parts[1] == "ws" && parts.size() == 2) {
            return error_response(req, 400, "websocket upgrade required");
        }
        return not_found();
    }

    Response create_conversation(const Request& req) {
        std::string title;
        if (!req.body().empty()) {
            const auto j = nlohmann::json::parse(req.body(), nullptr, false);
            if (j.is_discarded() || !j.is_object()) {
                throw ServiceError(ServiceError::Code::BadRequest, "body must be a JSON object");
            }
            if (j.contains("title")) {
                if (!j["title"].is_string()) throw ServiceError(ServiceError::Code::BadRequest, "title must be a string");
                title = j["title"].get<std::string>();
            }
        }
        return json_response(req, http::status::created, to_json(service.create_conversation(std::move(title))));
    }

    Response list_messages(const Request& req, const Target& target, const std::string& cid) {
        std::optional<Timestamp> since;
        if (auto it = target.query.find("since"); it != target.query.end()) {
            since = parse_rfc3339(it->second);
            if (!since) throw ServiceError(ServiceError::Code::BadRequest, "since must be an RFC 3339 timestamp");
        }
        return json_response(req, http::status::ok, json_array(service.list_messages(cid, since)));
    }

    Response post_message(const Request& req, const std::string& cid) {
        const auto parts = parse_multipart(req[http::field::content_type], req.body());
        const FormPart* audio = nullptr;
        const FormPart* sender = nullptr;
        for (const auto& p : parts) {
            if (p.name == "audio" && audio == nullptr) audio = &p;
            if (p.name == "sender" && sender == nullptr) sender = &p;
        }
        if (audio == nullptr) throw ServiceError(ServiceError::Code::BadRequest, "multipart field audio is required");
        if (sender == nullptr) throw ServiceError(ServiceError::Code::BadRequest, "multipart field sender is required");
        const auto* data = reinterpret_cast<const std::uint8_t*>(audio->data.data());
        const auto m = service.post_message(cid, sender->data, std::span(data, audio->data.size()));
        return json_response(req, http::status::accepted, to_json(m));
    }

    Response waveform(const Request& req, const Target& target, const std::string& mid) {
        const auto m = service.get_message(mid);
        if (!m.descriptor) throw ServiceError(ServiceError::Code::Conflict, "message is still processing");
        RenderOptions opts;
        opts.width_px = int_param(target, "width", opts.width_px);
        opts.height_px = int_param(target, "height", opts.height_px);
        const int seg = int_param(target, "segments", 0);
        if (seg != 0 && seg != 1) throw ServiceError(ServiceError::Code::BadRequest, "segments must be 0 or 1");
        opts.show_segments = seg == 1;
        return make_response(req, http::status::ok, render_svg(*m.descriptor, opts), "image/svg+xml");
    }

    MessageService& service;
    net::io_context ioc;
    tcp::acceptor acceptor;
    std::thread accept_thread;
    std::mutex mutex;
    std::list<std::unique_ptr<Connection>> connections;
    std::atomic<bool> stopping{false};
    std::uint16_t bound_port = 0;
    std::string bound_address;
};

HttpServer::HttpServer(MessageService& service, const std::string& host, std::uint16_t port)
    : impl_(std::make_unique<Impl>(service, host, port)) {}

HttpServer::~HttpServer() { stop(); }

std::uint16_t HttpServer::port() const noexcept { return impl_->bound_port; }

std::string HttpServer::address() const { return impl_->bound_address; }

void HttpServer::stop() { impl_->stop(); }

}  // namespace speeji::service
