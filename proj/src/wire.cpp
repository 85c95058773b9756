#include "heprep/wire.hpp"

#include <algorithm>
#include <climits>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "heprep/error.hpp"
#include "heprep/query.hpp"

namespace heprep::wire {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using asio::awaitable;
using asio::use_awaitable;
using asio::ip::tcp;

namespace {

constexpr std::size_t kMaxFrameBytes = 16 * 1024 * 1024;

[[noreturn]] void bad_params(const std::string& why) { throw Error(ErrorCode::BadRequest, why); }

void expect_no_params(const std::string& method, const Json& params) {
    if (!params.empty()) bad_params(method + " takes no parameters");
}

Json error_response(const Json& id, WireError code, const std::string& message) {
    return {{"id", id}, {"error", {{"code", static_cast<int>(code)}, {"message", message}}}};
}

std::string dump(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::replace); }

ActionInvocation action_from_json(const Json& j) {
    if (!j.is_object()) bad_params("action must be an object {name, targetPath, args}");
    for (const auto& [key, value] : j.items()) {
        if (key != "name" && key != "targetPath" && key != "args") bad_params("unknown key '" + key + "' in action");
    }
    auto name = j.find("name");
    if (name == j.end() || !name->is_string()) bad_params("action.name must be a string");
    auto target = j.find("targetPath");
    if (target == j.end() || !target->is_string()) bad_params("action.targetPath must be a string such as \"4\"");

    ActionInvocation inv;
    inv.actionName = name->get<std::string>();
    inv.targetPath = InstancePath::parse(target->get<std::string>());
    if (auto args = j.find("args"); args != j.end() && !args->is_null()) {
        if (!args->is_object()) bad_params("action.args must be an object");
        for (const auto& [key, value] : args->items()) {
            AttPayload payload;
            if (value.is_number_integer()) {
                if (value.is_number_unsigned() && value.get<std::uint64_t>() > std::uint64_t(INT64_MAX)) {
                    bad_params("action argument '" + key + "' is out of range");
                }
                payload = value.get<std::int64_t>();
            } else if (value.is_number_float()) {
                payload = value.get<double>();
            } else if (value.is_boolean()) {
                payload = value.get<bool>();
            } else if (value.is_string()) {
                payload = value.get<std::string>();
            } else {
                bad_params("action argument '" + key + "' must be a number, boolean or string");
            }
            if (!inv.args.emplace(key, std::move(payload)).second) bad_params("duplicate action argument '" + key + "'");
        }
    }
    return inv;
}

std::string endpoint_text(const tcp::socket& socket) {
    boost::system::error_code ec;
    auto ep = socket.remote_endpoint(ec);
    if (ec) return "?";
    return ep.address().to_string() + ":" + std::to_string(ep.port());
}

}  // namespace

WireError wire_error_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::BadRequest:
            return WireError::BadParams;
        case ErrorCode::InvalidPath:
            return WireError::InvalidPath;
        case ErrorCode::UnknownAction:
            return WireError::UnknownAction;
        case ErrorCode::BadTarget:
        case ErrorCode::ActionArg:
        case ErrorCode::ActionPrecondition:
        case ErrorCode::DegenerateFit:
        case ErrorCode::UnknownAlgorithm:
            return WireError::ActionFailed;
        case ErrorCode::State:
            return WireError::State;
        default:
            return WireError::Internal;
    }
}

// ---------------------------------------------------------------------------
// Dispatcher

Dispatcher::Dispatcher(Session& session, Logger log) : session_(session), log_(std::move(log)) {}

const std::vector<std::string>& Dispatcher::methods() {
    static const std::vector<std::string> names = {
        "heprep.getTypeTree",      "heprep.getInstanceTreeTop", "heprep.getInstances",  "heprep.getInstancesAfterAction",
        "control.nextEvent",       "control.runAlgorithm",      "control.listActions",  "control.listAlgorithms",
        "control.status",
    };
    return names;
}

std::string Dispatcher::handle_frame(std::string_view line) {
    Json request;
    try {
        request = Json::parse(line.begin(), line.end());
    } catch (const Json::parse_error& e) {
        return dump(error_response(nullptr, WireError::Parse, std::string("malformed JSON: ") + e.what()));
    }
    return dump(handle(request));
}

Json Dispatcher::handle(const Json& request) {
    if (!request.is_object()) return error_response(nullptr, WireError::Parse, "frame must be a JSON object");
    auto idIt = request.find("id");
    if (idIt == request.end() || !idIt->is_number_integer()) {
        return error_response(nullptr, WireError::Parse, "frame needs an integer id");
    }
    const Json& id = *idIt;
    for (const auto& [key, value] : request.items()) {
        if (key != "id" && key != "method" && key != "params") {
            return error_response(id, WireError::Parse, "unknown frame key '" + key + "'");
        }
    }
    auto methodIt = request.find("method");
    if (methodIt == request.end() || !methodIt->is_string()) {
        return error_response(id, WireError::Parse, "frame needs a string method");
    }
    Json params = Json::object();
    if (auto p = request.find("params"); p != request.end() && !p->is_null()) {
        if (!p->is_object()) return error_response(id, WireError::BadParams, "params must be an object");
        params = *p;
    }

    const auto method = methodIt->get<std::string>();
    const auto& known = methods();
    if (std::find(known.begin(), known.end(), method) == known.end()) {
        return error_response(id, WireError::UnknownMethod, "unknown method '" + method + "'");
    }
    try {
        return {{"id", id}, {"result", call(method, params)}};
    } catch (const Error& e) {
        return error_response(id, wire_error_for(e.code()), e.detail());
    } catch (const std::exception& e) {
        return error_response(id, WireError::Internal, e.what());
    }
}

std::shared_ptr<const Document> Dispatcher::snapshot() {
    std::lock_guard lock(mutex_);
    return session_.document();
}

Json Dispatcher::call(const std::string& method, const Json& params) {
    if (method == "heprep.getTypeTree") {
        expect_no_params(method, params);
        return to_json(get_type_tree(*snapshot()));
    }
    if (method == "heprep.getInstanceTreeTop") {
        expect_no_params(method, params);
        return to_json(get_instance_tree_top(*snapshot()));
    }
    if (method == "heprep.getInstances") {
        auto request = request_from_json(params);
        return to_json(get_instances(*snapshot(), request));
    }
    if (method == "heprep.getInstancesAfterAction") {
        auto actionIt = params.find("action");
        if (actionIt == params.end()) bad_params("getInstancesAfterAction needs an action");
        Json rest = params;
        rest.erase("action");
        auto request = request_from_json(rest);
        auto invocation = action_from_json(*actionIt);
        std::shared_ptr<const Document> doc;
        {
            std::lock_guard lock(mutex_);
            session_.apply_action(invocation);
            doc = session_.document();
        }
        if (log_) log_("action " + invocation.actionName + " on " + invocation.targetPath.str() + " applied");
        return to_json(get_instances(*doc, request));
    }
    if (method == "control.nextEvent") {
        expect_no_params(method, params);
        std::int64_t id = 0;
        {
            std::lock_guard lock(mutex_);
            id = session_.next_event();
        }
        if (log_) log_("nextEvent -> eventId " + std::to_string(id));
        return {{"eventId", id}};
    }
    if (method == "control.runAlgorithm") {
        for (const auto& [key, value] : params.items()) {
            if (key != "name") bad_params("unknown key '" + key + "' in runAlgorithm params");
        }
        auto name = params.find("name");
        if (name == params.end() || !name->is_string()) bad_params("runAlgorithm needs a string name");
        AlgorithmReport report;
        {
            std::lock_guard lock(mutex_);
            report = session_.run_algorithm(name->get<std::string>());
        }
        if (log_) log_("runAlgorithm " + report.name + ": " + report.summary);
        return {{"name", report.name}, {"status", report.status}, {"report", report.summary}};
    }
    if (method == "control.listActions") {
        expect_no_params(method, params);
        Json actions = Json::array();
        std::lock_guard lock(mutex_);
        for (const auto& spec : session_.actions()) actions.push_back(to_json(spec));
        return {{"actions", actions}};
    }
    if (method == "control.listAlgorithms") {
        expect_no_params(method, params);
        std::lock_guard lock(mutex_);
        return {{"algorithms", session_.algorithms()}};
    }
    if (method == "control.status") {
        expect_no_params(method, params);
        std::lock_guard lock(mutex_);
        return {{"eventId", session_.event_id()}, {"seed", session_.seed()}, {"protocolVersion", kProtocolVersion}};
    }
    throw Error(ErrorCode::State, "method not wired: " + method);
}

// ---------------------------------------------------------------------------
// Server

namespace {

awaitable<void> serve_tcp(tcp::socket socket, Dispatcher& dispatcher, Logger log) {
    const std::string peer = endpoint_text(socket);
    if (log) log("tcp connection from " + peer);
    std::string buffer;
    try {
        for (;;) {
            std::size_t n =
                co_await asio::async_read_until(socket, asio::dynamic_buffer(buffer, kMaxFrameBytes), '\n', use_awaitable);
            std::string line = buffer.substr(0, n - 1);
            buffer.erase(0, n);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") == std::string::npos) continue;
            std::string response = dispatcher.handle_frame(line);
            response.push_back('\n');
            co_await asio::async_write(socket, asio::buffer(response), use_awaitable);
        }
    } catch (const std::exception&) {
    }
    if (log) log("tcp connection from " + peer + " closed");
}

awaitable<void> serve_ws(tcp::socket socket, Dispatcher& dispatcher, Logger log) {
    const std::string peer = endpoint_text(socket);
    try {
        beast::flat_buffer buffer;
        http::request<http::string_body> upgrade;
        co_await http::async_read(socket, buffer, upgrade, use_awaitable);
        std::string_view target(upgrade.target().data(), upgrade.target().size());
        target = target.substr(0, target.find('?'));
        if (!websocket::is_upgrade(upgrade) || target != kWebSocketPath) {
            http::response<http::string_body> res{http::status::not_found, upgrade.version()};
            res.set(http::field::content_type, "text/plain");
            res.body() = "WebSocket endpoint is " + std::string(kWebSocketPath) + "\n";
            res.prepare_payload();
            co_await http::async_write(socket, res, use_awaitable);
            co_return;
        }
        websocket::stream<tcp::socket> ws(std::move(socket));
        ws.read_message_max(kMaxFrameBytes);
        co_await ws.async_accept(upgrade, use_awaitable);
        if (log) log("websocket connection from " + peer);
        for (;;) {
            beast::flat_buffer message;
            co_await ws.async_read(message, use_awaitable);
            std::string line = beast::buffers_to_string(message.data());
            while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
            std::string response = dispatcher.handle_frame(line);
            ws.text(true);
            co_await ws.async_write(asio::buffer(response), use_awaitable);
        }
    } catch (const std::exception&) {
    }
    if (log) log("websocket connection from " + peer + " closed");
}

template <typename Handler>
awaitable<void> accept_loop(tcp::acceptor& acceptor, Handler handler) {
    for (;;) {
        tcp::socket socket(acceptor.get_executor());
        try {
            co_await acceptor.async_accept(socket, use_awaitable);
        } catch (const boost::system::system_error& e) {
            if (e.code() == asio::error::operation_aborted || !acceptor.is_open()) co_return;
            continue;
        }
        asio::co_spawn(acceptor.get_executor(), handler(std::move(socket)), asio::detached);
    }
}

void open_listener(tcp::acceptor& acceptor, const asio::ip::address& address, std::uint16_t port) {
    tcp::endpoint endpoint(address, port);
    boost::system::error_code ec;
    acceptor.open(endpoint.protocol(), ec);
    if (!ec) acceptor.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(endpoint, ec);
    if (!ec) acceptor.listen(asio::socket_base::max_listen_connections, ec);
    if (ec) {
        boost::system::error_code ignored;
        acceptor.close(ignored);
        throw Error(ErrorCode::IoError,
                    "cannot listen on " + address.to_string() + ":" + std::to_string(port) + ": " + ec.message());
    }
}

}  // namespace

struct Server::Impl {
    asio::io_context io;
    tcp::acceptor tcpAcceptor{io};
    tcp::acceptor wsAcceptor{io};
    std::vector<std::thread> threads;
};

Server::Server(Session& session, ServerConfig config, Logger log)
    : dispatcher_(session, log), config_(std::move(config)), log_(std::move(log)) {}

Server::~Server() { stop(); }

void Server::start() {
    if (impl_) throw Error(ErrorCode::State, "server already started");
    auto impl = std::make_unique<Impl>();
    boost::system::error_code ec;
    auto address = asio::ip::make_address(config_.bindAddress, ec);
    if (ec) throw Error(ErrorCode::IoError, "bad bind address '" + config_.bindAddress + "'");
    if (config_.port == 65535) throw Error(ErrorCode::IoError, "port 65535 leaves no room for the WebSocket port");
    open_listener(impl->tcpAcceptor, address, config_.port);
    open_listener(impl->wsAcceptor, address, config_.port == 0 ? 0 : static_cast<std::uint16_t>(config_.port + 1));

    Dispatcher& dispatcher = dispatcher_;
    Logger log = log_;
    asio::co_spawn(impl->io,
                   accept_loop(impl->tcpAcceptor,
                               [&dispatcher, log](tcp::socket s) { return serve_tcp(std::move(s), dispatcher, log); }),
                   asio::detached);
    asio::co_spawn(impl->io,
                   accept_loop(impl->wsAcceptor,
                               [&dispatcher, log](tcp::socket s) { return serve_ws(std::move(s), dispatcher, log); }),
                   asio::detached);
    unsigned n = std::max(1u, config_.threads);
    for (unsigned i = 0; i < n; ++i) impl->threads.emplace_back([io = &impl->io] { io->run(); });
    impl_ = std::move(impl);
}

void Server::stop() {
    if (!impl_) return;
    asio::post(impl_->io, [impl = impl_.get()] {
        boost::system::error_code ignored;
        impl->tcpAcceptor.close(ignored);
        impl->wsAcceptor.close(ignored);
    });
    impl_->io.stop();
    for (auto& t : impl_->threads) t.join();
    impl_.reset();
}

std::uint16_t Server::tcp_port() const {
    if (!impl_) throw Error(ErrorCode::State, "server not started");
    return impl_->tcpAcceptor.local_endpoint().port();
}

std::uint16_t Server::ws_port() const {
    if (!impl_) throw Error(ErrorCode::State, "server not started");
    return impl_->wsAcceptor.local_endpoint().port();
}

// ---------------------------------------------------------------------------
// Client

struct Client::Impl {
    asio::io_context io;
    tcp::socket socket{io};
    std::string buffer;
};

Client::Client(const std::string& host, std::uint16_t port) : impl_(std::make_unique<Impl>()) {
    tcp::resolver resolver(impl_->io);
    boost::system::error_code ec;
    auto endpoints = resolver.resolve(host, std::to_string(port), ec);
    if (!ec) asio::connect(impl_->socket, endpoints, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot connect to " + host + ":" + std::to_string(port) + ": " + ec.message());
}

Client::~Client() = default;

void Client::send_line(std::string_view line) {
    std::string frame(line);
    frame.push_back('\n');
    boost::system::error_code ec;
    asio::write(impl_->socket, asio::buffer(frame), ec);
    if (ec) throw Error(ErrorCode::IoError, "send failed: " + ec.message());
}

std::string Client::read_line() {
    boost::system::error_code ec;
    std::size_t n = asio::read_until(impl_->socket, asio::dynamic_buffer(impl_->buffer), '\n', ec);
    if (ec) throw Error(ErrorCode::IoError, "receive failed: " + ec.message());
    std::string line = impl_->buffer.substr(0, n - 1);
    impl_->buffer.erase(0, n);
    return line;
}

std::string Client::exchange(std::string_view line) {
    send_line(line);
    return read_line();
}

Json Client::request(std::string_view method, const Json& params) {
    Json frame = {{"id", nextId_++}, {"method", method}, {"params", params}};
    return Json::parse(exchange(frame.dump()));
}

}  // namespace heprep::wire
