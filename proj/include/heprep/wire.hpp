#pragma once

// Live transport: newline-delimited JSON frames over TCP, and the same
// frames as WebSocket text messages on port+1 at /heprep.

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "heprep/error.hpp"
#include "heprep/json_codec.hpp"
#include "heprep/session.hpp"

namespace heprep::wire {

enum class WireError : int {
    Parse = 1,
    UnknownMethod = 2,
    BadParams = 3,
    InvalidPath = 4,
    UnknownAction = 5,
    ActionFailed = 6,
    State = 7,
    Internal = 8,
};

inline constexpr std::string_view kProtocolVersion = "1";
inline constexpr std::uint16_t kDefaultPort = 7707;
inline constexpr std::string_view kWebSocketPath = "/heprep";

WireError wire_error_for(ErrorCode code);

using Logger = std::function<void(const std::string&)>;

/// Decodes request frames and runs them against one shared session.
/// Mutations are serialized; queries filter an immutable snapshot of the
/// current document outside the lock.
class Dispatcher {
  public:
    explicit Dispatcher(Session& session, Logger log = {});

    /// Full request/response cycle for one frame (no trailing newline).
    std::string handle_frame(std::string_view line);
    Json handle(const Json& request);

    static const std::vector<std::string>& methods();

  private:
    Json call(const std::string& method, const Json& params);
    std::shared_ptr<const Document> snapshot();

    Session& session_;
    Logger log_;
    std::mutex mutex_;
};

struct ServerConfig {
    std::string bindAddress = "127.0.0.1";
    /// TCP port; WebSocket listens on port+1. Port 0 picks ephemeral ports
    /// for both.
    std::uint16_t port = kDefaultPort;
    unsigned threads = 4;
};

class Server {
  public:
    Server(Session& session, ServerConfig config, Logger log = {});
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds both listeners and starts the worker threads. Throws
    /// Error(IoError) when either address cannot be bound.
    void start();
    void stop();

    std::uint16_t tcp_port() const;
    std::uint16_t ws_port() const;
    Dispatcher& dispatcher() { return dispatcher_; }

  private:
    struct Impl;

    Dispatcher dispatcher_;
    ServerConfig config_;
    Logger log_;
    std::unique_ptr<Impl> impl_;
};

/// Blocking TCP client, one outstanding request at a time.
class Client {
  public:
    Client(const std::string& host, std::uint16_t port);
    ~Client();
    Client(const Client&) = delete;
    Client& operator=(const Client&) = delete;

    /// Sends {"id", "method", "params"} and returns the whole response object.
    Json request(std::string_view method, const Json& params = Json::object());
    /// Sends one raw line and reads one response line.
    std::string exchange(std::string_view line);
    /// Writes a line without waiting for the reply.
    void send_line(std::string_view line);
    std::string read_line();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::int64_t nextId_ = 1;
};

}  // namespace heprep::wire
