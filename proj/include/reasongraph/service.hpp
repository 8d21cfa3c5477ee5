#pragma once

#include "reasongraph/error.hpp"
#include "reasongraph/gateway.hpp"
#include "reasongraph/json_io.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace reasongraph {

inline constexpr int default_port = 8765;

struct ApiResponse {
    int status = 200;
    Json body;
};

struct ServiceOptions {
    /// Re-read by reload(); without it reload() only re-checks the environment.
    std::optional<std::filesystem::path> config_path;
    /// Served at "/" when set.
    std::optional<std::filesystem::path> static_dir;
    EnvLookup env = process_env;
    RetryPolicy retry;
    Transport transport = http_transport;
    /// Receives one JSON line per HTTP request; null disables logging.
    std::ostream* log = nullptr;
};

/// HTTP status for an error raised while serving a request.
int status_for(ErrorCode code) noexcept;

/// The REST layer. Handlers are callable directly, which is how the HTTP
/// routes reach them.
class Service {
public:
    explicit Service(std::shared_ptr<const ProviderRegistry> registry, ServiceOptions options = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    ApiResponse methods() const;
    ApiResponse providers() const;
    ApiResponse reason(std::string_view body);
    ApiResponse meta_reason(std::string_view body);
    ApiResponse render(std::string_view body) const;
    ApiResponse reload();

    /// Binds the listener; port 0 picks a free one. Returns the bound port or
    /// throws std::runtime_error.
    int bind(const std::string& host, int port);
    /// Serves until stop(). Requires a successful bind().
    void run();
    void stop();
    /// Blocks until the listener accepts connections or `timeout` passes.
    bool wait_until_ready(std::chrono::milliseconds timeout) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace reasongraph
