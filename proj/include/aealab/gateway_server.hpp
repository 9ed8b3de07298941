#pragma once

#include "aealab/gateway.hpp"

#include <memory>
#include <string>

namespace aealab::gateway {

/// HTTP front for a Gateway: POST /v1/chat/completions, GET /healthz.
class GatewayServer {
public:
    explicit GatewayServer(Gateway& gateway);
    ~GatewayServer();

    GatewayServer(const GatewayServer&) = delete;
    GatewayServer& operator=(const GatewayServer&) = delete;

    /// Binds host:port (ephemeral when port=0), serves on a background
    /// thread, returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    void stop();

    int port() const noexcept;
    std::string base_url() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Parses "host:port" (port optional) for the serve CLI.
std::pair<std::string, int> split_listen_address(const std::string& listen);

} // namespace aealab::gateway
