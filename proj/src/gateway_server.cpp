#include "aealab/gateway_server.hpp"

#include "aealab/error.hpp"

#include <httplib.h>

#include <thread>

namespace aealab::gateway {

struct GatewayServer::Impl {
    Gateway* gateway = nullptr;
    httplib::Server server;
    std::thread worker;
    std::string host = "127.0.0.1";
    int port = 0;
};

GatewayServer::GatewayServer(Gateway& gateway) : impl_(std::make_unique<Impl>()) {
    impl_->gateway = &gateway;
    impl_->server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok", "text/plain");
    });
    impl_->server.Post("/v1/chat/completions",
                       [this](const httplib::Request& req, httplib::Response& res) {
        HandleResult result = impl_->gateway->handle(req.body);
        res.status = result.status;
        res.set_content(result.body, "application/json");
    });
}

GatewayServer::~GatewayServer() {
    stop();
}

int GatewayServer::start(const std::string& host, int port) {
    impl_->host = host;
    if (port == 0) {
        impl_->port = impl_->server.bind_to_any_port(host);
        if (impl_->port <= 0) {
            throw Error(ErrorCode::io_error, "gateway failed to bind on " + host);
        }
    } else {
        if (!impl_->server.bind_to_port(host, port)) {
            throw Error(ErrorCode::io_error,
                        "gateway failed to bind " + host + ":" + std::to_string(port));
        }
        impl_->port = port;
    }
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->port;
}

void GatewayServer::stop() {
    if (impl_->worker.joinable()) {
        impl_->server.stop();
        impl_->worker.join();
    }
}

int GatewayServer::port() const noexcept {
    return impl_->port;
}

std::string GatewayServer::base_url() const {
    return "http://" + impl_->host + ":" + std::to_string(impl_->port);
}

std::pair<std::string, int> split_listen_address(const std::string& listen) {
    auto colon = listen.rfind(':');
    if (colon == std::string::npos) return {listen, 8080};
    std::string host = listen.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(listen.substr(colon + 1));
    } catch (...) {
        throw Error(ErrorCode::invalid_config, "bad listen address: " + listen);
    }
    if (host.empty() || port <= 0 || port > 65535) {
        throw Error(ErrorCode::invalid_config, "bad listen address: " + listen);
    }
    return {host, port};
}

} // namespace aealab::gateway
