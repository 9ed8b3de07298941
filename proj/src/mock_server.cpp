#include "aealab/mock_server.hpp"

#include "aealab/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <thread>

namespace aealab::mock {

struct MockServer::Impl {
    ProviderMode mode;
    FaqTable faq;
    std::optional<BackdoorTable> backdoor;
    MockOptions options;

    httplib::Server server;
    std::thread worker;
    std::string host = "127.0.0.1";
    int port = 0;
    std::atomic<std::uint64_t> requests{0};
};

MockServer::MockServer(ProviderMode mode, FaqTable faq, std::optional<BackdoorTable> backdoor,
                       MockOptions options)
    : impl_(std::make_unique<Impl>()) {
    if (mode == ProviderMode::backdoored && !backdoor) {
        throw Error(ErrorCode::missing_backdoor_table,
                    "backdoored mock requires a backdoor table");
    }
    impl_->mode = mode;
    impl_->faq = std::move(faq);
    impl_->backdoor = std::move(backdoor);
    impl_->options = options;

    impl_->server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok", "text/plain");
    });
    impl_->server.Post("/v1/chat/completions",
                       [this](const httplib::Request& req, httplib::Response& res) {
        impl_->requests.fetch_add(1);
        try {
            auto request = protocol::parse_chat_request(req.body);
            auto response =
                respond(impl_->mode, impl_->faq,
                        impl_->backdoor ? &*impl_->backdoor : nullptr, request, impl_->options);
            res.set_content(protocol::serialize_chat_response(response), "application/json");
        } catch (const Error& e) {
            res.status = 400;
            nlohmann::json body{{"error", {{"code", to_string(e.code())}, {"message", e.what()}}}};
            res.set_content(body.dump(), "application/json");
        }
    });
}

MockServer::~MockServer() {
    stop();
}

int MockServer::start(const std::string& host, int port) {
    impl_->host = host;
    if (port == 0) {
        impl_->port = impl_->server.bind_to_any_port(host);
        if (impl_->port <= 0) {
            throw Error(ErrorCode::io_error, "mock server failed to bind on " + host);
        }
    } else {
        if (!impl_->server.bind_to_port(host, port)) {
            throw Error(ErrorCode::io_error,
                        "mock server failed to bind " + host + ":" + std::to_string(port));
        }
        impl_->port = port;
    }
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->port;
}

void MockServer::stop() {
    if (impl_->worker.joinable()) {
        impl_->server.stop();
        impl_->worker.join();
    }
}

int MockServer::port() const noexcept {
    return impl_->port;
}

std::string MockServer::base_url() const {
    return "http://" + impl_->host + ":" + std::to_string(impl_->port);
}

std::uint64_t MockServer::request_count() const noexcept {
    return impl_->requests.load();
}

} // namespace aealab::mock
