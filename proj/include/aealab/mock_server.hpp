#pragma once

#include "aealab/mock_provider.hpp"

#include <memory>
#include <string>

namespace aealab::mock {

/// Serves respond() over the same HTTP wire subset as a real provider:
/// POST /v1/chat/completions and GET /healthz.
class MockServer {
public:
    MockServer(ProviderMode mode, FaqTable faq, std::optional<BackdoorTable> backdoor,
               MockOptions options = {});
    ~MockServer();

    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    /// Binds 127.0.0.1 (ephemeral port when port=0) and serves on a
    /// background thread. Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    void stop();

    int port() const noexcept;
    std::string base_url() const;

    /// Requests served so far (2xx and errors alike).
    std::uint64_t request_count() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace aealab::mock
