#pragma once

#include "aealab/attack_store.hpp"
#include "aealab/chat_protocol.hpp"
#include "aealab/prompt_pipeline.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace aealab::gateway {

struct UpstreamTarget {
    std::string base_url;
    std::chrono::milliseconds timeout{5000};
    int max_retries = 2;
};

struct MiddlewareConfig {
    bool attack_enabled = false;
    bool defense_enabled = false;
    std::optional<std::string> outbound_link_append;
    int retrieval_k = 3;
    double retrieval_theta = 0.3;
    std::string attack_template_path; // empty = bundled default
    std::string defense_text_path;    // empty = bundled default

    // Resolved texts; resolve_texts() fills them from the paths or the
    // bundled defaults.
    std::string attack_template;
    std::string defense_text;

    void resolve_texts();
    void validate() const;
};

enum class Stage { inbound, outbound };

const char* to_string(Stage stage) noexcept;

/// Before/after snapshot of one middleware rewrite. For inbound records the
/// before/after texts are the canonical JSON of the message list; outbound
/// records snapshot the assistant content.
struct AuditRecord {
    std::string request_id;
    std::string timestamp;
    Stage stage = Stage::inbound;
    std::string before;
    std::string after;
    std::vector<prompt::SegmentLabel> trace;
    std::vector<std::string> selected_entry_ids;
    std::string error; // non-empty when middleware degraded to pass-through

    nlohmann::json to_json() const;
};

/// Append-only JSONL sink, one record per line, flushed per append. All
/// writers funnel through one mutex.
class AuditLog {
public:
    explicit AuditLog(const std::string& path);

    void append(const AuditRecord& record);
    /// Appends inbound then outbound atomically with respect to other
    /// requests.
    void append_pair(const AuditRecord& inbound, const AuditRecord& outbound);

    const std::string& path() const noexcept { return path_; }

private:
    void write_locked(const AuditRecord& record);

    std::string path_;
    std::mutex mutex_;
};

/// Inbound middleware: retrieval + attack/defense injection. Never throws;
/// composition failures degrade to pass-through with the audit record
/// carrying the error note.
std::pair<protocol::ChatRequest, AuditRecord> apply_inbound(const MiddlewareConfig& config,
                                                            const attack::AttackStore& store,
                                                            const protocol::ChatRequest& request,
                                                            const std::string& request_id);

/// Outbound middleware: optional "Learn more: <URL>" sentence append.
std::pair<protocol::ChatResponse, AuditRecord> apply_outbound(
    const MiddlewareConfig& config, const protocol::ChatResponse& response,
    const std::string& request_id);

/// POSTs the request to <base_url>/v1/chat/completions. Retries connection
/// failures up to max_retries with full-jitter backoff. Throws
/// Error{upstream_timeout|upstream_unavailable|upstream_malformed}.
protocol::ChatResponse forward_upstream(const UpstreamTarget& target,
                                        const protocol::ChatRequest& request);

struct GatewayConfig {
    std::string listen = "127.0.0.1:8080";
    UpstreamTarget upstream;
    std::string audit_log_path = "audit.jsonl";
    std::string attack_data_path; // empty = empty store
    MiddlewareConfig middleware;

    static GatewayConfig from_json(const nlohmann::json& doc);
    static GatewayConfig load_file(const std::string& path);
};

struct HandleResult {
    int status = 200;
    std::string body;
};

/// The proxy pipeline around one upstream: parse, rewrite, forward, tamper,
/// audit. Middleware/upstream snapshots swap atomically, so handlers may run
/// concurrently with reconfiguration.
class Gateway {
public:
    Gateway(GatewayConfig config, attack::AttackStore store);

    HandleResult handle(std::string_view raw);

    void set_middleware(MiddlewareConfig middleware);
    void set_upstream(UpstreamTarget upstream);
    void set_store(attack::AttackStore store);

    const std::string& listen_address() const noexcept { return listen_; }
    AuditLog& audit_log() noexcept { return audit_log_; }

private:
    struct Snapshot {
        MiddlewareConfig middleware;
        UpstreamTarget upstream;
        std::shared_ptr<const attack::AttackStore> store;
    };

    std::shared_ptr<const Snapshot> snapshot() const;

    std::string listen_;
    AuditLog audit_log_;
    mutable std::mutex mutex_;
    std::shared_ptr<const Snapshot> state_;
    std::atomic<std::uint64_t> next_request_{0};
};

} // namespace aealab::gateway
