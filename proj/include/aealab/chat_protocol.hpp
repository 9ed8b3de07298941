#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aealab::protocol {

enum class Role { system, user, assistant };

const char* to_string(Role role) noexcept;
std::optional<Role> role_from_string(std::string_view text) noexcept;

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// Inbound wire subset: {model, messages[{role,content}], stream:false}.
/// Unknown top-level fields ride along in `extra` and are re-emitted on
/// serialization so the gateway can pass them through untouched.
struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    bool stream = false;
    nlohmann::json extra = nlohmann::json::object();

    friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

enum class FinishReason { stop, length };

const char* to_string(FinishReason reason) noexcept;

/// Outbound wire subset: {id, choices[0].message, finish_reason}.
struct ChatResponse {
    std::string id;
    ChatMessage message{Role::assistant, ""};
    FinishReason finish_reason = FinishReason::stop;

    friend bool operator==(const ChatResponse&, const ChatResponse&) = default;
};

/// Lowercased, punctuation-free word tokens. The matching primitive for
/// retrieval, FAQ lookup and payload overlap.
struct NormalizedText {
    std::vector<std::string> tokens;

    bool empty() const noexcept { return tokens.empty(); }
    std::string joined() const;

    friend bool operator==(const NormalizedText&, const NormalizedText&) = default;
};

/// Throws Error{malformed_json} on unparseable bytes and
/// Error{schema_violation} on anything outside the wire subset. Never
/// crashes on arbitrary input.
ChatRequest parse_chat_request(std::string_view raw);

/// Deterministic bytes; parse_chat_request(serialize_chat_request(r)) == r.
std::string serialize_chat_request(const ChatRequest& request);

ChatResponse parse_chat_response(std::string_view raw);

/// Deterministic bytes, injective on (id, message, finish_reason).
std::string serialize_chat_response(const ChatResponse& response);

/// Simple case folding (ASCII + Latin-1), Unicode punctuation stripped,
/// whitespace runs collapsed, tokens split on whitespace. Invalid UTF-8
/// bytes act as separators.
NormalizedText normalize_text(std::string_view text);

} // namespace aealab::protocol
