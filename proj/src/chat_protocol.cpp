#include "aealab/chat_protocol.hpp"

#include "aealab/error.hpp"

#include <array>

namespace aealab::protocol {

using nlohmann::json;

const char* to_string(Role role) noexcept {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

std::optional<Role> role_from_string(std::string_view text) noexcept {
    if (text == "system") return Role::system;
    if (text == "user") return Role::user;
    if (text == "assistant") return Role::assistant;
    return std::nullopt;
}

const char* to_string(FinishReason reason) noexcept {
    return reason == FinishReason::stop ? "stop" : "length";
}

std::string NormalizedText::joined() const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out += ' ';
        out += tokens[i];
    }
    return out;
}

namespace {

[[noreturn]] void schema_error(const std::string& reason) {
    throw Error(ErrorCode::schema_violation, reason);
}

json parse_json_or_throw(std::string_view raw) {
    json doc = json::parse(raw, nullptr, false);
    if (doc.is_discarded()) {
        throw Error(ErrorCode::malformed_json, "input is not valid JSON");
    }
    return doc;
}

std::vector<ChatMessage> parse_messages(const json& doc) {
    if (!doc.contains("messages")) schema_error("missing messages");
    const json& arr = doc.at("messages");
    if (!arr.is_array()) schema_error("messages must be an array");
    if (arr.empty()) schema_error("messages must contain at least one message");

    std::vector<ChatMessage> messages;
    messages.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const json& m = arr[i];
        if (!m.is_object()) schema_error("message " + std::to_string(i) + " must be an object");
        if (!m.contains("role") || !m.at("role").is_string()) {
            schema_error("message " + std::to_string(i) + " missing string role");
        }
        auto role = role_from_string(m.at("role").get_ref<const std::string&>());
        if (!role) schema_error("message " + std::to_string(i) + " has unknown role");
        if (!m.contains("content") || !m.at("content").is_string()) {
            schema_error("message " + std::to_string(i) + " missing string content");
        }
        std::string content = m.at("content").get<std::string>();
        if (content.empty() && *role != Role::assistant) {
            schema_error("message " + std::to_string(i) + " has empty content for non-assistant role");
        }
        if (*role == Role::system && i != 0) {
            schema_error("system message allowed only in leading position");
        }
        messages.push_back({*role, std::move(content)});
    }
    if (messages.back().role != Role::user) schema_error("last message must have role user");
    return messages;
}

json message_to_json(const ChatMessage& message) {
    return json{{"content", message.content}, {"role", to_string(message.role)}};
}

} // namespace

ChatRequest parse_chat_request(std::string_view raw) {
    json doc = parse_json_or_throw(raw);
    if (!doc.is_object()) schema_error("top-level value must be an object");

    ChatRequest request;
    if (!doc.contains("model") || !doc.at("model").is_string()) {
        schema_error("missing string model");
    }
    request.model = doc.at("model").get<std::string>();
    request.messages = parse_messages(doc);

    if (doc.contains("stream")) {
        const json& stream = doc.at("stream");
        if (!stream.is_boolean()) schema_error("stream must be a boolean");
        if (stream.get<bool>()) schema_error("stream=true is not supported");
    }
    request.stream = false;

    for (const auto& [key, value] : doc.items()) {
        if (key == "model" || key == "messages" || key == "stream") continue;
        request.extra[key] = value;
    }
    return request;
}

std::string serialize_chat_request(const ChatRequest& request) {
    json doc = request.extra.is_object() ? request.extra : json::object();
    doc["model"] = request.model;
    doc["stream"] = request.stream;
    json arr = json::array();
    for (const auto& m : request.messages) arr.push_back(message_to_json(m));
    doc["messages"] = std::move(arr);
    return doc.dump();
}

ChatResponse parse_chat_response(std::string_view raw) {
    json doc = parse_json_or_throw(raw);
    if (!doc.is_object()) schema_error("top-level value must be an object");
    if (!doc.contains("id") || !doc.at("id").is_string()) schema_error("missing string id");
    if (!doc.contains("choices") || !doc.at("choices").is_array() || doc.at("choices").empty()) {
        schema_error("missing choices");
    }
    const json& choice = doc.at("choices").at(0);
    if (!choice.is_object() || !choice.contains("message") || !choice.at("message").is_object()) {
        schema_error("choices[0] missing message");
    }
    const json& message = choice.at("message");
    if (!message.contains("role") || message.at("role") != "assistant") {
        schema_error("response message role must be assistant");
    }
    if (!message.contains("content") || !message.at("content").is_string()) {
        schema_error("response message missing string content");
    }
    if (!choice.contains("finish_reason") || !choice.at("finish_reason").is_string()) {
        schema_error("choices[0] missing finish_reason");
    }
    const std::string& reason = choice.at("finish_reason").get_ref<const std::string&>();

    ChatResponse response;
    response.id = doc.at("id").get<std::string>();
    response.message = {Role::assistant, message.at("content").get<std::string>()};
    if (reason == "stop") {
        response.finish_reason = FinishReason::stop;
    } else if (reason == "length") {
        response.finish_reason = FinishReason::length;
    } else {
        schema_error("unknown finish_reason: " + reason);
    }
    return response;
}

std::string serialize_chat_response(const ChatResponse& response) {
    json choice = {
        {"finish_reason", to_string(response.finish_reason)},
        {"index", 0},
        {"message", message_to_json(response.message)},
    };
    json doc = {{"choices", json::array({choice})}, {"id", response.id}};
    return doc.dump();
}

namespace {

// Decodes one UTF-8 codepoint; returns length 0 on an invalid sequence.
struct Decoded {
    char32_t cp;
    int len;
};

Decoded decode_utf8(std::string_view text, std::size_t pos) {
    unsigned char b0 = static_cast<unsigned char>(text[pos]);
    if (b0 < 0x80) return {b0, 1};
    auto cont = [&](std::size_t i) {
        return i < text.size() && (static_cast<unsigned char>(text[i]) & 0xC0) == 0x80;
    };
    if ((b0 & 0xE0) == 0xC0 && cont(pos + 1)) {
        char32_t cp = (char32_t(b0 & 0x1F) << 6) | (text[pos + 1] & 0x3F);
        if (cp >= 0x80) return {cp, 2};
    } else if ((b0 & 0xF0) == 0xE0 && cont(pos + 1) && cont(pos + 2)) {
        char32_t cp = (char32_t(b0 & 0x0F) << 12) | (char32_t(text[pos + 1] & 0x3F) << 6) |
                      (text[pos + 2] & 0x3F);
        if (cp >= 0x800 && (cp < 0xD800 || cp > 0xDFFF)) return {cp, 3};
    } else if ((b0 & 0xF8) == 0xF0 && cont(pos + 1) && cont(pos + 2) && cont(pos + 3)) {
        char32_t cp = (char32_t(b0 & 0x07) << 18) | (char32_t(text[pos + 1] & 0x3F) << 12) |
                      (char32_t(text[pos + 2] & 0x3F) << 6) | (text[pos + 3] & 0x3F);
        if (cp >= 0x10000 && cp <= 0x10FFFF) return {cp, 4};
    }
    return {0, 0};
}

void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

bool is_space_cp(char32_t cp) {
    if (cp == 0x20 || (cp >= 0x09 && cp <= 0x0D)) return true;
    if (cp == 0x85 || cp == 0xA0 || cp == 0x1680) return true;
    if (cp >= 0x2000 && cp <= 0x200B) return true;
    if (cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F || cp == 0x3000) return true;
    return false;
}

// Covered punctuation: ASCII punctuation plus the common Unicode ranges
// (General Punctuation, CJK symbols, fullwidth forms, a few Latin-1 marks).
bool is_punct_cp(char32_t cp) {
    if ((cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) || (cp >= 0x5B && cp <= 0x60) ||
        (cp >= 0x7B && cp <= 0x7E)) {
        return true;
    }
    switch (cp) {
        case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
            return true;
        default: break;
    }
    if (cp >= 0x2010 && cp <= 0x2027) return true;
    if (cp >= 0x2030 && cp <= 0x205E) return true;
    if ((cp >= 0x3001 && cp <= 0x3003) || (cp >= 0x3008 && cp <= 0x3011) ||
        (cp >= 0x3014 && cp <= 0x301F)) {
        return true;
    }
    if ((cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
        (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65)) {
        return true;
    }
    return false;
}

// Simple case folding: ASCII plus the Latin-1 uppercase block.
char32_t fold_cp(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    return cp;
}

} // namespace

NormalizedText normalize_text(std::string_view text) {
    NormalizedText out;
    std::string token;
    auto flush = [&] {
        if (!token.empty()) {
            out.tokens.push_back(std::move(token));
            token.clear();
        }
    };
    std::size_t pos = 0;
    while (pos < text.size()) {
        Decoded d = decode_utf8(text, pos);
        if (d.len == 0) {
            flush();
            ++pos;
            continue;
        }
        pos += d.len;
        if (is_space_cp(d.cp)) {
            flush();
        } else if (!is_punct_cp(d.cp)) {
            encode_utf8(fold_cp(d.cp), token);
        }
    }
    flush();
    return out;
}

} // namespace aealab::protocol
