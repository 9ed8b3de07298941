#include "aealab/mock_provider.hpp"

#include "aealab/attack_store.hpp"
#include "aealab/error.hpp"
#include "aealab/jsonl.hpp"
#include "aealab/prompts.hpp"
#include "aealab/util.hpp"

#include <string_view>
#include <vector>

namespace aealab::mock {

using protocol::ChatMessage;
using protocol::ChatRequest;
using protocol::ChatResponse;
using protocol::normalize_text;
using protocol::Role;

const char* to_string(ProviderMode mode) noexcept {
    switch (mode) {
        case ProviderMode::clean: return "clean";
        case ProviderMode::susceptible: return "susceptible";
        case ProviderMode::backdoored: return "backdoored";
    }
    return "clean";
}

std::optional<ProviderMode> provider_mode_from_string(std::string_view text) noexcept {
    if (text == "clean") return ProviderMode::clean;
    if (text == "susceptible") return ProviderMode::susceptible;
    if (text == "backdoored") return ProviderMode::backdoored;
    return std::nullopt;
}

void FaqTable::add(std::string_view question, std::string answer, long line) {
    std::string key = normalize_text(question).joined();
    if (key.empty()) {
        throw Error(ErrorCode::parse_error, "question normalizes to nothing", line);
    }
    if (!answers_.emplace(std::move(key), std::move(answer)).second) {
        throw Error(ErrorCode::duplicate_question,
                    "duplicate normalized question: " + std::string(question), line);
    }
}

const std::string* FaqTable::lookup(std::string_view question) const {
    auto it = answers_.find(normalize_text(question).joined());
    return it == answers_.end() ? nullptr : &it->second;
}

FaqTable FaqTable::load(std::istream& in) {
    FaqTable table;
    jsonl::for_each(in, [&](std::size_t line_no, const nlohmann::json& doc) {
        long line = static_cast<long>(line_no);
        for (const char* field : {"question", "answer"}) {
            if (!doc.contains(field) || !doc.at(field).is_string()) {
                throw Error(ErrorCode::parse_error, std::string("missing string field: ") + field,
                            line);
            }
        }
        table.add(doc.at("question").get<std::string>(), doc.at("answer").get<std::string>(),
                  line);
    });
    return table;
}

void BackdoorTable::add(std::string_view trigger, std::string payload, long line) {
    std::string key = normalize_text(trigger).joined();
    if (key.empty()) {
        throw Error(ErrorCode::parse_error, "trigger normalizes to nothing", line);
    }
    if (!payloads_.emplace(std::move(key), std::move(payload)).second) {
        throw Error(ErrorCode::duplicate_trigger,
                    "duplicate normalized trigger: " + std::string(trigger), line);
    }
}

const std::string* BackdoorTable::lookup(std::string_view question) const {
    auto it = payloads_.find(normalize_text(question).joined());
    return it == payloads_.end() ? nullptr : &it->second;
}

BackdoorTable BackdoorTable::load(std::istream& in) {
    BackdoorTable table;
    jsonl::for_each(in, [&](std::size_t line_no, const nlohmann::json& doc) {
        long line = static_cast<long>(line_no);
        for (const char* field : {"trigger", "payload"}) {
            if (!doc.contains(field) || !doc.at(field).is_string()) {
                throw Error(ErrorCode::parse_error, std::string("missing string field: ") + field,
                            line);
            }
        }
        table.add(doc.at("trigger").get<std::string>(), doc.at("payload").get<std::string>(),
                  line);
    });
    return table;
}

namespace {

std::string clean_answer(const FaqTable& faq, const std::string& question) {
    if (const std::string* answer = faq.lookup(question)) return *answer;
    return std::string(prompts::kFallbackAnswer);
}

// An injected data line per the build_attack_block rendering contract.
struct DataLine {
    std::string_view trigger;
    std::string_view payload;
};

std::vector<DataLine> scan_data_lines(std::string_view system_text) {
    std::vector<DataLine> lines;
    std::size_t start = 0;
    while (start <= system_text.size()) {
        std::size_t nl = system_text.find('\n', start);
        std::string_view line = system_text.substr(
            start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        std::size_t sep = line.find(": ");
        if (sep != std::string_view::npos && sep > 0 && sep + 2 < line.size()) {
            lines.push_back({line.substr(0, sep), line.substr(sep + 2)});
        }
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return lines;
}

std::string append_sentence(std::string base, std::string_view addition) {
    if (base.empty()) return std::string(addition);
    char last = base.back();
    if (last != '.' && last != '!' && last != '?') base += '.';
    base += ' ';
    base += addition;
    return base;
}

std::string susceptible_answer(const FaqTable& faq, std::string_view system_text,
                               const std::string& question, double theta) {
    if (system_text.find(prompts::kDefenseMarker) != std::string_view::npos) {
        return clean_answer(faq, question);
    }

    std::string normalized_question = normalize_text(question).joined();
    std::vector<DataLine> lines = scan_data_lines(system_text);
    const DataLine* best = nullptr;
    double best_score = 0.0;
    for (const auto& line : lines) {
        std::string normalized_trigger = normalize_text(line.trigger).joined();
        if (!normalized_trigger.empty() && normalized_trigger == normalized_question) {
            // "use the information from the list as your answer"
            return std::string(line.payload);
        }
        double score = attack::similarity(line.trigger, question);
        if (score >= theta && (!best || score > best_score)) {
            best = &line;
            best_score = score;
        }
    }
    if (!best) return clean_answer(faq, question);
    return append_sentence(clean_answer(faq, question), best->payload);
}

} // namespace

ChatResponse respond(ProviderMode mode, const FaqTable& faq, const BackdoorTable* backdoor,
                     const ChatRequest& request, const MockOptions& options) {
    if (mode == ProviderMode::backdoored && backdoor == nullptr) {
        throw Error(ErrorCode::missing_backdoor_table,
                    "backdoored mode requires a backdoor table");
    }

    const std::string& question = request.messages.back().content;
    std::string_view system_text;
    if (!request.messages.empty() && request.messages.front().role == Role::system) {
        system_text = request.messages.front().content;
    }

    std::string answer;
    switch (mode) {
        case ProviderMode::clean:
            answer = clean_answer(faq, question);
            break;
        case ProviderMode::susceptible:
            answer = susceptible_answer(faq, system_text, question, options.theta);
            break;
        case ProviderMode::backdoored:
            if (const std::string* payload = backdoor->lookup(question)) {
                answer = *payload; // defense marker cannot stop this path
            } else {
                answer = clean_answer(faq, question);
            }
            break;
    }

    ChatResponse response;
    // Pure function of the request, so identical requests get identical ids
    // in every mode; defense-suppressed responses stay byte-equal to clean.
    response.id = "mock-" + util::fnv1a64_hex(serialize_chat_request(request));
    response.message = {Role::assistant, std::move(answer)};
    response.finish_reason = protocol::FinishReason::stop;
    return response;
}

} // namespace aealab::mock
