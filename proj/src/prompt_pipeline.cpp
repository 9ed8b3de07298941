#include "aealab/prompt_pipeline.hpp"

#include "aealab/error.hpp"

namespace aealab::prompt {

using protocol::ChatMessage;
using protocol::Role;

const char* to_string(SegmentLabel label) noexcept {
    switch (label) {
        case SegmentLabel::predefined_prompt: return "predefined_prompt";
        case SegmentLabel::defense_prompt: return "defense_prompt";
        case SegmentLabel::attacker_prompt: return "attacker_prompt";
        case SegmentLabel::attacker_data: return "attacker_data";
        case SegmentLabel::user_input: return "user_input";
        case SegmentLabel::history: return "history";
    }
    return "user_input";
}

std::optional<SegmentLabel> segment_label_from_string(std::string_view text) noexcept {
    if (text == "predefined_prompt") return SegmentLabel::predefined_prompt;
    if (text == "defense_prompt") return SegmentLabel::defense_prompt;
    if (text == "attacker_prompt") return SegmentLabel::attacker_prompt;
    if (text == "attacker_data") return SegmentLabel::attacker_data;
    if (text == "user_input") return SegmentLabel::user_input;
    if (text == "history") return SegmentLabel::history;
    return std::nullopt;
}

AttackBlock build_attack_block(std::string_view template_text,
                               std::span<const attack::AttackEntry> entries) {
    auto first = template_text.find(kAttackDataPlaceholder);
    if (first == std::string_view::npos) {
        throw Error(ErrorCode::missing_placeholder,
                    "attack template lacks the {attacker data} placeholder");
    }
    if (template_text.find(kAttackDataPlaceholder, first + 1) != std::string_view::npos) {
        throw Error(ErrorCode::missing_placeholder,
                    "attack template must contain exactly one {attacker data} placeholder");
    }

    AttackBlock block;
    block.attacker_prompt.append(template_text.substr(0, first));
    block.attacker_prompt.append(template_text.substr(first + kAttackDataPlaceholder.size()));
    if (block.attacker_prompt.empty()) {
        throw Error(ErrorCode::invalid_config,
                    "attack template has no prompt text besides the placeholder");
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i > 0) block.attacker_data += '\n';
        block.attacker_data += entries[i].trigger;
        block.attacker_data += ": ";
        block.attacker_data += entries[i].payload;
    }
    return block;
}

namespace {

std::string render_history(std::span<const ChatMessage> history) {
    std::string out;
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (i > 0) out += '\n';
        out += to_string(history[i].role);
        out += ": ";
        out += history[i].content;
    }
    return out;
}

} // namespace

ComposedPrompt compose(const std::optional<std::string>& predefined, std::string_view user_input,
                       std::span<const ChatMessage> history,
                       const std::optional<AttackBlock>& attack_block,
                       const std::optional<std::string>& defense) {
    if (user_input.empty()) {
        throw Error(ErrorCode::empty_user_input, "user input must be non-empty");
    }

    ComposedPrompt prompt;
    if (predefined) {
        prompt.segments.push_back({SegmentLabel::predefined_prompt, *predefined});
    }
    if (defense) {
        prompt.segments.push_back({SegmentLabel::defense_prompt, *defense});
    }
    if (attack_block) {
        prompt.segments.push_back({SegmentLabel::attacker_prompt, attack_block->attacker_prompt});
        prompt.segments.push_back({SegmentLabel::attacker_data, attack_block->attacker_data});
    }
    prompt.segments.push_back({SegmentLabel::user_input, std::string(user_input)});
    if (!history.empty()) {
        prompt.segments.push_back({SegmentLabel::history, render_history(history)});
        prompt.history_messages.assign(history.begin(), history.end());
    }
    return prompt;
}

std::vector<ChatMessage> to_messages(const ComposedPrompt& prompt) {
    std::string system_text;
    std::string user_text;
    for (const auto& segment : prompt.segments) {
        switch (segment.label) {
            case SegmentLabel::user_input:
                user_text = segment.text;
                break;
            case SegmentLabel::history:
                break;
            default:
                if (!system_text.empty()) system_text += "\n\n";
                system_text += segment.text;
                break;
        }
    }

    std::vector<ChatMessage> messages;
    if (!system_text.empty()) messages.push_back({Role::system, std::move(system_text)});
    for (const auto& m : prompt.history_messages) messages.push_back(m);
    messages.push_back({Role::user, std::move(user_text)});
    return messages;
}

std::vector<SegmentLabel> trace(const ComposedPrompt& prompt) {
    std::vector<SegmentLabel> labels;
    labels.reserve(prompt.segments.size());
    for (const auto& segment : prompt.segments) labels.push_back(segment.label);
    return labels;
}

} // namespace aealab::prompt
