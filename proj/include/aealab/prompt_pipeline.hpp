#pragma once

#include "aealab/attack_store.hpp"
#include "aealab/chat_protocol.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aealab::prompt {

enum class SegmentLabel {
    predefined_prompt,
    defense_prompt,
    attacker_prompt,
    attacker_data,
    user_input,
    history,
};

const char* to_string(SegmentLabel label) noexcept;
std::optional<SegmentLabel> segment_label_from_string(std::string_view text) noexcept;

struct Segment {
    SegmentLabel label;
    std::string text;

    friend bool operator==(const Segment&, const Segment&) = default;
};

/// Provenance-labeled prompt. Segment order is always
/// predefined? defense? attacker_prompt? attacker_data? user_input history?.
/// The history segment carries a rendered transcript; the raw messages ride
/// in history_messages for reconstruction.
struct ComposedPrompt {
    std::vector<Segment> segments;
    std::vector<protocol::ChatMessage> history_messages;
};

struct AttackBlock {
    std::string attacker_prompt;
    std::string attacker_data;

    friend bool operator==(const AttackBlock&, const AttackBlock&) = default;
};

inline constexpr std::string_view kAttackDataPlaceholder = "{attacker data}";

/// Renders entries as "trigger: payload" lines (selection order) and strips
/// the placeholder out of the template; the data segment follows the prompt
/// segment when composed. Throws Error{missing_placeholder} unless the
/// template contains the placeholder exactly once.
AttackBlock build_attack_block(std::string_view template_text,
                               std::span<const attack::AttackEntry> entries);

/// Assembles the composed prompt. Throws Error{empty_user_input}.
ComposedPrompt compose(const std::optional<std::string>& predefined, std::string_view user_input,
                       std::span<const protocol::ChatMessage> history,
                       const std::optional<AttackBlock>& attack_block,
                       const std::optional<std::string>& defense);

/// Flattens all non-user, non-history segments into one system message
/// (blank-line separated), then history oldest-first, then the user message.
std::vector<protocol::ChatMessage> to_messages(const ComposedPrompt& prompt);

/// Labels in segment order.
std::vector<SegmentLabel> trace(const ComposedPrompt& prompt);

} // namespace aealab::prompt
