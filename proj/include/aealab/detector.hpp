#pragma once

#include "aealab/attack_store.hpp"
#include "aealab/chat_protocol.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aealab::detector {

struct Verdict {
    bool attacked = false;
    double overlap_score = 0.0;
    std::vector<std::string> matched_entry_ids;
    std::vector<std::string> unexpected_links;
    std::vector<std::string> signature_hits;

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct OverlapResult {
    double score = 0.0;
    std::optional<std::string> best_entry_id;
};

/// Payload-side containment: max over entries of
/// |payload tokens ∩ response tokens| / |payload tokens|, normalized token
/// sets. Ties go to dataset order; an empty payload token set scores 0.
OverlapResult payload_overlap(std::string_view response_text,
                              std::span<const attack::AttackEntry> entries);

/// Absolute http/https URLs found by scanning, minus exact allowlist
/// matches, in order of appearance. Trailing sentence punctuation is not
/// part of a URL.
std::vector<std::string> detect_links(std::string_view response_text,
                                      std::span<const std::string> allowlist);

/// Signatures found case-insensitively in the system text, in list order.
std::vector<std::string> scan_prompt(std::string_view system_text,
                                     std::span<const std::string> signatures);

struct Transcript {
    protocol::ChatRequest request;
    protocol::ChatResponse response;
};

/// Combines the three detectors; attacked = overlap >= hit_threshold OR
/// unexpected links OR signature hits. matched_entry_ids lists every entry
/// whose own overlap clears the threshold, dataset order.
Verdict classify(const Transcript& transcript, const attack::AttackStore& store,
                 std::span<const std::string> allowlist, std::span<const std::string> signatures,
                 double hit_threshold);

} // namespace aealab::detector
