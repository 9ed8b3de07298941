#pragma once

// Brute-force reference implementations. These stay deliberately naive and
// independent of the library's retrieval path: token sets are deduplicated
// by hand and selection is repeated max-picking, not a sort.

#include "aealab/attack_store.hpp"
#include "aealab/chat_protocol.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace oracle {

inline std::vector<std::string> dedup_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    for (const auto& t : aealab::protocol::normalize_text(text).tokens) {
        if (std::find(tokens.begin(), tokens.end(), t) == tokens.end()) tokens.push_back(t);
    }
    return tokens;
}

inline double jaccard(std::string_view a, std::string_view b) {
    auto ta = dedup_tokens(a);
    auto tb = dedup_tokens(b);
    if (ta.empty() && tb.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& t : ta) {
        if (std::find(tb.begin(), tb.end(), t) != tb.end()) ++inter;
    }
    std::size_t uni = ta.size() + tb.size() - inter;
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

/// |payload tokens ∩ response tokens| / |payload tokens|.
inline double containment(std::string_view payload, std::string_view response) {
    auto tp = dedup_tokens(payload);
    if (tp.empty()) return 0.0;
    auto tr = dedup_tokens(response);
    std::size_t inter = 0;
    for (const auto& t : tp) {
        if (std::find(tr.begin(), tr.end(), t) != tr.end()) ++inter;
    }
    return static_cast<double>(inter) / static_cast<double>(tp.size());
}

inline aealab::attack::RetrievalResult retrieve(
    const std::vector<aealab::attack::AttackEntry>& entries, std::string_view query, int k,
    double theta) {
    aealab::attack::RetrievalResult result;
    std::string normalized_query = aealab::protocol::normalize_text(query).joined();

    if (!normalized_query.empty()) {
        for (const auto& entry : entries) {
            if (aealab::protocol::normalize_text(entry.trigger).joined() == normalized_query) {
                result.exact = true;
                result.selected.push_back({entry.id, 1.0});
                return result;
            }
        }
    }

    struct Candidate {
        std::size_t index;
        double score;
        bool taken = false;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        double score = jaccard(entries[i].trigger, query);
        if (score >= theta) candidates.push_back({i, score});
    }
    while (static_cast<int>(result.selected.size()) < k) {
        Candidate* best = nullptr;
        for (auto& c : candidates) {
            if (c.taken) continue;
            if (!best || c.score > best->score) best = &c;
        }
        if (!best) break;
        best->taken = true;
        result.selected.push_back({entries[best->index].id, best->score});
    }
    return result;
}

} // namespace oracle
