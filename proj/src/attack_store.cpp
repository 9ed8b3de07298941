#include "aealab/attack_store.hpp"

#include "aealab/chat_protocol.hpp"
#include "aealab/error.hpp"
#include "aealab/jsonl.hpp"
#include "aealab/util.hpp"

#include <algorithm>
#include <set>

namespace aealab::attack {

using protocol::normalize_text;

const char* to_string(Category category) noexcept {
    switch (category) {
        case Category::advertisement: return "advertisement";
        case Category::link_promotion: return "link_promotion";
        case Category::propaganda: return "propaganda";
        case Category::hate_speech: return "hate_speech";
        case Category::misinformation: return "misinformation";
        case Category::performance_degradation: return "performance_degradation";
    }
    return "advertisement";
}

std::optional<Category> category_from_string(std::string_view text) noexcept {
    if (text == "advertisement") return Category::advertisement;
    if (text == "link_promotion") return Category::link_promotion;
    if (text == "propaganda") return Category::propaganda;
    if (text == "hate_speech") return Category::hate_speech;
    if (text == "misinformation") return Category::misinformation;
    if (text == "performance_degradation") return Category::performance_degradation;
    return std::nullopt;
}

void AttackStore::insert(AttackEntry entry, long line) {
    if (entry.id.empty()) throw Error(ErrorCode::parse_error, "entry id must be non-empty", line);
    if (entry.trigger.empty()) {
        throw Error(ErrorCode::parse_error, "trigger must be non-empty", line);
    }
    if (entry.payload.empty()) {
        throw Error(ErrorCode::parse_error, "payload must be non-empty", line);
    }
    for (const auto& link : entry.links) {
        if (!util::is_absolute_url(link)) {
            throw Error(ErrorCode::parse_error, "link is not an absolute URL: " + link, line);
        }
    }
    if (by_id_.count(entry.id)) {
        throw Error(ErrorCode::duplicate_id, "duplicate entry id: " + entry.id, line);
    }
    std::string key = normalize_text(entry.trigger).joined();
    std::size_t index = entries_.size();
    by_id_.emplace(entry.id, index);
    by_trigger_.emplace(key, index); // first entry wins on shared triggers
    entries_.push_back(std::move(entry));
}

AttackStore AttackStore::load(std::istream& in) {
    AttackStore store;
    jsonl::for_each(in, [&](std::size_t line_no, const nlohmann::json& doc) {
        long line = static_cast<long>(line_no);
        AttackEntry entry;
        for (const char* field : {"id", "trigger", "payload"}) {
            if (!doc.contains(field) || !doc.at(field).is_string()) {
                throw Error(ErrorCode::parse_error, std::string("missing string field: ") + field,
                            line);
            }
        }
        entry.id = doc.at("id").get<std::string>();
        entry.trigger = doc.at("trigger").get<std::string>();
        entry.payload = doc.at("payload").get<std::string>();
        if (!doc.contains("category") || !doc.at("category").is_string()) {
            throw Error(ErrorCode::invalid_category, "missing category", line);
        }
        auto category = category_from_string(doc.at("category").get_ref<const std::string&>());
        if (!category) {
            throw Error(ErrorCode::invalid_category,
                        "unknown category: " + doc.at("category").get<std::string>(), line);
        }
        entry.category = *category;
        if (doc.contains("links")) {
            if (!doc.at("links").is_array()) {
                throw Error(ErrorCode::parse_error, "links must be an array", line);
            }
            for (const auto& link : doc.at("links")) {
                if (!link.is_string()) {
                    throw Error(ErrorCode::parse_error, "links must contain strings", line);
                }
                entry.links.push_back(link.get<std::string>());
            }
        }
        store.insert(std::move(entry), line);
    });
    return store;
}

AttackStore AttackStore::from_entries(std::vector<AttackEntry> entries) {
    AttackStore store;
    for (auto& entry : entries) store.insert(std::move(entry), -1);
    return store;
}

const AttackEntry* AttackStore::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &entries_[it->second];
}

std::optional<std::size_t> AttackStore::exact_match(const std::string& normalized) const {
    auto it = by_trigger_.find(normalized);
    if (it == by_trigger_.end()) return std::nullopt;
    return it->second;
}

double similarity(std::string_view a, std::string_view b) {
    std::set<std::string> set_a, set_b;
    for (auto& t : normalize_text(a).tokens) set_a.insert(std::move(t));
    for (auto& t : normalize_text(b).tokens) set_b.insert(std::move(t));
    if (set_a.empty() && set_b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& t : set_a) inter += set_b.count(t);
    std::size_t uni = set_a.size() + set_b.size() - inter;
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

RetrievalResult retrieve(const AttackStore& store, std::string_view query, int k, double theta) {
    RetrievalResult result;
    if (k < 1) return result;

    std::string normalized = normalize_text(query).joined();
    if (!normalized.empty()) {
        if (auto index = store.exact_match(normalized)) {
            result.exact = true;
            result.selected.push_back({store.entries()[*index].id, 1.0});
            return result;
        }
    }

    std::vector<ScoredEntry> scored;
    for (const auto& entry : store.entries()) {
        double score = similarity(entry.trigger, query);
        if (score >= theta) scored.push_back({entry.id, score});
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const ScoredEntry& a, const ScoredEntry& b) { return a.score > b.score; });
    if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));
    result.selected = std::move(scored);
    return result;
}

} // namespace aealab::attack
