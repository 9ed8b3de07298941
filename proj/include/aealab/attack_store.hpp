#pragma once

#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aealab::attack {

enum class Category {
    advertisement,
    link_promotion,
    propaganda,
    hate_speech,
    misinformation,
    performance_degradation,
};

const char* to_string(Category category) noexcept;
std::optional<Category> category_from_string(std::string_view text) noexcept;

struct AttackEntry {
    std::string id;
    std::string trigger;
    std::string payload;
    Category category = Category::advertisement;
    std::vector<std::string> links;

    friend bool operator==(const AttackEntry&, const AttackEntry&) = default;
};

struct ScoredEntry {
    std::string entry_id;
    double score = 0.0;

    friend bool operator==(const ScoredEntry&, const ScoredEntry&) = default;
};

struct RetrievalResult {
    bool exact = false;
    std::vector<ScoredEntry> selected;

    friend bool operator==(const RetrievalResult&, const RetrievalResult&) = default;
};

/// Immutable attacker dataset. Entries keep file order; the index maps the
/// normalized trigger (space-joined tokens) to the first entry bearing it.
class AttackStore {
public:
    AttackStore() = default;

    /// JSONL loader: id, trigger, payload, category, links per line.
    /// Throws Error{parse_error|duplicate_id|invalid_category} with line info.
    static AttackStore load(std::istream& in);

    /// Builds from in-memory entries (same validation, no line numbers).
    static AttackStore from_entries(std::vector<AttackEntry> entries);

    const std::vector<AttackEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    const AttackEntry* find(std::string_view id) const;

    /// Index of the first entry whose normalized trigger equals `normalized`.
    std::optional<std::size_t> exact_match(const std::string& normalized) const;

private:
    void insert(AttackEntry entry, long line);

    std::vector<AttackEntry> entries_;
    std::map<std::string, std::size_t> by_id_;
    std::map<std::string, std::size_t> by_trigger_;
};

/// Unigram Jaccard coefficient over normalized token sets; 0 when both
/// token sets are empty.
double similarity(std::string_view a, std::string_view b);

/// Exact normalized match returns that single entry at score 1.0;
/// otherwise up to k entries with similarity(trigger, query) >= theta,
/// score-descending, ties by dataset order.
RetrievalResult retrieve(const AttackStore& store, std::string_view query, int k, double theta);

} // namespace aealab::attack
