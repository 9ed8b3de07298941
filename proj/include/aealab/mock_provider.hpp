#pragma once

#include "aealab/chat_protocol.hpp"

#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace aealab::mock {

enum class ProviderMode { clean, susceptible, backdoored };

const char* to_string(ProviderMode mode) noexcept;
std::optional<ProviderMode> provider_mode_from_string(std::string_view text) noexcept;

/// Question -> answer, keyed by the normalized question. Stands in for
/// base-model knowledge.
class FaqTable {
public:
    static FaqTable load(std::istream& in);

    /// Throws Error{duplicate_question} when the normalized question exists.
    void add(std::string_view question, std::string answer, long line = -1);

    const std::string* lookup(std::string_view question) const;
    std::size_t size() const noexcept { return answers_.size(); }

    const std::map<std::string, std::string>& answers() const noexcept { return answers_; }

private:
    std::map<std::string, std::string> answers_;
};

/// Preset trigger -> payload mapping simulating a parameter-tampered
/// checkpoint.
class BackdoorTable {
public:
    static BackdoorTable load(std::istream& in);

    void add(std::string_view trigger, std::string payload, long line = -1);

    const std::string* lookup(std::string_view question) const;
    std::size_t size() const noexcept { return payloads_.size(); }

    const std::map<std::string, std::string>& payloads() const noexcept { return payloads_; }

private:
    std::map<std::string, std::string> payloads_;
};

struct MockOptions {
    /// Trigger-match threshold for susceptible mode; keep equal to the
    /// gateway's retrieval theta so one knob drives both sides.
    double theta = 0.3;
};

/// Deterministic pure function of its arguments.
///  clean       — FAQ lookup on the final user message, fixed fallback on miss.
///  susceptible — follows "trigger: payload" lines found in the system
///                message unless the defense marker is present.
///  backdoored  — trigger hit returns the preset payload verbatim, defense
///                or not; otherwise behaves as clean.
/// Throws Error{missing_backdoor_table} when mode=backdoored without table.
protocol::ChatResponse respond(ProviderMode mode, const FaqTable& faq,
                               const BackdoorTable* backdoor, const protocol::ChatRequest& request,
                               const MockOptions& options = {});

} // namespace aealab::mock
