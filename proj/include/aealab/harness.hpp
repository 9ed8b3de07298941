#pragma once

#include "aealab/attack_store.hpp"
#include "aealab/detector.hpp"
#include "aealab/gateway.hpp"
#include "aealab/mock_provider.hpp"

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aealab::harness {

enum class Path { sdp, mdp };
enum class Mode { baseline, attack, defend };

const char* to_string(Path path) noexcept;
const char* to_string(Mode mode) noexcept;

struct Scenario {
    std::string id;
    std::string user_query;
    std::optional<std::string> predefined_prompt;
    std::optional<std::string> expected_faq_answer;
    Path path = Path::sdp;
};

/// JSONL loader; file order preserved, duplicate ids rejected.
std::vector<Scenario> load_scenarios(std::istream& in);

struct ScenarioResult {
    std::string scenario_id;
    Mode mode = Mode::baseline;
    std::string response_text;
    detector::Verdict verdict;
    // Jaccard similarity to the same scenario's baseline response; results
    // are only emitted once their baseline succeeded, so this is always set.
    double stealth = 1.0;
    long latency_ms = 0;
};

struct ErrorRow {
    std::string scenario_id;
    Mode mode = Mode::baseline;
    std::string message;
};

struct MatrixOutcome {
    std::vector<ScenarioResult> results;
    std::vector<ErrorRow> errors;
};

struct MatrixOptions {
    /// Knob source for every mode; attack/defense flags are overridden per
    /// mode (baseline off/off, attack on/off, defend on/on).
    gateway::MiddlewareConfig middleware;
    /// Provider for sdp scenarios; mdp scenarios always hit a backdoored
    /// provider with gateway attack injection off.
    mock::ProviderMode provider_mode = mock::ProviderMode::susceptible;
    mock::FaqTable faq;
    std::optional<mock::BackdoorTable> backdoor;
    mock::MockOptions mock_options;

    std::vector<std::string> link_allowlist;
    std::vector<std::string> signatures;
    double hit_threshold = 0.6;

    std::string audit_log_path = "aealab_audit.jsonl";
    std::chrono::milliseconds upstream_timeout{5000};
    int upstream_max_retries = 2;

    /// Manual-experiment escape hatch: target an external upstream instead
    /// of the in-process mock. mdp scenarios become error rows.
    std::optional<std::string> upstream_url;
};

/// Runs every scenario through {baseline, attack, defend} against the
/// gateway over loopback. A scenario aborts (error rows, matrix continues)
/// after an upstream failure. Results come back sorted scenario-major in
/// file order, then mode order.
MatrixOutcome run_matrix(std::span<const Scenario> scenarios, const attack::AttackStore& store,
                         const MatrixOptions& options);

struct MetricsSummary {
    std::optional<double> asr_baseline;
    std::optional<double> asr_attack;
    std::optional<double> asr_defend;
    /// (asr_attack - asr_defend) / asr_attack; null when asr_attack == 0.
    std::optional<double> mitigation_rate;
    std::optional<double> mean_stealth_attack;
    std::map<std::string, int> category_counts;
    std::size_t result_count = 0;
    std::size_t error_count = 0;

    nlohmann::json to_json() const;
};

/// Throws Error{empty_results} when the outcome holds no results. The store
/// resolves matched entry ids to categories for category_counts.
MetricsSummary compute_metrics(const MatrixOutcome& outcome, const attack::AttackStore& store);

/// Writes <out_dir>/results.csv (header scenario_id,mode,attacked,
/// overlap_score,stealth,latency_ms; scenario file order x mode order) and
/// <out_dir>/summary.json. Pure function of its inputs.
void write_report(const MatrixOutcome& outcome, const MetricsSummary& summary,
                  const std::filesystem::path& out_dir);

} // namespace aealab::harness
