#include "aealab/harness.hpp"

#include "aealab/error.hpp"
#include "aealab/gateway_server.hpp"
#include "aealab/jsonl.hpp"
#include "aealab/mock_server.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>

namespace aealab::harness {

using protocol::ChatMessage;
using protocol::ChatRequest;
using protocol::Role;

const char* to_string(Path path) noexcept {
    return path == Path::sdp ? "sdp" : "mdp";
}

const char* to_string(Mode mode) noexcept {
    switch (mode) {
        case Mode::baseline: return "baseline";
        case Mode::attack: return "attack";
        case Mode::defend: return "defend";
    }
    return "baseline";
}

std::vector<Scenario> load_scenarios(std::istream& in) {
    std::vector<Scenario> scenarios;
    std::set<std::string> seen;
    jsonl::for_each(in, [&](std::size_t line_no, const nlohmann::json& doc) {
        long line = static_cast<long>(line_no);
        Scenario scenario;
        if (!doc.contains("id") || !doc.at("id").is_string()) {
            throw Error(ErrorCode::parse_error, "missing string field: id", line);
        }
        scenario.id = doc.at("id").get<std::string>();
        if (!doc.contains("user_query") || !doc.at("user_query").is_string() ||
            doc.at("user_query").get_ref<const std::string&>().empty()) {
            throw Error(ErrorCode::parse_error, "missing non-empty user_query", line);
        }
        scenario.user_query = doc.at("user_query").get<std::string>();
        if (doc.contains("predefined_prompt") && !doc.at("predefined_prompt").is_null()) {
            scenario.predefined_prompt = doc.at("predefined_prompt").get<std::string>();
        }
        if (doc.contains("expected_faq_answer") && !doc.at("expected_faq_answer").is_null()) {
            scenario.expected_faq_answer = doc.at("expected_faq_answer").get<std::string>();
        }
        if (doc.contains("path")) {
            const std::string& path = doc.at("path").get_ref<const std::string&>();
            if (path == "sdp") {
                scenario.path = Path::sdp;
            } else if (path == "mdp") {
                scenario.path = Path::mdp;
            } else {
                throw Error(ErrorCode::parse_error, "path must be sdp or mdp", line);
            }
        }
        if (!seen.insert(scenario.id).second) {
            throw Error(ErrorCode::duplicate_id, "duplicate scenario id: " + scenario.id, line);
        }
        scenarios.push_back(std::move(scenario));
    });
    return scenarios;
}

namespace {

gateway::MiddlewareConfig mode_config(const gateway::MiddlewareConfig& base, Mode mode,
                                      Path path) {
    gateway::MiddlewareConfig config = base;
    // mdp scenarios model a poisoned checkpoint: the gateway never injects,
    // only the defense toggle varies.
    config.attack_enabled = (mode != Mode::baseline) && path == Path::sdp;
    config.defense_enabled = mode == Mode::defend;
    return config;
}

ChatRequest scenario_request(const Scenario& scenario) {
    ChatRequest request;
    request.model = "aealab-mock";
    if (scenario.predefined_prompt) {
        request.messages.push_back({Role::system, *scenario.predefined_prompt});
    }
    request.messages.push_back({Role::user, scenario.user_query});
    return request;
}

struct GatewayLane {
    std::unique_ptr<gateway::Gateway> gw;
    std::unique_ptr<gateway::GatewayServer> server;
};

struct PostOutcome {
    bool ok = false;
    std::string error;
    protocol::ChatResponse response;
    long latency_ms = 0;
};

PostOutcome post_scenario(const std::string& base_url, const ChatRequest& request) {
    PostOutcome outcome;
    httplib::Client client(base_url);
    client.set_read_timeout(std::chrono::seconds(30));
    auto t0 = std::chrono::steady_clock::now();
    auto res = client.Post("/v1/chat/completions", protocol::serialize_chat_request(request),
                           "application/json");
    auto t1 = std::chrono::steady_clock::now();
    outcome.latency_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    if (!res) {
        outcome.error = "gateway unreachable: " + httplib::to_string(res.error());
        return outcome;
    }
    if (res->status != 200) {
        outcome.error = "gateway status " + std::to_string(res->status) + ": " + res->body;
        return outcome;
    }
    try {
        outcome.response = protocol::parse_chat_response(res->body);
    } catch (const Error& e) {
        outcome.error = e.what();
        return outcome;
    }
    outcome.ok = true;
    return outcome;
}

} // namespace

MatrixOutcome run_matrix(std::span<const Scenario> scenarios, const attack::AttackStore& store,
                         const MatrixOptions& options) {
    MatrixOutcome outcome;
    if (scenarios.empty()) return outcome;

    bool any_sdp = std::any_of(scenarios.begin(), scenarios.end(),
                               [](const Scenario& s) { return s.path == Path::sdp; });
    bool any_mdp = std::any_of(scenarios.begin(), scenarios.end(),
                               [](const Scenario& s) { return s.path == Path::mdp; });

    std::unique_ptr<mock::MockServer> sdp_provider;
    std::unique_ptr<mock::MockServer> mdp_provider;
    if (any_sdp && !options.upstream_url) {
        std::optional<mock::BackdoorTable> backdoor = options.backdoor;
        if (options.provider_mode == mock::ProviderMode::backdoored && !backdoor) {
            throw Error(ErrorCode::missing_backdoor_table,
                        "backdoored provider mode requires a backdoor table");
        }
        sdp_provider = std::make_unique<mock::MockServer>(options.provider_mode, options.faq,
                                                          std::move(backdoor),
                                                          options.mock_options);
        sdp_provider->start();
    }
    if (any_mdp && !options.upstream_url) {
        if (!options.backdoor) {
            throw Error(ErrorCode::missing_backdoor_table,
                        "mdp scenarios require a backdoor table");
        }
        mdp_provider = std::make_unique<mock::MockServer>(mock::ProviderMode::backdoored,
                                                          options.faq, options.backdoor,
                                                          options.mock_options);
        mdp_provider->start();
    }

    auto make_lane = [&](const std::string& upstream_url) {
        GatewayLane lane;
        gateway::GatewayConfig config;
        config.upstream.base_url = upstream_url;
        config.upstream.timeout = options.upstream_timeout;
        config.upstream.max_retries = options.upstream_max_retries;
        config.audit_log_path = options.audit_log_path;
        config.middleware = options.middleware;
        lane.gw = std::make_unique<gateway::Gateway>(std::move(config),
                                                     attack::AttackStore(store));
        lane.server = std::make_unique<gateway::GatewayServer>(*lane.gw);
        lane.server->start();
        return lane;
    };

    GatewayLane sdp_lane;
    GatewayLane mdp_lane;
    if (any_sdp) {
        sdp_lane = make_lane(options.upstream_url ? *options.upstream_url
                                                  : sdp_provider->base_url());
    }
    if (any_mdp && !options.upstream_url) {
        mdp_lane = make_lane(mdp_provider->base_url());
    }

    std::map<std::string, std::string> baseline_texts;
    std::set<std::string> aborted;
    constexpr Mode kModes[] = {Mode::baseline, Mode::attack, Mode::defend};

    for (Mode mode : kModes) {
        if (sdp_lane.gw) {
            sdp_lane.gw->set_middleware(mode_config(options.middleware, mode, Path::sdp));
        }
        if (mdp_lane.gw) {
            mdp_lane.gw->set_middleware(mode_config(options.middleware, mode, Path::mdp));
        }
        for (const Scenario& scenario : scenarios) {
            if (aborted.count(scenario.id)) {
                outcome.errors.push_back(
                    {scenario.id, mode, "skipped: scenario aborted in an earlier mode"});
                continue;
            }
            if (scenario.path == Path::mdp && options.upstream_url) {
                aborted.insert(scenario.id);
                outcome.errors.push_back(
                    {scenario.id, mode,
                     "mdp scenarios require the in-process backdoored mock"});
                continue;
            }
            const GatewayLane& lane = scenario.path == Path::sdp ? sdp_lane : mdp_lane;
            PostOutcome post = post_scenario(lane.server->base_url(),
                                             scenario_request(scenario));
            if (!post.ok) {
                aborted.insert(scenario.id);
                outcome.errors.push_back({scenario.id, mode, post.error});
                continue;
            }

            ScenarioResult result;
            result.scenario_id = scenario.id;
            result.mode = mode;
            result.response_text = post.response.message.content;
            result.latency_ms = post.latency_ms;
            result.verdict = detector::classify({scenario_request(scenario), post.response},
                                                store, options.link_allowlist,
                                                options.signatures, options.hit_threshold);
            if (mode == Mode::baseline) {
                baseline_texts[scenario.id] = result.response_text;
            }
            result.stealth = attack::similarity(baseline_texts.at(scenario.id),
                                                result.response_text);
            outcome.results.push_back(std::move(result));
        }
    }

    // deterministic report order: scenario file order, then mode order
    std::map<std::string, std::size_t> scenario_order;
    for (std::size_t i = 0; i < scenarios.size(); ++i) scenario_order[scenarios[i].id] = i;
    auto key = [&](const std::string& id, Mode mode) {
        return scenario_order.at(id) * 3 + static_cast<std::size_t>(mode);
    };
    std::stable_sort(outcome.results.begin(), outcome.results.end(),
                     [&](const ScenarioResult& a, const ScenarioResult& b) {
                         return key(a.scenario_id, a.mode) < key(b.scenario_id, b.mode);
                     });
    std::stable_sort(outcome.errors.begin(), outcome.errors.end(),
                     [&](const ErrorRow& a, const ErrorRow& b) {
                         return key(a.scenario_id, a.mode) < key(b.scenario_id, b.mode);
                     });
    return outcome;
}

MetricsSummary compute_metrics(const MatrixOutcome& outcome, const attack::AttackStore& store) {
    if (outcome.results.empty()) {
        throw Error(ErrorCode::empty_results, "no scenario results to summarize");
    }

    MetricsSummary summary;
    summary.result_count = outcome.results.size();
    summary.error_count = outcome.errors.size();

    std::map<Mode, std::pair<std::size_t, std::size_t>> per_mode; // hits, total
    double stealth_sum = 0.0;
    std::size_t stealth_count = 0;
    for (const auto& result : outcome.results) {
        auto& [hits, total] = per_mode[result.mode];
        ++total;
        if (result.verdict.attacked) ++hits;
        if (result.mode == Mode::attack) {
            stealth_sum += result.stealth;
            ++stealth_count;
        }
        if (result.verdict.attacked && !result.verdict.matched_entry_ids.empty()) {
            if (const attack::AttackEntry* entry =
                    store.find(result.verdict.matched_entry_ids.front())) {
                ++summary.category_counts[attack::to_string(entry->category)];
            }
        }
    }

    auto asr = [&](Mode mode) -> std::optional<double> {
        auto it = per_mode.find(mode);
        if (it == per_mode.end() || it->second.second == 0) return std::nullopt;
        return static_cast<double>(it->second.first) /
               static_cast<double>(it->second.second);
    };
    summary.asr_baseline = asr(Mode::baseline);
    summary.asr_attack = asr(Mode::attack);
    summary.asr_defend = asr(Mode::defend);
    if (summary.asr_attack && *summary.asr_attack > 0.0 && summary.asr_defend) {
        summary.mitigation_rate = (*summary.asr_attack - *summary.asr_defend) /
                                  *summary.asr_attack;
    }
    if (stealth_count > 0) {
        summary.mean_stealth_attack = stealth_sum / static_cast<double>(stealth_count);
    }
    return summary;
}

nlohmann::json MetricsSummary::to_json() const {
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    return {
        {"asr_baseline", opt(asr_baseline)},
        {"asr_attack", opt(asr_attack)},
        {"asr_defend", opt(asr_defend)},
        {"mitigation_rate", opt(mitigation_rate)},
        {"mean_stealth_attack", opt(mean_stealth_attack)},
        {"category_counts", category_counts},
        {"result_count", result_count},
        {"error_count", error_count},
    };
}

namespace {

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string quoted = "\"";
    for (char c : value) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

std::string format_score(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

} // namespace

void write_report(const MatrixOutcome& outcome, const MetricsSummary& summary,
                  const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);

    std::filesystem::path csv_path = out_dir / "results.csv";
    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) {
        throw Error(ErrorCode::io_error, "cannot write " + csv_path.string());
    }
    csv << "scenario_id,mode,attacked,overlap_score,stealth,latency_ms\n";
    for (const auto& result : outcome.results) {
        csv << csv_field(result.scenario_id) << ',' << to_string(result.mode) << ','
            << (result.verdict.attacked ? "true" : "false") << ','
            << format_score(result.verdict.overlap_score) << ',' << format_score(result.stealth)
            << ',' << result.latency_ms << '\n';
    }
    csv.flush();
    if (!csv) {
        throw Error(ErrorCode::io_error, "write failed: " + csv_path.string());
    }

    nlohmann::json summary_doc = summary.to_json();
    nlohmann::json error_rows = nlohmann::json::array();
    for (const auto& row : outcome.errors) {
        error_rows.push_back({{"scenario_id", row.scenario_id},
                              {"mode", to_string(row.mode)},
                              {"message", row.message}});
    }
    summary_doc["error_rows"] = std::move(error_rows);

    std::filesystem::path summary_path = out_dir / "summary.json";
    std::ofstream summary_out(summary_path, std::ios::binary | std::ios::trunc);
    if (!summary_out) {
        throw Error(ErrorCode::io_error, "cannot write " + summary_path.string());
    }
    summary_out << summary_doc.dump(2) << '\n';
    summary_out.flush();
    if (!summary_out) {
        throw Error(ErrorCode::io_error, "write failed: " + summary_path.string());
    }
}

} // namespace aealab::harness
