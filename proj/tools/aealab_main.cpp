// aealab: desk-scale testbed for advertisement-embedding attacks on LLM
// serving paths. Subcommands: serve (gateway), mock (provider), run
// (scenario matrix), detect (transcript scan).

#include "aealab/attack_store.hpp"
#include "aealab/detector.hpp"
#include "aealab/error.hpp"
#include "aealab/gateway.hpp"
#include "aealab/gateway_server.hpp"
#include "aealab/harness.hpp"
#include "aealab/mock_provider.hpp"
#include "aealab/mock_server.hpp"
#include "aealab/prompts.hpp"
#include "aealab/util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

using namespace aealab;

std::atomic<bool> g_stop{false};

void handle_signal(int) {
    g_stop.store(true);
}

attack::AttackStore load_store(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open attack data: " + path);
    return attack::AttackStore::load(in);
}

mock::FaqTable load_faq(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open faq: " + path);
    return mock::FaqTable::load(in);
}

std::optional<mock::BackdoorTable> load_backdoor(const std::string& path) {
    if (path.empty()) return std::nullopt;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open backdoor data: " + path);
    return mock::BackdoorTable::load(in);
}

std::vector<std::string> load_lines(const std::string& path) {
    std::vector<std::string> lines;
    if (path.empty()) return lines;
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open file: " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

std::vector<std::string> default_signatures() {
    std::vector<std::string> out;
    for (auto sig : prompts::kDefaultSignatures) out.emplace_back(sig);
    return out;
}

void wait_for_stop() {
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_stop.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
}

int cmd_serve(const std::string& config_flag, const std::string& listen_flag) {
    std::string config_path = config_flag;
    if (const char* env = std::getenv("AEALAB_CONFIG")) {
        if (*env) config_path = env; // env var wins over the flag
    }
    if (config_path.empty()) {
        std::cerr << "serve requires --config or AEALAB_CONFIG\n";
        return 2;
    }
    gateway::GatewayConfig config = gateway::GatewayConfig::load_file(config_path);
    if (!listen_flag.empty()) config.listen = listen_flag;

    attack::AttackStore store = load_store(config.attack_data_path);
    auto [host, port] = gateway::split_listen_address(config.listen);

    gateway::Gateway gw(config, std::move(store));
    gateway::GatewayServer server(gw);
    int bound = server.start(host, port);
    std::cout << "gateway listening on " << host << ":" << bound << " -> "
              << config.upstream.base_url << "\n";
    std::cout << "audit log: " << config.audit_log_path << "\n";
    wait_for_stop();
    server.stop();
    return 0;
}

int cmd_mock(const std::string& listen, const std::string& mode_name, const std::string& faq_path,
             const std::string& backdoor_path, double theta) {
    auto mode = mock::provider_mode_from_string(mode_name);
    if (!mode) {
        std::cerr << "unknown provider mode: " << mode_name << "\n";
        return 2;
    }
    auto [host, port] = gateway::split_listen_address(listen);
    mock::MockServer server(*mode, load_faq(faq_path), load_backdoor(backdoor_path),
                            {.theta = theta});
    int bound = server.start(host, port);
    std::cout << "mock provider (" << mode_name << ") listening on " << host << ":" << bound
              << "\n";
    wait_for_stop();
    server.stop();
    return 0;
}

int cmd_run(const std::string& scenarios_path, const std::string& attack_data_path,
            const std::string& provider_mode_name, const std::string& out_dir,
            const std::string& faq_path, const std::string& backdoor_path,
            const std::string& allowlist_path, const std::string& signatures_path,
            double threshold, int k, double theta, const std::string& attack_template_path,
            const std::string& defense_text_path, const std::string& upstream_url) {
    auto provider_mode = mock::provider_mode_from_string(provider_mode_name);
    if (!provider_mode) {
        std::cerr << "unknown provider mode: " << provider_mode_name << "\n";
        return 2;
    }

    std::ifstream scenarios_in(scenarios_path, std::ios::binary);
    if (!scenarios_in) {
        std::cerr << "cannot open scenarios: " << scenarios_path << "\n";
        return 2;
    }
    std::vector<harness::Scenario> scenarios = harness::load_scenarios(scenarios_in);

    attack::AttackStore store = load_store(attack_data_path);

    harness::MatrixOptions options;
    options.provider_mode = *provider_mode;
    options.faq = load_faq(faq_path);
    options.backdoor = load_backdoor(backdoor_path);
    options.mock_options.theta = theta;
    options.middleware.retrieval_k = k;
    options.middleware.retrieval_theta = theta;
    options.middleware.attack_template_path = attack_template_path;
    options.middleware.defense_text_path = defense_text_path;
    options.middleware.validate();
    options.middleware.resolve_texts();
    options.link_allowlist = load_lines(allowlist_path);
    options.signatures =
        signatures_path.empty() ? default_signatures() : load_lines(signatures_path);
    options.hit_threshold = threshold;
    options.audit_log_path = (std::filesystem::path(out_dir) / "audit.jsonl").string();
    if (!upstream_url.empty()) options.upstream_url = upstream_url;

    std::filesystem::create_directories(out_dir);
    harness::MatrixOutcome outcome = harness::run_matrix(scenarios, store, options);
    harness::MetricsSummary summary = harness::compute_metrics(outcome, store);
    harness::write_report(outcome, summary, out_dir);

    std::cout << summary.to_json().dump(2) << "\n";
    std::cout << "report: " << out_dir << "/results.csv\n";
    if (!outcome.errors.empty()) {
        std::cerr << outcome.errors.size() << " error row(s); see summary.json\n";
        return 1;
    }
    return 0;
}

int cmd_detect(const std::string& transcript_path, const std::string& attack_data_path,
               const std::string& allowlist_path, const std::string& signatures_path,
               double threshold) {
    attack::AttackStore store = load_store(attack_data_path);
    std::vector<std::string> allowlist = load_lines(allowlist_path);
    std::vector<std::string> signatures =
        signatures_path.empty() ? default_signatures() : load_lines(signatures_path);

    std::ifstream in(transcript_path, std::ios::binary);
    if (!in) {
        std::cerr << "cannot open transcript: " << transcript_path << "\n";
        return 2;
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object() || !doc.contains("request") ||
            !doc.contains("response")) {
            throw Error(ErrorCode::parse_error,
                        "transcript line needs request and response objects",
                        static_cast<long>(line_no));
        }
        detector::Transcript transcript{
            protocol::parse_chat_request(doc.at("request").dump()),
            protocol::parse_chat_response(doc.at("response").dump()),
        };
        detector::Verdict verdict =
            detector::classify(transcript, store, allowlist, signatures, threshold);
        nlohmann::json out{
            {"attacked", verdict.attacked},
            {"overlap_score", verdict.overlap_score},
            {"matched_entry_ids", verdict.matched_entry_ids},
            {"unexpected_links", verdict.unexpected_links},
            {"signature_hits", verdict.signature_hits},
        };
        std::cout << out.dump() << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"aealab - advertisement embedding attack testbed"};
    app.require_subcommand(1);

    // serve
    auto* serve = app.add_subcommand("serve", "run the SDP gateway");
    std::string serve_config, serve_listen;
    serve->add_option("--config", serve_config, "gateway config JSON (or AEALAB_CONFIG)");
    serve->add_option("--listen", serve_listen, "host:port override");

    // mock
    auto* mock_cmd = app.add_subcommand("mock", "run the deterministic mock provider");
    std::string mock_listen = "127.0.0.1:9090";
    std::string mock_mode = "clean";
    std::string mock_faq, mock_backdoor;
    double mock_theta = 0.3;
    mock_cmd->add_option("--listen", mock_listen, "host:port");
    mock_cmd->add_option("--mode", mock_mode, "clean|susceptible|backdoored");
    mock_cmd->add_option("--faq", mock_faq, "FAQ JSONL ({question, answer})");
    mock_cmd->add_option("--backdoor", mock_backdoor, "backdoor JSONL ({trigger, payload})");
    mock_cmd->add_option("--theta", mock_theta, "susceptible trigger-match threshold");

    // run
    auto* run = app.add_subcommand("run", "run the scenario matrix and write reports");
    std::string run_scenarios, run_attack_data, run_out;
    std::string run_provider_mode = "susceptible";
    std::string run_faq, run_backdoor, run_allowlist, run_signatures;
    std::string run_attack_template, run_defense_text, run_upstream;
    double run_threshold = 0.6, run_theta = 0.3;
    int run_k = 3;
    run->add_option("--scenarios", run_scenarios, "scenario JSONL")->required();
    run->add_option("--attack-data", run_attack_data, "attack entry JSONL")->required();
    run->add_option("--provider-mode", run_provider_mode, "clean|susceptible|backdoored");
    run->add_option("--out", run_out, "output directory")->required();
    run->add_option("--faq", run_faq, "FAQ JSONL for the mock provider");
    run->add_option("--backdoor", run_backdoor, "backdoor JSONL (needed for mdp scenarios)");
    run->add_option("--allowlist", run_allowlist, "expected-link allowlist, one URL per line");
    run->add_option("--signatures", run_signatures, "signature phrases, one per line");
    run->add_option("--threshold", run_threshold, "detector hit threshold");
    run->add_option("--k", run_k, "retrieval k");
    run->add_option("--theta", run_theta, "retrieval/mock similarity threshold");
    run->add_option("--attack-template", run_attack_template, "attack prompt template file");
    run->add_option("--defense-text", run_defense_text, "defense prompt file");
    run->add_option("--upstream-url", run_upstream,
                    "manual experiments: external upstream instead of the mock");

    // detect
    auto* detect = app.add_subcommand("detect", "classify transcripts, one verdict per line");
    std::string detect_transcript, detect_attack_data, detect_allowlist, detect_signatures;
    double detect_threshold = 0.6;
    detect->add_option("--transcript", detect_transcript, "transcript JSONL")->required();
    detect->add_option("--attack-data", detect_attack_data, "attack entry JSONL")->required();
    detect->add_option("--allowlist", detect_allowlist, "allowlist file");
    detect->add_option("--signatures", detect_signatures, "signature phrases file");
    detect->add_option("--threshold", detect_threshold, "detector hit threshold");

    CLI11_PARSE(app, argc, argv);

    try {
        if (serve->parsed()) return cmd_serve(serve_config, serve_listen);
        if (mock_cmd->parsed()) {
            return cmd_mock(mock_listen, mock_mode, mock_faq, mock_backdoor, mock_theta);
        }
        if (run->parsed()) {
            return cmd_run(run_scenarios, run_attack_data, run_provider_mode, run_out, run_faq,
                           run_backdoor, run_allowlist, run_signatures, run_threshold, run_k,
                           run_theta, run_attack_template, run_defense_text, run_upstream);
        }
        if (detect->parsed()) {
            return cmd_detect(detect_transcript, detect_attack_data, detect_allowlist,
                              detect_signatures, detect_threshold);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
