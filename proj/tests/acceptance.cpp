// Acceptance suite. Each test case covers one criterion end to end and
// prints a single PASS/FAIL line; ctest goes red when any line fails.

#include "aealab/attack_store.hpp"
#include "aealab/chat_protocol.hpp"
#include "aealab/detector.hpp"
#include "aealab/error.hpp"
#include "aealab/gateway.hpp"
#include "aealab/gateway_server.hpp"
#include "aealab/harness.hpp"
#include "aealab/mock_provider.hpp"
#include "aealab/mock_server.hpp"
#include "aealab/prompts.hpp"

#include "generators.hpp"
#include "oracles.hpp"

#include <doctest.h>
#include <httplib.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace aealab;

namespace {

void report(const char* id, bool ok, const std::string& detail) {
    std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
}

std::ifstream open_fixture(const char* name) {
    std::ifstream in(std::string(AEALAB_FIXTURE_DIR "/") + name, std::ios::binary);
    REQUIRE(in);
    return in;
}

std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / "aealab_acceptance" / tag;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

attack::AttackStore fixture_store() {
    auto in = open_fixture("attack_data.jsonl");
    return attack::AttackStore::load(in);
}

mock::FaqTable fixture_faq() {
    auto in = open_fixture("faq.jsonl");
    return mock::FaqTable::load(in);
}

mock::BackdoorTable fixture_backdoor() {
    auto in = open_fixture("backdoor.jsonl");
    return mock::BackdoorTable::load(in);
}

harness::MatrixOptions fixture_options(const std::string& tag) {
    harness::MatrixOptions options;
    options.middleware.resolve_texts();
    options.provider_mode = mock::ProviderMode::susceptible;
    options.faq = fixture_faq();
    options.backdoor = fixture_backdoor();
    options.audit_log_path = (scratch_dir(tag) / "audit.jsonl").string();
    return options;
}

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

} // namespace

TEST_CASE("criterion 1: backdoor fidelity") {
    auto start = std::chrono::steady_clock::now();
    mock::FaqTable faq = fixture_faq();
    mock::BackdoorTable backdoor = fixture_backdoor();
    REQUIRE(backdoor.size() == 50);

    std::size_t exact = 0;
    for (const auto& [trigger, payload] : backdoor.payloads()) {
        protocol::ChatRequest request;
        request.model = "aealab-mock";
        request.messages = {{protocol::Role::user, trigger}};
        auto response =
            mock::respond(mock::ProviderMode::backdoored, faq, &backdoor, request);
        if (response.message.content == payload) ++exact;
    }
    double elapsed = ms_since(start);

    bool ok = exact == 50 && elapsed < 5000.0;
    report("A1", ok,
           "backdoored mode reproduced " + std::to_string(exact) + "/50 preset payloads in " +
               std::to_string(elapsed) + " ms (rate 1.0 required, < 5 s)");
    CHECK(exact == 50);
    CHECK(elapsed < 5000.0);
}

// Criteria 2 and 3a share one matrix run over the 20-scenario sdp fixture.
static harness::MatrixOutcome run_sdp_matrix(double* elapsed_ms) {
    auto scenarios_in = open_fixture("scenarios_sdp.jsonl");
    auto scenarios = harness::load_scenarios(scenarios_in);
    auto store = fixture_store();
    auto options = fixture_options("sdp");
    auto start = std::chrono::steady_clock::now();
    auto outcome = harness::run_matrix(scenarios, store, options);
    if (elapsed_ms) *elapsed_ms = ms_since(start);
    return outcome;
}

TEST_CASE("criterion 2: sdp attack efficacy") {
    double elapsed = 0.0;
    auto outcome = run_sdp_matrix(&elapsed);
    auto store = fixture_store();
    auto summary = harness::compute_metrics(outcome, store);

    bool ok = outcome.errors.empty() && summary.asr_baseline && *summary.asr_baseline == 0.0 &&
              summary.asr_attack && *summary.asr_attack >= 0.9 && elapsed < 10000.0;
    report("A2", ok,
           "asr_baseline=" + std::to_string(summary.asr_baseline.value_or(-1)) +
               " (= 0.0 required), asr_attack=" +
               std::to_string(summary.asr_attack.value_or(-1)) +
               " (>= 0.9 required), loopback matrix in " + std::to_string(elapsed) + " ms");
    CHECK(outcome.errors.empty());
    REQUIRE(summary.asr_baseline.has_value());
    CHECK(*summary.asr_baseline == 0.0);
    REQUIRE(summary.asr_attack.has_value());
    CHECK(*summary.asr_attack >= 0.9);
    CHECK(elapsed < 10000.0);
}

TEST_CASE("criterion 3: defense efficacy on sdp, impotence on mdp") {
    auto sdp_outcome = run_sdp_matrix(nullptr);
    auto store = fixture_store();
    auto sdp_summary = harness::compute_metrics(sdp_outcome, store);

    auto mdp_scenarios_in = open_fixture("scenarios_mdp.jsonl");
    auto mdp_scenarios = harness::load_scenarios(mdp_scenarios_in);
    auto mdp_options = fixture_options("mdp");
    auto mdp_outcome = harness::run_matrix(mdp_scenarios, store, mdp_options);
    auto mdp_summary = harness::compute_metrics(mdp_outcome, store);

    bool sdp_ok = sdp_summary.asr_defend && *sdp_summary.asr_defend == 0.0 &&
                  sdp_summary.mitigation_rate && *sdp_summary.mitigation_rate == 1.0;
    bool mdp_ok = mdp_outcome.errors.empty() && mdp_summary.asr_attack &&
                  mdp_summary.asr_defend && mdp_summary.asr_baseline &&
                  *mdp_summary.asr_attack == *mdp_summary.asr_defend &&
                  *mdp_summary.asr_attack == *mdp_summary.asr_baseline &&
                  *mdp_summary.asr_attack > 0.0;
    report("A3", sdp_ok && mdp_ok,
           "sdp asr_defend=" + std::to_string(sdp_summary.asr_defend.value_or(-1)) +
               " mitigation=" + std::to_string(sdp_summary.mitigation_rate.value_or(-1)) +
               " (0.0 / 1.0 required); mdp asr with defense " +
               std::to_string(mdp_summary.asr_defend.value_or(-1)) + " vs without " +
               std::to_string(mdp_summary.asr_attack.value_or(-1)) + " (must be identical)");
    REQUIRE(sdp_summary.asr_defend.has_value());
    CHECK(*sdp_summary.asr_defend == 0.0);
    REQUIRE(sdp_summary.mitigation_rate.has_value());
    CHECK(*sdp_summary.mitigation_rate == 1.0);
    CHECK(mdp_outcome.errors.empty());
    REQUIRE(mdp_summary.asr_attack.has_value());
    REQUIRE(mdp_summary.asr_defend.has_value());
    REQUIRE(mdp_summary.asr_baseline.has_value());
    CHECK(*mdp_summary.asr_attack == *mdp_summary.asr_defend);
    CHECK(*mdp_summary.asr_attack == *mdp_summary.asr_baseline);
    CHECK(*mdp_summary.asr_attack > 0.0);
}

TEST_CASE("criterion 4: pass-through identity over 100 randomized requests") {
    mock::FaqTable faq = fixture_faq();
    mock::MockServer provider(mock::ProviderMode::clean, fixture_faq(), std::nullopt);
    provider.start();

    gateway::GatewayConfig config;
    config.upstream.base_url = provider.base_url();
    config.audit_log_path = (scratch_dir("passthrough") / "audit.jsonl").string();
    config.middleware.attack_enabled = false;
    config.middleware.defense_enabled = false;
    config.middleware.resolve_texts();
    gateway::Gateway gw(config, fixture_store());
    gateway::GatewayServer server(gw);
    server.start();

    std::mt19937 rng(20250808);
    std::size_t identical = 0;
    httplib::Client client(server.base_url());
    for (int i = 0; i < 100; ++i) {
        protocol::ChatRequest request = gen::request(rng);
        auto res = client.Post("/v1/chat/completions",
                               protocol::serialize_chat_request(request), "application/json");
        REQUIRE(res);
        REQUIRE(res->status == 200);
        auto via_gateway = protocol::parse_chat_response(res->body);
        auto direct = mock::respond(mock::ProviderMode::clean, faq, nullptr, request);
        if (via_gateway.message.content == direct.message.content) ++identical;
    }
    bool ok = identical == 100;
    report("A4", ok,
           std::to_string(identical) +
               "/100 assistant contents byte-identical to upstream with middleware disabled");
    CHECK(identical == 100);
}

TEST_CASE("criterion 5: retrieval equals the brute-force oracle on 1000 instances") {
    std::mt19937 rng(424242);
    std::uniform_int_distribution<int> k_dist(1, 6);
    std::uniform_real_distribution<double> theta_dist(0.0, 1.0);
    std::uniform_int_distribution<int> exact_coin(0, 3);

    std::size_t mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        auto entries = gen::store_entries(rng, 100);
        auto store = attack::AttackStore::from_entries(entries);
        std::string query = gen::vocab_query(rng);
        if (!entries.empty() && exact_coin(rng) == 0) {
            query = entries[static_cast<std::size_t>(i) % entries.size()].trigger;
        }
        int k = k_dist(rng);
        double theta = theta_dist(rng);
        auto expected = oracle::retrieve(entries, query, k, theta);
        auto got = attack::retrieve(store, query, k, theta);
        if (!(got == expected)) ++mismatches;
        if (expected.exact && expected.selected.size() != 1) ++mismatches;
    }
    bool ok = mismatches == 0;
    report("A5", ok,
           std::to_string(mismatches) +
               " mismatches against the score-all-and-sort reference over 1000 randomized "
               "(store, query, k, theta) instances");
    CHECK(mismatches == 0);
}

TEST_CASE("criterion 6: protocol round-trip and malformed-input fuzzing") {
    std::mt19937 rng(777);
    std::size_t roundtrip_failures = 0;
    for (int i = 0; i < 1000; ++i) {
        auto request = gen::request(rng);
        if (!(protocol::parse_chat_request(protocol::serialize_chat_request(request)) ==
              request)) {
            ++roundtrip_failures;
        }
        auto response = gen::response(rng);
        if (!(protocol::parse_chat_response(protocol::serialize_chat_response(response)) ==
              response)) {
            ++roundtrip_failures;
        }
    }

    std::size_t crashes = 0;
    std::uniform_int_distribution<int> len_dist(0, 120);
    std::uniform_int_distribution<int> byte_dist(0, 255);
    std::uniform_int_distribution<int> strategy(0, 2);
    for (int i = 0; i < 10000; ++i) {
        std::string raw;
        if (strategy(rng) == 0) {
            // mutate a valid document so the parser sees near-misses too
            raw = protocol::serialize_chat_request(gen::request(rng));
            std::uniform_int_distribution<std::size_t> pos_dist(0, raw.size() - 1);
            raw[pos_dist(rng)] = static_cast<char>(byte_dist(rng));
            if (raw.size() > 4 && byte_dist(rng) % 2) raw.resize(raw.size() / 2);
        } else {
            int len = len_dist(rng);
            for (int b = 0; b < len; ++b) raw += static_cast<char>(byte_dist(rng));
        }
        try {
            protocol::parse_chat_request(raw);
        } catch (const Error&) {
            // structured error: fine
        } catch (...) {
            ++crashes;
        }
    }
    bool ok = roundtrip_failures == 0 && crashes == 0;
    report("A6", ok,
           std::to_string(roundtrip_failures) + " round-trip failures over 1000+1000 docs, " +
               std::to_string(crashes) + " unstructured failures over 10000 fuzzed inputs");
    CHECK(roundtrip_failures == 0);
    CHECK(crashes == 0);
}

TEST_CASE("criterion 7: composition order and verbatim preservation") {
    std::mt19937 rng(1618);
    std::size_t order_failures = 0;
    std::size_t verbatim_failures = 0;
    for (int mask = 0; mask < 8; ++mask) {
        bool with_attack = mask & 1;
        bool with_defense = mask & 2;
        bool with_history = mask & 4;
        for (int round = 0; round < 50; ++round) {
            std::string predefined = gen::text(rng);
            std::string user_input = gen::text(rng);
            std::string defense = gen::text(rng);
            prompt::AttackBlock block{gen::text(rng), gen::text(rng)};
            std::vector<protocol::ChatMessage> history;
            if (with_history) {
                history.push_back({protocol::Role::user, gen::text(rng)});
                history.push_back({protocol::Role::assistant, gen::text(rng)});
            }
            auto cp = prompt::compose(
                predefined, user_input, history,
                with_attack ? std::optional<prompt::AttackBlock>(block) : std::nullopt,
                with_defense ? std::optional<std::string>(defense) : std::nullopt);

            std::vector<prompt::SegmentLabel> expected{prompt::SegmentLabel::predefined_prompt};
            if (with_defense) expected.push_back(prompt::SegmentLabel::defense_prompt);
            if (with_attack) {
                expected.push_back(prompt::SegmentLabel::attacker_prompt);
                expected.push_back(prompt::SegmentLabel::attacker_data);
            }
            expected.push_back(prompt::SegmentLabel::user_input);
            if (with_history) expected.push_back(prompt::SegmentLabel::history);
            if (prompt::trace(cp) != expected) ++order_failures;

            for (const auto& segment : cp.segments) {
                const std::string* source = nullptr;
                switch (segment.label) {
                    case prompt::SegmentLabel::predefined_prompt: source = &predefined; break;
                    case prompt::SegmentLabel::defense_prompt: source = &defense; break;
                    case prompt::SegmentLabel::attacker_prompt:
                        source = &block.attacker_prompt;
                        break;
                    case prompt::SegmentLabel::attacker_data:
                        source = &block.attacker_data;
                        break;
                    case prompt::SegmentLabel::user_input: source = &user_input; break;
                    case prompt::SegmentLabel::history: break;
                }
                if (source && segment.text != *source) ++verbatim_failures;
            }
        }
    }
    bool ok = order_failures == 0 && verbatim_failures == 0;
    report("A7", ok,
           std::to_string(order_failures) + " order violations and " +
               std::to_string(verbatim_failures) +
               " verbatim violations over 8x50 composition cases");
    CHECK(order_failures == 0);
    CHECK(verbatim_failures == 0);
}

TEST_CASE("criterion 8: detector calibration") {
    auto store = fixture_store();
    mock::FaqTable faq = fixture_faq();

    std::size_t verbatim_misses = 0;
    for (const auto& entry : store.entries()) {
        auto result = detector::payload_overlap(entry.payload, store.entries());
        if (result.score != 1.0) ++verbatim_misses;
    }

    std::size_t clean_hits = 0;
    auto check_clean = [&](const std::string& text) {
        if (detector::payload_overlap(text, store.entries()).score != 0.0) ++clean_hits;
    };
    for (const auto& [question, answer] : faq.answers()) check_clean(answer);
    check_clean(std::string(prompts::kFallbackAnswer));

    std::vector<attack::AttackEntry> three_of_six{
        {"f1", "unused trigger", "alpha bravo charlie delta echo foxtrot",
         attack::Category::advertisement, {}}};
    double partial =
        detector::payload_overlap("mentions alpha, then bravo, then charlie only",
                                  three_of_six).score;

    bool ok = verbatim_misses == 0 && clean_hits == 0 && partial == 0.5;
    report("A8", ok,
           "verbatim payload overlap misses=" + std::to_string(verbatim_misses) +
               ", clean-corpus false positives=" + std::to_string(clean_hits) +
               ", 3-of-6-token fixture=" + std::to_string(partial) + " (0.5 required)");
    CHECK(verbatim_misses == 0);
    CHECK(clean_hits == 0);
    CHECK(partial == 0.5);
}
