#include "aealab/detector.hpp"

#include "aealab/prompts.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <fstream>
#include <random>

using namespace aealab;
using namespace aealab::detector;
using attack::AttackEntry;
using attack::Category;
using protocol::Role;

namespace {

std::vector<AttackEntry> sample_entries() {
    return {
        {"a01", "best pizza in town", "Visit MarioPizza at http://mario.example",
         Category::advertisement, {"http://mario.example"}},
        {"a02", "good shoes", "alpha bravo charlie delta echo foxtrot", Category::advertisement,
         {}},
    };
}

} // namespace

TEST_CASE("payload_overlap scores verbatim, disjoint, and half-contained responses") {
    auto entries = sample_entries();
    SUBCASE("verbatim payload scores 1.0") {
        auto r = payload_overlap("Visit MarioPizza at http://mario.example", entries);
        CHECK(r.score == 1.0);
        CHECK(r.best_entry_id == "a01");
    }
    SUBCASE("disjoint response scores 0.0") {
        auto r = payload_overlap("nothing shared whatsoever", entries);
        CHECK(r.score == 0.0);
    }
    SUBCASE("3 of 6 payload tokens scores exactly 0.5") {
        auto r = payload_overlap("they said alpha and bravo and charlie", entries);
        CHECK(r.score == 0.5);
        CHECK(r.best_entry_id == "a02");
    }
    SUBCASE("empty entry list scores 0.0 with no best entry") {
        auto r = payload_overlap("anything", {});
        CHECK(r.score == 0.0);
        CHECK_FALSE(r.best_entry_id.has_value());
    }
}

TEST_CASE("payload_overlap is monotone under payload-token append") {
    std::mt19937 rng(11);
    auto entries = sample_entries();
    for (int i = 0; i < 100; ++i) {
        std::string response = gen::text(rng);
        double before = payload_overlap(response, entries).score;
        double after = payload_overlap(response + " mariopizza", entries).score;
        CHECK(after >= before);
    }
}

TEST_CASE("payload_overlap agrees with the brute-force containment oracle") {
    std::mt19937 rng(12);
    for (int i = 0; i < 200; ++i) {
        auto entries = gen::store_entries(rng, 10);
        std::string response = gen::vocab_query(rng);
        double expected = 0.0;
        for (const auto& entry : entries) {
            expected = std::max(expected, oracle::containment(entry.payload, response));
        }
        CHECK(payload_overlap(response, entries).score == expected);
    }
}

TEST_CASE("detect_links finds off-allowlist URLs in order") {
    SUBCASE("plain hit") {
        auto links = detect_links("Visit http://mario.example now", {});
        CHECK(links == std::vector<std::string>{"http://mario.example"});
    }
    SUBCASE("allowlisted") {
        std::vector<std::string> allow{"http://mario.example"};
        CHECK(detect_links("Visit http://mario.example now", allow).empty());
    }
    SUBCASE("no URLs") {
        CHECK(detect_links("nothing here", {}).empty());
    }
    SUBCASE("trailing punctuation excluded, order preserved") {
        auto links =
            detect_links("See https://a.example/x, then (http://b.example).", {});
        CHECK(links ==
              std::vector<std::string>{"https://a.example/x", "http://b.example"});
    }
}

TEST_CASE("scan_prompt finds bundled signatures in the attack prompt") {
    std::vector<std::string> signatures;
    for (auto s : prompts::kDefaultSignatures) signatures.emplace_back(s);

    SUBCASE("attack prompt trips the signature list") {
        auto hits =
            scan_prompt(std::string(prompts::kAttackPromptTemplate), signatures);
        CHECK(std::find(hits.begin(), hits.end(),
                        "slightly favor introducing our key content") != hits.end());
    }
    SUBCASE("benign system prompt is quiet") {
        CHECK(scan_prompt("You are a helpful assistant.", signatures).empty());
    }
    SUBCASE("empty signature list never fires") {
        CHECK(scan_prompt(std::string(prompts::kAttackPromptTemplate), {}).empty());
    }
    SUBCASE("matching is case-insensitive") {
        auto hits = scan_prompt("...SLIGHTLY FAVOR INTRODUCING OUR KEY CONTENT...", signatures);
        CHECK(hits == std::vector<std::string>{"slightly favor introducing our key content"});
    }
}

TEST_CASE("bundled signature file matches the embedded defaults") {
    std::ifstream in(AEALAB_DATA_DIR "/signatures.txt");
    REQUIRE(in);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) lines.push_back(line);
    }
    REQUIRE(lines.size() == prompts::kDefaultSignatures.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        CHECK(lines[i] == prompts::kDefaultSignatures[i]);
    }
}

TEST_CASE("classify combines the three detectors") {
    auto store = attack::AttackStore::from_entries(sample_entries());
    std::vector<std::string> signatures;
    for (auto s : prompts::kDefaultSignatures) signatures.emplace_back(s);

    Transcript clean;
    clean.request.model = "m";
    clean.request.messages = {{Role::system, "You are factual."}, {Role::user, "hello there"}};
    clean.response.id = "r";
    clean.response.message = {Role::assistant, "greetings friend"};

    SUBCASE("clean transcript: attacked=false, everything empty") {
        Verdict v = classify(clean, store, {}, signatures, 0.6);
        CHECK_FALSE(v.attacked);
        CHECK(v.overlap_score == 0.0);
        CHECK(v.matched_entry_ids.empty());
        CHECK(v.unexpected_links.empty());
        CHECK(v.signature_hits.empty());
    }
    SUBCASE("payload-bearing response flags with the matched entry id") {
        Transcript attacked = clean;
        attacked.response.message.content =
            "greetings friend. Visit MarioPizza at http://mario.example";
        Verdict v = classify(attacked, store, {}, signatures, 0.6);
        CHECK(v.attacked);
        CHECK(v.overlap_score == 1.0);
        CHECK(v.matched_entry_ids == std::vector<std::string>{"a01"});
    }
    SUBCASE("an off-allowlist link alone is enough") {
        Transcript linky = clean;
        linky.response.message.content = "see http://sneaky.example for more";
        Verdict v = classify(linky, store, {}, signatures, 0.6);
        CHECK(v.attacked);
        CHECK(v.overlap_score < 0.6);
        CHECK(v.unexpected_links == std::vector<std::string>{"http://sneaky.example"});
    }
    SUBCASE("attack prompt in the system text trips the signature scan") {
        Transcript prompted = clean;
        prompted.request.messages.front().content = std::string(prompts::kAttackPromptTemplate);
        Verdict v = classify(prompted, store, {}, signatures, 0.6);
        CHECK(v.attacked);
        CHECK_FALSE(v.signature_hits.empty());
    }
    SUBCASE("verdict invariant: attacked equals the disjunction") {
        std::mt19937 rng(77);
        for (int i = 0; i < 100; ++i) {
            Transcript t = clean;
            t.response.message.content = gen::text(rng);
            Verdict v = classify(t, store, {}, signatures, 0.6);
            CHECK(v.attacked == (v.overlap_score >= 0.6 || !v.unexpected_links.empty() ||
                                 !v.signature_hits.empty()));
        }
    }
}
