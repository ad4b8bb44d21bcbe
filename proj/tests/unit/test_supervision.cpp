// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <json.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cfr/error.hpp"
#include "cfr/log.hpp"
#include "cfr/supervision.hpp"

using namespace cfr;

namespace {

/// Relevance and equivalence looked up by passage text. read_answer echoes the
/// passage, shorten_answer is the identity. Unknown passages fail.
class ScriptedJudge final : public JudgeClient {
public:
    std::map<std::string, bool> relevant;
    std::map<std::string, double> score;
    std::set<std::string> broken;
    std::size_t relevance_calls = 0;

    JudgeVerdict judge_relevance(const std::string&, const std::string&, const std::string& p) override {
        ++relevance_calls;
        if (broken.contains(p)) throw TransportError("judge down", true);
        return JudgeVerdict{relevant.at(p), relevant.at(p) ? "Yes" : "No"};
    }
    ReaderAnswer read_answer(const std::string&, const std::string&, const std::string& p) override {
        if (broken.contains(p)) throw ProtocolError("garbled", p);
        return ReaderAnswer{p, std::nullopt};
    }
    std::string shorten_answer(const std::string& a) override { return a; }
    EquivalenceScore score_equivalence(const std::string&, const std::string& cand, const std::string&) override {
        return EquivalenceScore{score.at(cand)};
    }
    VeracityLabel judge_veracity(const std::string&, const std::string&, const std::vector<std::string>& l) override {
        return VeracityLabel{l.front()};
    }
    SyntheticSet generate_synthetic(const std::string&, const std::string&) override { return {}; }
};

DocumentSpan span(const std::string& id, bool gold) { return DocumentSpan{id, id, 0, 0, "text " + id, gold}; }

QueryContext ctx(std::optional<std::string> answer = "the answer") {
    return QueryContext{Query{"c1", 0, "claim question"}, "claim", "question", std::move(answer)};
}

CandidateSets candidates() {
    return CandidateSets{{span("w1", false), span("w2", false), span("w3", false)},
                         {span("g1", true), span("g2", true)}};
}

std::vector<std::string> ids(const std::vector<DocumentSpan>& s) {
    std::vector<std::string> out;
    for (const auto& d : s) out.push_back(d.doc_id);
    return out;
}

}  // namespace

TEST_SUITE("supervision") {

TEST_CASE("gold strategy uses the top gold span and every wild span") {
    const auto ex = gen_gold(ctx(), candidates());
    CHECK(ids(ex.positives) == std::vector<std::string>{"g1"});
    CHECK(ids(ex.negatives) == std::vector<std::string>{"w1", "w2", "w3"});
    CHECK(gen_gold(ctx(), CandidateSets{{span("w1", false)}, {}}).positives.empty());
}

TEST_CASE("distill judges only wild spans; distill-gold adds gold spans") {
    ScriptedJudge j;
    j.relevant = {{"text w1", true}, {"text w2", false}, {"text w3", false},
                  {"text g1", true}, {"text g2", false}};
    const auto d = gen_distill(ctx(), candidates(), j);
    CHECK(ids(d.positives) == std::vector<std::string>{"w1"});
    CHECK(ids(d.negatives) == std::vector<std::string>{"w2", "w3"});
    CHECK(j.relevance_calls == 3);

    const auto dg = gen_distill_gold(ctx(), candidates(), j);
    CHECK(ids(dg.positives) == std::vector<std::string>{"w1", "g1"});
    CHECK(ids(dg.negatives) == std::vector<std::string>{"w2", "w3", "g2"});
    CHECK(j.relevance_calls == 8);
}

TEST_CASE("judge failures leave spans unscored instead of aborting") {
    ScriptedJudge j;
    j.relevant = {{"text w1", true}, {"text w3", false}, {"text g1", true}, {"text g2", false}};
    j.broken = {"text w2"};
    const auto ex = gen_distill_gold(ctx(), candidates(), j);
    CHECK(ids(ex.positives) == std::vector<std::string>{"w1", "g1"});
    CHECK(ids(ex.negatives) == std::vector<std::string>{"w3", "g2"});
    CHECK(ex.audit[1].outcome == "unscored");
    CHECK_FALSE(ex.audit[1].note.empty());

    j.score = {{"text w1", 0.9}, {"text w3", 0.1}, {"text g1", 0.2}, {"text g2", 0.0}};
    const auto lerc = gen_lerc(ctx(), candidates(), j);
    CHECK(lerc.audit[1].outcome == "unscored");
    CHECK(ids(lerc.positives) == std::vector<std::string>{"w1"});
}

TEST_CASE("answer-equivalence thresholds are strict") {
    ScriptedJudge j;
    j.score = {{"text w1", 0.7}, {"text w2", 0.3}, {"text w3", 0.71},
               {"text g1", 0.29}, {"text g2", 0.95}};
    const auto ex = gen_lerc(ctx(), candidates(), j);
    CHECK(ids(ex.positives) == std::vector<std::string>{"g2"});
    CHECK(ids(ex.negatives) == std::vector<std::string>{"g1"});
    std::map<std::string, std::string> outcome;
    for (const auto& a : ex.audit) outcome[a.doc_id] = a.outcome;
    CHECK(outcome["w1"] == "discarded");
    CHECK(outcome["w2"] == "discarded");
    CHECK(outcome["w3"] == "discarded");
}

TEST_CASE("answer-equivalence keeps the earliest span on tied top scores") {
    ScriptedJudge j;
    j.score = {{"text w1", 0.1}, {"text w2", 0.9}, {"text w3", 0.9}, {"text g1", 0.9}, {"text g2", 0.0}};
    const auto ex = gen_lerc(ctx(), candidates(), j);
    CHECK(ids(ex.positives) == std::vector<std::string>{"w2"});
    CHECK(ids(ex.negatives) == std::vector<std::string>{"w1", "g2"});
}

TEST_CASE("answer-equivalence needs a gold answer") {
    ScriptedJudge j;
    const auto ex = gen_lerc(ctx(std::nullopt), candidates(), j);
    CHECK(ex.positives.empty());
    CHECK(ex.negatives.empty());
}

TEST_CASE("combined strategy unions positives and removes them from negatives") {
    ScriptedJudge j;
    j.relevant = {{"text w1", true}, {"text w2", false}, {"text w3", false},
                  {"text g1", false}, {"text g2", false}};
    j.score = {{"text w1", 0.1}, {"text w2", 0.1}, {"text w3", 0.9}, {"text g1", 0.5}, {"text g2", 0.0}};
    const auto ex = gen_cfr(ctx(), candidates(), j);
    CHECK(ex.strategy == Strategy::distill_gold_plus_lerc);
    CHECK(ids(ex.positives) == std::vector<std::string>{"w1", "w3"});
    CHECK(ids(ex.negatives) == std::vector<std::string>{"w2", "g1", "g2"});

    const auto dg = gen_distill_gold(ctx(), candidates(), j);
    const auto merged = ids(ex.positives);
    for (const auto& p : dg.positives) CHECK(std::count(merged.begin(), merged.end(), p.doc_id) == 1);
}

TEST_CASE("an answer-equivalence example with an empty side adds nothing") {
    ScriptedJudge j;
    j.relevant = {{"text w1", true}, {"text w2", false}, {"text w3", false},
                  {"text g1", false}, {"text g2", false}};
    j.score = {{"text w1", 0.5}, {"text w2", 0.5}, {"text w3", 0.9}, {"text g1", 0.5}, {"text g2", 0.5}};
    const auto lerc = gen_lerc(ctx(), candidates(), j);
    CHECK_FALSE(has_both_sides(lerc));
    const auto ex = gen_cfr(ctx(), candidates(), j);
    CHECK(ids(ex.positives) == std::vector<std::string>{"w1"});
    CHECK(ids(ex.negatives) == std::vector<std::string>{"w2", "w3", "g1", "g2"});
}

TEST_CASE("filtering and tuple explosion") {
    ContrastiveExample a{Query{"a", 0, "q"}, {span("p1", true), span("p2", true)},
                         {span("n1", false), span("n2", false), span("n3", false)}, Strategy::gold, {}};
    ContrastiveExample b{Query{"b", 0, "q"}, {}, {span("n1", false)}, Strategy::gold, {}};
    ContrastiveExample c{Query{"c", 0, "q"}, {span("p", true)}, {}, Strategy::gold, {}};
    const auto kept = filter_empty({a, b, c});
    REQUIRE(kept.size() == 1);
    const auto tuples = explode_all(kept);
    CHECK(tuples.size() == 6);
    CHECK(tuples[0].positive.doc_id == "p1");
    CHECK(tuples[0].negative.doc_id == "n1");
    CHECK(tuples[3].positive.doc_id == "p2");
    const auto stats = compute_stats({a, c});
    CHECK(stats.mean_pos == doctest::Approx(1.5));
    CHECK(stats.mean_neg == doctest::Approx(1.5));
    CHECK_THROWS_AS(compute_stats({}), InvalidArgument);
}

TEST_CASE("strategy names") {
    CHECK(parse_strategy_flag("cfr") == Strategy::distill_gold_plus_lerc);
    CHECK(parse_strategy_flag("distill-gold") == Strategy::distill_gold);
    CHECK(to_string(Strategy::distill_gold_plus_lerc) == "distill_gold_plus_lerc");
    CHECK(parse_strategy_tag("lerc") == Strategy::lerc);
    CHECK_THROWS_AS(parse_strategy_flag("best"), InvalidArgument);
}

TEST_CASE("training-set JSONL round trip") {
    ScriptedJudge j;
    j.relevant = {{"text w1", true}, {"text w2", false}, {"text w3", false},
                  {"text g1", true}, {"text g2", false}};
    const auto ex = gen_distill_gold(ctx(), candidates(), j);
    std::stringstream ss;
    write_examples(ss, {ex}, "dig");
    CHECK(ss.str().find("\"config_digest\":\"dig\"") != std::string::npos);
    const auto back = read_examples(ss);
    REQUIRE(back.size() == 1);
    CHECK(back[0] == ex);

    std::istringstream bad(R"({"strategy":"mystery","claim_id":"c","q_index":0,"query":"q","positives":[],"negatives":[]})");
    CHECK_THROWS_AS(read_examples(bad), SchemaError);
}

TEST_CASE("fixture corpus filters exactly the expected items per strategy") {
    set_log_level(LogLevel::off);
    const std::string dir = CFR_FIXTURE_DIR;
    const auto dataset = load_dataset(dir + "/claims.jsonl", dir + "/articles.jsonl");
    const auto docsets = build_document_sets(dataset, ChunkConfig{});
    std::ifstream f(dir + "/expected_filtered.json");
    const auto expected = nlohmann::json::parse(f);
    REQUIRE(docsets.size() == expected["items"].get<std::size_t>());
    OverlapJudge judge;
    for (auto s : {Strategy::gold, Strategy::distill, Strategy::distill_gold, Strategy::lerc,
                   Strategy::distill_gold_plus_lerc}) {
        CAPTURE(to_string(s));
        const auto result = generate_training_set(dataset, docsets, s, judge, GenerationConfig{});
        std::set<std::pair<std::string, int>> kept;
        for (const auto& ex : result.examples) kept.insert({ex.query.claim_id, ex.query.q_index});
        std::set<std::pair<std::string, int>> dropped;
        for (const auto& ds : docsets) {
            if (!kept.contains({ds.claim_id, ds.q_index})) dropped.insert({ds.claim_id, ds.q_index});
        }
        std::set<std::pair<std::string, int>> want;
        for (const auto& p : expected["filtered"][std::string(to_string(s))]) {
            want.insert({p[0].get<std::string>(), p[1].get<int>()});
        }
        CHECK(dropped == want);
        CHECK(result.filtered_out == want.size());
        CHECK(result.generated == docsets.size());
    }
}

}
