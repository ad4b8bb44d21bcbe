// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "cfr/bm25.hpp"
#include "cfr/error.hpp"
#include "cfr/rng.hpp"
#include "support/oracles.hpp"

using namespace cfr;

namespace {

struct Corpus {
    std::vector<oracle::Doc> docs;
    DocumentSet set;
};

Corpus random_corpus(Rng& rng, std::size_t n_docs, std::size_t vocab) {
    Corpus c;
    c.set.claim_id = "c";
    for (std::size_t i = 0; i < n_docs; ++i) {
        const auto len = 1 + rng.below(30);
        std::string text;
        for (std::uint64_t t = 0; t < len; ++t) {
            text += (t ? " " : "") + std::string(1, static_cast<char>('a' + rng.below(vocab)));
        }
        const bool gold = rng.below(4) == 0;
        const std::string id = "d" + std::to_string(100 + i);
        c.docs.push_back({id, text, gold});
        c.set.spans.push_back(DocumentSpan{id, id, 0, 0, text, gold});
    }
    return c;
}

std::string random_query(Rng& rng, std::size_t vocab) {
    std::string q;
    const auto len = 1 + rng.below(6);
    for (std::uint64_t t = 0; t < len; ++t) {
        q += (t ? " " : "") + std::string(1, static_cast<char>('a' + rng.below(vocab + 2)));
    }
    return q;
}

std::vector<std::string> ids(const std::vector<DocumentSpan>& spans) {
    std::vector<std::string> out;
    for (const auto& s : spans) out.push_back(s.doc_id);
    return out;
}

}  // namespace

TEST_SUITE("bm25") {

TEST_CASE("scores match a brute-force computation") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto c = random_corpus(rng, 1 + rng.below(40), 8);
        const auto index = Bm25Index::build(c.set.spans);
        const auto q = random_query(rng, 8);
        const auto got = index.score_all(q);
        const auto want = oracle::bm25_scores(q, c.docs);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("candidate sets match the oracle top-k and top-l") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const auto c = random_corpus(rng, 1 + rng.below(40), 6);
        const auto q = random_query(rng, 6);
        const auto got = select_candidates(Query{"c", 0, q}, c.set, 10, 5);
        const auto [wild, gold] = oracle::bm25_candidates(q, c.docs, 10, 5);
        CHECK(ids(got.wild) == wild);
        CHECK(ids(got.gold) == gold);
        for (const auto& s : got.wild) CHECK_FALSE(s.is_gold);
        for (const auto& s : got.gold) CHECK(s.is_gold);
    }
}

TEST_CASE("repeated query terms count once") {
    std::vector<DocumentSpan> spans{{"a", "a", 0, 0, "cat dog", false}, {"b", "b", 0, 0, "dog", false}};
    const auto index = Bm25Index::build(spans);
    CHECK(index.score("cat cat cat", 0) == index.score("cat", 0));
    CHECK(bm25_query_terms("Dog cat, dog!") == std::vector<std::string>{"cat", "dog"});
}

TEST_CASE("terms are lowercased and punctuation-trimmed") {
    std::vector<DocumentSpan> spans{{"a", "a", 0, 0, "The Senate, voted.", false}};
    const auto index = Bm25Index::build(spans);
    CHECK(index.postings("senate").size() == 1);
    CHECK(index.postings("Senate,").empty());
    CHECK(index.score("SENATE", 0) > 0.0);
}

TEST_CASE("equal scores are ordered by ascending doc_id") {
    DocumentSet set{"c", 0, {{"z", "z", 0, 0, "x y", false}, {"m", "m", 0, 0, "x y", false},
                             {"a", "a", 0, 0, "x y", false}}};
    const auto got = select_candidates(Query{"c", 0, "x"}, set, 10, 5);
    CHECK(ids(got.wild) == std::vector<std::string>{"a", "m", "z"});
}

TEST_CASE("unmatched queries still fill the candidate sets") {
    DocumentSet set{"c", 0, {{"b", "b", 0, 0, "x", false}, {"a", "a", 0, 0, "y", true}}};
    const auto got = select_candidates(Query{"c", 0, "nothing"}, set, 10, 5);
    CHECK(got.wild.size() == 1);
    CHECK(got.gold.size() == 1);
}

TEST_CASE("degenerate inputs") {
    CHECK_THROWS_AS(Bm25Index::build({}), InvalidArgument);
    const auto empty = select_candidates(Query{"c", 0, "x"}, DocumentSet{"c", 0, {}}, 10, 5);
    CHECK(empty.wild.empty());
    CHECK(empty.gold.empty());
    DocumentSet dup{"c", 0, {{"a", "a", 0, 0, "x", false}, {"a", "a", 0, 0, "y", false}}};
    CHECK_THROWS_AS(select_candidates(Query{"c", 0, "x"}, dup, 10, 5), InvalidArgument);
    CHECK_THROWS_AS(select_candidates(Query{"c", 0, "x"}, dup, 0, 5), InvalidArgument);
    std::vector<DocumentSpan> one{{"a", "a", 0, 0, "x", false}};
    CHECK_THROWS_AS(Bm25Index::build(one, Bm25Params{0.0, 0.75}), InvalidArgument);
    CHECK_THROWS_AS(Bm25Index::build(one, Bm25Params{1.2, 1.5}), InvalidArgument);
}

}
