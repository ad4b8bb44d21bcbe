// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "cfr/rng.hpp"
#include "cfr/text.hpp"

TEST_SUITE("text") {

TEST_CASE("whitespace tokenizer splits on ascii and unicode spaces") {
    const auto& tok = cfr::default_tokenizer();
    const auto t = tok.tokenize("  alpha\tbeta\ngamma\xC2\xA0" "delta\xE3\x80\x80" "eps  ");
    REQUIRE(t.size() == 5);
    CHECK(t[0] == "alpha");
    CHECK(t[3] == "delta");
    CHECK(t[4] == "eps");
    CHECK(tok.detokenize(t) == "alpha beta gamma delta eps");
    CHECK(tok.tokenize("").empty());
    CHECK(tok.tokenize(" \t\n").empty());
}

TEST_CASE("lexical and content terms") {
    CHECK(cfr::lexical_terms("The \"Dam\", completed!") ==
          std::vector<std::string>{"the", "dam", "completed"});
    CHECK(cfr::content_terms("What was the dam?") == std::vector<std::string>{"dam"});
    CHECK(cfr::lexical_terms("... -- !!").empty());
}

TEST_CASE("fnv1a64 reference values") {
    CHECK(cfr::fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(cfr::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(cfr::fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("sha256 reference values") {
    CHECK(cfr::sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(cfr::sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("rng draws are reproducible and bounded") {
    cfr::Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    cfr::Rng r(1);
    for (int i = 0; i < 1000; ++i) {
        CHECK(r.below(7) < 7);
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
    r.shuffle(std::span<int>(v));
    std::sort(v.begin(), v.end());
    CHECK(v == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}

}
