// SPDX-License-Identifier: Apache-2.0
#include "cfr/text.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include "cfr/error.hpp"

namespace cfr {

namespace {

// Returns the byte length of the whitespace sequence starting at pos, or 0.
std::size_t whitespace_len(std::string_view s, std::size_t pos) {
    const auto c = static_cast<unsigned char>(s[pos]);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
        return 1;
    }
    auto at = [&](std::size_t i) -> unsigned char {
        return i < s.size() ? static_cast<unsigned char>(s[i]) : 0;
    };
    if (c == 0xC2 && at(pos + 1) == 0xA0) return 2;  // U+00A0
    if (c == 0xE2 && at(pos + 1) == 0x80) {
        const unsigned char c2 = at(pos + 2);
        if ((c2 >= 0x80 && c2 <= 0x8A) || c2 == 0xA8 || c2 == 0xA9 || c2 == 0xAF) return 3;
    }
    if (c == 0xE2 && at(pos + 1) == 0x81 && at(pos + 2) == 0x9F) return 3;  // U+205F
    if (c == 0xE3 && at(pos + 1) == 0x80 && at(pos + 2) == 0x80) return 3;  // U+3000
    return 0;
}

const std::unordered_set<std::string_view>& stopwords() {
    static const std::unordered_set<std::string_view> words = {
        "a",     "an",    "the",   "and",   "or",    "but",   "if",    "of",    "to",
        "in",    "on",    "at",    "by",    "for",   "with",  "from",  "as",    "is",
        "are",   "was",   "were",  "be",    "been",  "being", "am",    "do",    "does",
        "did",   "has",   "have",  "had",   "it",    "its",   "this",  "that",  "these",
        "those", "he",    "she",   "they",  "them",  "his",   "her",   "their", "we",
        "you",   "i",     "me",    "my",    "our",   "your",  "what",  "which", "who",
        "whom",  "whose", "when",  "where", "why",   "how",   "any",   "all",   "there",
        "than",  "then",  "so",    "such",  "into",  "about", "over",  "after", "before",
        "not",   "no",    "can",   "could", "would", "should", "will", "may",   "might",
        "much",  "many",  "some",  "also",  "very",  "just",  "only",  "own",   "same",
        "other", "more",  "most",  "s",     "t",     "up",    "out",   "via",   "per",
    };
    return words;
}

}  // namespace

std::vector<std::string> WhitespaceTokenizer::tokenize(std::string_view text) const {
    std::vector<std::string> out;
    std::size_t i = 0;
    std::size_t start = std::string_view::npos;
    while (i < text.size()) {
        const std::size_t ws = whitespace_len(text, i);
        if (ws > 0) {
            if (start != std::string_view::npos) {
                out.emplace_back(text.substr(start, i - start));
                start = std::string_view::npos;
            }
            i += ws;
        } else {
            if (start == std::string_view::npos) start = i;
            ++i;
        }
    }
    if (start != std::string_view::npos) out.emplace_back(text.substr(start));
    return out;
}

std::string WhitespaceTokenizer::detokenize(std::span<const std::string> tokens) const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

const Tokenizer& default_tokenizer() {
    static const WhitespaceTokenizer tok;
    return tok;
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::vector<std::string> lexical_terms(std::string_view text) {
    std::vector<std::string> out;
    for (auto& tok : default_tokenizer().tokenize(text)) {
        std::size_t b = 0, e = tok.size();
        while (b < e && std::ispunct(static_cast<unsigned char>(tok[b]))) ++b;
        while (e > b && std::ispunct(static_cast<unsigned char>(tok[e - 1]))) --e;
        if (b == e) continue;
        out.push_back(to_lower_ascii(std::string_view(tok).substr(b, e - b)));
    }
    return out;
}

std::vector<std::string> content_terms(std::string_view text) {
    auto terms = lexical_terms(text);
    std::erase_if(terms, [](const std::string& t) { return is_stopword(t); });
    return terms;
}

bool is_stopword(std::string_view term) { return stopwords().contains(term); }

std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[md[i] >> 4]);
        out.push_back(kHex[md[i] & 0xF]);
    }
    return out;
}

}  // namespace cfr
