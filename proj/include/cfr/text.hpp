// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cfr {

/// Splits text into tokens and joins token runs back into text.
/// Chunking counts spans in units of this tokenizer.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
    virtual std::string detokenize(std::span<const std::string> tokens) const = 0;
};

/// Unicode-whitespace word tokens. Runs of ASCII whitespace, NBSP, the
/// U+2000..U+200A spaces, U+2028/2029, U+202F, U+205F and U+3000 separate
/// tokens; detokenize joins with a single ASCII space.
class WhitespaceTokenizer final : public Tokenizer {
public:
    std::vector<std::string> tokenize(std::string_view text) const override;
    std::string detokenize(std::span<const std::string> tokens) const override;
};

const Tokenizer& default_tokenizer();

std::string to_lower_ascii(std::string_view s);

/// Whitespace tokens, lowercased, with leading/trailing ASCII punctuation
/// trimmed; tokens that become empty are dropped. Used for BM25 terms and by
/// the offline mocks.
std::vector<std::string> lexical_terms(std::string_view text);

/// lexical_terms minus a fixed English stopword list.
std::vector<std::string> content_terms(std::string_view text);

bool is_stopword(std::string_view term);

/// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view s) noexcept;

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

}  // namespace cfr
