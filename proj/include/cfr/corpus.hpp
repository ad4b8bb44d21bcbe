// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfr/text.hpp"

namespace cfr {

enum class SourceDataset { averitec, claimdecomp, fever, hotpotqa, synthetic, fixture };

std::string_view to_string(SourceDataset s);
SourceDataset parse_source_dataset(std::string_view s);

struct SubQuestion {
    std::string claim_id;
    int q_index = 0;
    std::string text;
    std::optional<std::string> gold_answer;

    bool operator==(const SubQuestion&) const = default;
};

struct ClaimRecord {
    std::string claim_id;
    std::string text;
    std::optional<std::string> veracity_label;
    SourceDataset source_dataset = SourceDataset::fixture;
    std::vector<SubQuestion> subquestions;

    bool operator==(const ClaimRecord&) const = default;
};

struct Article {
    std::string article_id;
    std::string title;
    std::string body;
    bool is_gold = false;
    std::optional<std::string> url;

    bool operator==(const Article&) const = default;
};

/// An article attached to one (claim, subquestion) pair.
struct ArticleRecord {
    std::string claim_id;
    int q_index = 0;
    Article article;

    bool operator==(const ArticleRecord&) const = default;
};

struct DocumentSpan {
    std::string doc_id;
    std::string article_id;
    int span_index = 0;
    int token_start = 0;
    std::string text;  // "<title> <span body>"
    bool is_gold = false;

    bool operator==(const DocumentSpan&) const = default;
};

/// Wild spans first, then gold spans. doc_ids are unique within a set.
struct DocumentSet {
    std::string claim_id;
    int q_index = 0;
    std::vector<DocumentSpan> spans;

    bool operator==(const DocumentSet&) const = default;
};

struct Query {
    std::string claim_id;
    int q_index = 0;
    std::string text;

    bool operator==(const Query&) const = default;
};

struct ChunkConfig {
    int span_tokens = 200;
    int stride = 100;
};

struct Dataset {
    std::vector<ClaimRecord> claims;
    std::vector<ArticleRecord> articles;

    bool operator==(const Dataset&) const = default;

    const ClaimRecord* find_claim(std::string_view claim_id) const;
};

/// Sliding-window spans at token offsets 0, stride, 2*stride, ...; stops after
/// the first span that reaches the last token. Empty body gives no spans.
std::vector<DocumentSpan> chunk_article(const Article& article, const ChunkConfig& config,
                                        const Tokenizer& tokenizer = default_tokenizer());

/// Claim text, a single space, then the question text. When the question is
/// empty or identical to the claim the claim text is used once.
Query make_query(const ClaimRecord& claim, const SubQuestion& subq);

DocumentSet build_document_set(const ClaimRecord& claim, const SubQuestion& subq,
                               const std::vector<Article>& wild_articles,
                               const std::optional<Article>& gold_article,
                               const ChunkConfig& config,
                               const Tokenizer& tokenizer = default_tokenizer());

/// One DocumentSet per subquestion in (claim_id, q_index) order, using the
/// dataset's article records.
std::vector<DocumentSet> build_document_sets(const Dataset& dataset, const ChunkConfig& config,
                                             const Tokenizer& tokenizer = default_tokenizer());

// JSONL persistence. Claims and articles live in sibling files.
std::vector<ClaimRecord> read_claims(std::istream& in);
std::vector<ArticleRecord> read_articles(std::istream& in);
void write_claims(std::ostream& out, const std::vector<ClaimRecord>& claims);
void write_articles(std::ostream& out, const std::vector<ArticleRecord>& articles);

Dataset load_dataset(const std::filesystem::path& claims_path,
                     const std::filesystem::path& articles_path);
void save_dataset(const Dataset& dataset, const std::filesystem::path& claims_path,
                  const std::filesystem::path& articles_path);

/// Chunked corpus file: one DocumentSet per line.
void write_document_sets(std::ostream& out, const std::vector<DocumentSet>& sets,
                         const std::string& config_digest = {});
std::vector<DocumentSet> read_document_sets(std::istream& in);

}  // namespace cfr
