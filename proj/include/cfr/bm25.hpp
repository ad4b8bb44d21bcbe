// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cfr/corpus.hpp"

namespace cfr {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    std::uint32_t doc = 0;  // ordinal into Bm25Index::doc_ids()
    std::uint32_t tf = 0;
};

/// Okapi BM25 over title-prefixed span text. Terms are lexical_terms(): whitespace
/// tokens, lowercased, punctuation-trimmed. A query term contributes once however
/// often it repeats in the query.
///
///   idf(t)      = ln(1 + (N - n_t + 0.5) / (n_t + 0.5))
///   score(q, d) = sum over distinct t in q of
///                 idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |d| / avgdl))
///
/// Distinct query terms are visited in lexicographic order.
class Bm25Index {
public:
    static Bm25Index build(const std::vector<DocumentSpan>& spans, Bm25Params params = {});

    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    const std::vector<std::uint32_t>& doc_lengths() const { return doc_lengths_; }
    double avg_doc_length() const { return avg_doc_length_; }
    const Bm25Params& params() const { return params_; }
    std::size_t size() const { return doc_ids_.size(); }

    /// Empty when the term is unknown.
    const std::vector<Posting>& postings(std::string_view term) const;
    double idf(std::string_view term) const;

    double score(std::string_view query_text, std::size_t doc_ordinal) const;

    /// Scores of every document for the query, indexed by ordinal.
    std::vector<double> score_all(std::string_view query_text) const;

private:
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    double avg_doc_length_ = 0.0;
    Bm25Params params_;
};

/// Distinct query terms in the order the scorer visits them.
std::vector<std::string> bm25_query_terms(std::string_view query_text);

struct CandidateSets {
    std::vector<DocumentSpan> wild;  // S: top-k non-gold spans
    std::vector<DocumentSpan> gold;  // G: top-l gold spans
};

/// Ranks every span of the set with BM25 and keeps the top k wild and top l gold
/// spans, each sorted by descending score then ascending doc_id.
CandidateSets select_candidates(const Query& query, const DocumentSet& docset, int k, int l,
                                Bm25Params params = {});

}  // namespace cfr
