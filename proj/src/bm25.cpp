// SPDX-License-Identifier: Apache-2.0
#include "cfr/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "cfr/error.hpp"

namespace cfr {

Bm25Index Bm25Index::build(const std::vector<DocumentSpan>& spans, Bm25Params params) {
    if (spans.empty()) throw InvalidArgument("cannot build a BM25 index over zero documents");
    if (!(params.k1 > 0.0)) throw InvalidArgument("k1 must be positive");
    if (!(params.b >= 0.0 && params.b <= 1.0)) throw InvalidArgument("b must be in [0, 1]");

    Bm25Index idx;
    idx.params_ = params;
    idx.doc_ids_.reserve(spans.size());
    idx.doc_lengths_.reserve(spans.size());
    std::uint64_t total = 0;
    for (std::size_t ord = 0; ord < spans.size(); ++ord) {
        const auto terms = lexical_terms(spans[ord].text);
        std::map<std::string_view, std::uint32_t> tf;
        for (const auto& t : terms) ++tf[t];
        for (const auto& [term, count] : tf) {
            idx.postings_[std::string(term)].push_back(
                Posting{static_cast<std::uint32_t>(ord), count});
        }
        idx.doc_ids_.push_back(spans[ord].doc_id);
        idx.doc_lengths_.push_back(static_cast<std::uint32_t>(terms.size()));
        total += terms.size();
    }
    idx.avg_doc_length_ = static_cast<double>(total) / static_cast<double>(spans.size());
    return idx;
}

const std::vector<Posting>& Bm25Index::postings(std::string_view term) const {
    static const std::vector<Posting> kEmpty;
    auto it = postings_.find(std::string(term));
    return it == postings_.end() ? kEmpty : it->second;
}

double Bm25Index::idf(std::string_view term) const {
    const double n_docs = static_cast<double>(doc_ids_.size());
    const double n_t = static_cast<double>(postings(term).size());
    return std::log(1.0 + (n_docs - n_t + 0.5) / (n_t + 0.5));
}

std::vector<std::string> bm25_query_terms(std::string_view query_text) {
    auto terms = lexical_terms(query_text);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    return terms;
}

double Bm25Index::score(std::string_view query_text, std::size_t doc_ordinal) const {
    if (doc_ordinal >= doc_ids_.size()) throw InvalidArgument("document ordinal out of range");
    return score_all(query_text)[doc_ordinal];
}

std::vector<double> Bm25Index::score_all(std::string_view query_text) const {
    std::vector<double> scores(doc_ids_.size(), 0.0);
    const double k1 = params_.k1;
    const double b = params_.b;
    for (const auto& term : bm25_query_terms(query_text)) {
        const auto& plist = postings(term);
        if (plist.empty()) continue;
        const double w = idf(term);
        for (const auto& p : plist) {
            const double tf = p.tf;
            const double norm = k1 * (1.0 - b + b * doc_lengths_[p.doc] / avg_doc_length_);
            scores[p.doc] += w * (tf * (k1 + 1.0) / (tf + norm));
        }
    }
    return scores;
}

CandidateSets select_candidates(const Query& query, const DocumentSet& docset, int k, int l,
                                Bm25Params params) {
    if (k <= 0) throw InvalidArgument("k must be positive");
    if (l < 0) throw InvalidArgument("l must be non-negative");
    CandidateSets out;
    if (docset.spans.empty()) return out;

    std::set<std::string_view> ids;
    for (const auto& s : docset.spans) {
        if (!ids.insert(s.doc_id).second) {
            throw InvalidArgument("duplicate doc_id '" + s.doc_id + "' in document set");
        }
    }

    const auto index = Bm25Index::build(docset.spans, params);
    const auto scores = index.score_all(query.text);

    std::vector<std::size_t> wild, gold;
    for (std::size_t i = 0; i < docset.spans.size(); ++i) {
        (docset.spans[i].is_gold ? gold : wild).push_back(i);
    }
    auto by_rank = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return docset.spans[a].doc_id < docset.spans[b].doc_id;
    };
    auto take = [&](std::vector<std::size_t>& pool, int n, std::vector<DocumentSpan>& dst) {
        const auto keep = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(n));
        std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(),
                          by_rank);
        for (std::size_t i = 0; i < keep; ++i) dst.push_back(docset.spans[pool[i]]);
    };
    take(wild, k, out.wild);
    take(gold, l, out.gold);
    return out;
}

}  // namespace cfr
