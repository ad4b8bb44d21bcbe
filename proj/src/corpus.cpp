// SPDX-License-Identifier: Apache-2.0
#include "cfr/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cfr/error.hpp"
#include "cfr/io.hpp"
#include "json_fields.hpp"

namespace cfr {

using detail::json;

std::string_view to_string(SourceDataset s) {
    switch (s) {
        case SourceDataset::averitec: return "averitec";
        case SourceDataset::claimdecomp: return "claimdecomp";
        case SourceDataset::fever: return "fever";
        case SourceDataset::hotpotqa: return "hotpotqa";
        case SourceDataset::synthetic: return "synthetic";
        case SourceDataset::fixture: return "fixture";
    }
    return "fixture";
}

SourceDataset parse_source_dataset(std::string_view s) {
    for (auto v : {SourceDataset::averitec, SourceDataset::claimdecomp, SourceDataset::fever,
                   SourceDataset::hotpotqa, SourceDataset::synthetic, SourceDataset::fixture}) {
        if (to_string(v) == s) return v;
    }
    throw InvalidArgument("unknown source_dataset '" + std::string(s) + "'");
}

const ClaimRecord* Dataset::find_claim(std::string_view claim_id) const {
    for (const auto& c : claims) {
        if (c.claim_id == claim_id) return &c;
    }
    return nullptr;
}

std::vector<DocumentSpan> chunk_article(const Article& article, const ChunkConfig& config,
                                        const Tokenizer& tokenizer) {
    if (config.span_tokens <= 0) throw InvalidArgument("span_tokens must be positive");
    if (config.stride <= 0 || config.stride > config.span_tokens) {
        throw InvalidArgument("stride must be in (0, span_tokens]");
    }
    const auto tokens = tokenizer.tokenize(article.body);
    std::vector<DocumentSpan> spans;
    const auto n = tokens.size();
    const auto width = static_cast<std::size_t>(config.span_tokens);
    const auto stride = static_cast<std::size_t>(config.stride);
    for (std::size_t start = 0; start < n; start += stride) {
        const std::size_t end = std::min(start + width, n);
        DocumentSpan span;
        span.article_id = article.article_id;
        span.span_index = static_cast<int>(spans.size());
        span.doc_id = article.article_id + "#" + std::to_string(span.span_index);
        span.token_start = static_cast<int>(start);
        span.is_gold = article.is_gold;
        const std::span<const std::string> body(tokens.data() + start, end - start);
        span.text = article.title.empty() ? tokenizer.detokenize(body)
                                          : article.title + " " + tokenizer.detokenize(body);
        spans.push_back(std::move(span));
        if (end >= n) break;
    }
    return spans;
}

Query make_query(const ClaimRecord& claim, const SubQuestion& subq) {
    if (subq.claim_id != claim.claim_id) {
        throw InvalidArgument("subquestion claim_id '" + subq.claim_id +
                              "' does not match claim '" + claim.claim_id + "'");
    }
    Query q{claim.claim_id, subq.q_index, {}};
    if (subq.text.empty() || subq.text == claim.text) {
        q.text = claim.text;
    } else if (claim.text.empty()) {
        q.text = subq.text;
    } else {
        q.text = claim.text + " " + subq.text;
    }
    return q;
}

DocumentSet build_document_set(const ClaimRecord& claim, const SubQuestion& subq,
                               const std::vector<Article>& wild_articles,
                               const std::optional<Article>& gold_article,
                               const ChunkConfig& config, const Tokenizer& tokenizer) {
    if (gold_article && !gold_article->is_gold) {
        throw InvalidArgument("gold article '" + gold_article->article_id + "' is not flagged is_gold");
    }
    std::set<std::string> seen;
    auto check = [&](const Article& a) {
        if (!seen.insert(a.article_id).second) {
            throw InvalidArgument("duplicate article_id '" + a.article_id + "'");
        }
    };
    for (const auto& a : wild_articles) check(a);
    if (gold_article) check(*gold_article);

    DocumentSet set{claim.claim_id, subq.q_index, {}};
    for (const auto& a : wild_articles) {
        Article wild = a;
        wild.is_gold = false;
        auto spans = chunk_article(wild, config, tokenizer);
        std::move(spans.begin(), spans.end(), std::back_inserter(set.spans));
    }
    if (gold_article) {
        auto spans = chunk_article(*gold_article, config, tokenizer);
        std::move(spans.begin(), spans.end(), std::back_inserter(set.spans));
    }
    return set;
}

std::vector<DocumentSet> build_document_sets(const Dataset& dataset, const ChunkConfig& config,
                                             const Tokenizer& tokenizer) {
    std::map<std::pair<std::string, int>, std::vector<const Article*>> by_key;
    for (const auto& rec : dataset.articles) {
        by_key[{rec.claim_id, rec.q_index}].push_back(&rec.article);
    }
    std::vector<std::pair<std::string, int>> keys;
    std::map<std::pair<std::string, int>, std::pair<const ClaimRecord*, const SubQuestion*>> items;
    for (const auto& claim : dataset.claims) {
        for (const auto& sq : claim.subquestions) items[{claim.claim_id, sq.q_index}] = {&claim, &sq};
    }
    std::vector<DocumentSet> out;
    out.reserve(items.size());
    for (const auto& [key, item] : items) {
        std::vector<Article> wild;
        std::optional<Article> gold;
        if (auto it = by_key.find(key); it != by_key.end()) {
            for (const Article* a : it->second) {
                if (a->is_gold) {
                    if (gold) {
                        throw InvalidArgument("more than one gold article for " + key.first + "/" +
                                              std::to_string(key.second));
                    }
                    gold = *a;
                } else {
                    wild.push_back(*a);
                }
            }
        }
        out.push_back(build_document_set(*item.first, *item.second, wild, gold, config, tokenizer));
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSONL

namespace {

json claim_to_json(const ClaimRecord& c) {
    json j;
    j["claim_id"] = c.claim_id;
    j["text"] = c.text;
    if (c.veracity_label) j["veracity_label"] = *c.veracity_label;
    j["source_dataset"] = std::string(to_string(c.source_dataset));
    json sqs = json::array();
    for (const auto& sq : c.subquestions) {
        json s;
        s["q_index"] = sq.q_index;
        s["text"] = sq.text;
        if (sq.gold_answer) s["gold_answer"] = *sq.gold_answer;
        sqs.push_back(std::move(s));
    }
    j["subquestions"] = std::move(sqs);
    return j;
}

json article_to_json(const ArticleRecord& r) {
    json j;
    j["claim_id"] = r.claim_id;
    j["q_index"] = r.q_index;
    j["article_id"] = r.article.article_id;
    j["title"] = r.article.title;
    j["body"] = r.article.body;
    j["is_gold"] = r.article.is_gold;
    if (r.article.url) j["url"] = *r.article.url;
    return j;
}

json span_to_json(const DocumentSpan& s) {
    return json{{"doc_id", s.doc_id},       {"article_id", s.article_id},
                {"span_index", s.span_index}, {"token_start", s.token_start},
                {"text", s.text},           {"is_gold", s.is_gold}};
}

}  // namespace

std::vector<ClaimRecord> read_claims(std::istream& in) {
    std::vector<ClaimRecord> claims;
    std::set<std::string> ids;
    detail::for_each_jsonl(in, [&](const json& rec, std::size_t line) {
        ClaimRecord c;
        c.claim_id = detail::require_string(rec, "claim_id", line);
        c.text = detail::require_string(rec, "text", line);
        if (c.claim_id.empty()) throw SchemaError(line, "claim_id is empty");
        if (c.text.empty()) throw SchemaError(line, "claim text is empty");
        if (!ids.insert(c.claim_id).second) {
            throw SchemaError(line, "duplicate claim_id '" + c.claim_id + "'");
        }
        c.veracity_label = detail::optional_string(rec, "veracity_label", line);
        try {
            c.source_dataset =
                parse_source_dataset(detail::require_string(rec, "source_dataset", line));
        } catch (const InvalidArgument& e) {
            throw SchemaError(line, e.what());
        }
        const auto& sqs = detail::require(rec, "subquestions", line);
        if (!sqs.is_array()) throw SchemaError(line, "field 'subquestions' must be an array");
        std::set<int> seen;
        for (const auto& s : sqs) {
            SubQuestion sq;
            sq.claim_id = c.claim_id;
            sq.q_index = detail::require_int(s, "q_index", line);
            sq.text = detail::require_string(s, "text", line);
            sq.gold_answer = detail::optional_string(s, "gold_answer", line);
            if (sq.q_index < 0) throw SchemaError(line, "q_index must be >= 0");
            if (sq.text.empty()) throw SchemaError(line, "subquestion text is empty");
            if (!seen.insert(sq.q_index).second) {
                throw SchemaError(line, "duplicate q_index " + std::to_string(sq.q_index));
            }
            c.subquestions.push_back(std::move(sq));
        }
        // Single-hop datasets: the claim doubles as its only question.
        if (c.subquestions.empty() && (c.source_dataset == SourceDataset::fever ||
                                       c.source_dataset == SourceDataset::hotpotqa)) {
            c.subquestions.push_back(SubQuestion{c.claim_id, 0, c.text, std::nullopt});
        }
        claims.push_back(std::move(c));
    });
    return claims;
}

std::vector<ArticleRecord> read_articles(std::istream& in) {
    std::vector<ArticleRecord> out;
    std::set<std::pair<std::string, int>> has_gold;
    detail::for_each_jsonl(in, [&](const json& rec, std::size_t line) {
        ArticleRecord r;
        r.claim_id = detail::require_string(rec, "claim_id", line);
        r.q_index = detail::require_int(rec, "q_index", line);
        r.article.article_id = detail::require_string(rec, "article_id", line);
        r.article.title = detail::require_string(rec, "title", line);
        r.article.body = detail::require_string(rec, "body", line);
        r.article.is_gold = detail::require_bool(rec, "is_gold", line);
        r.article.url = detail::optional_string(rec, "url", line);
        if (r.article.body.empty()) throw SchemaError(line, "article body is empty");
        if (r.article.is_gold && !has_gold.insert({r.claim_id, r.q_index}).second) {
            throw SchemaError(line, "second gold article for " + r.claim_id + "/" +
                                        std::to_string(r.q_index));
        }
        out.push_back(std::move(r));
    });
    return out;
}

void write_claims(std::ostream& out, const std::vector<ClaimRecord>& claims) {
    for (const auto& c : claims) out << claim_to_json(c).dump() << '\n';
}

void write_articles(std::ostream& out, const std::vector<ArticleRecord>& articles) {
    for (const auto& a : articles) out << article_to_json(a).dump() << '\n';
}

Dataset load_dataset(const std::filesystem::path& claims_path,
                     const std::filesystem::path& articles_path) {
    Dataset d;
    {
        std::ifstream in(claims_path);
        if (!in) throw IoError("cannot open " + claims_path.string());
        d.claims = read_claims(in);
    }
    if (!articles_path.empty() && std::filesystem::exists(articles_path)) {
        std::ifstream in(articles_path);
        if (!in) throw IoError("cannot open " + articles_path.string());
        d.articles = read_articles(in);
    }
    return d;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& claims_path,
                  const std::filesystem::path& articles_path) {
    std::ostringstream claims, articles;
    write_claims(claims, dataset.claims);
    write_articles(articles, dataset.articles);
    write_file_atomic(claims_path, claims.str());
    write_file_atomic(articles_path, articles.str());
}

void write_document_sets(std::ostream& out, const std::vector<DocumentSet>& sets,
                         const std::string& config_digest) {
    for (const auto& s : sets) {
        json spans = json::array();
        for (const auto& sp : s.spans) spans.push_back(span_to_json(sp));
        json rec{{"claim_id", s.claim_id}, {"q_index", s.q_index}, {"spans", spans}};
        if (!config_digest.empty()) rec["config_digest"] = config_digest;
        out << rec.dump() << '\n';
    }
}

std::vector<DocumentSet> read_document_sets(std::istream& in) {
    std::vector<DocumentSet> out;
    detail::for_each_jsonl(in, [&](const json& rec, std::size_t line) {
        DocumentSet s;
        s.claim_id = detail::require_string(rec, "claim_id", line);
        s.q_index = detail::require_int(rec, "q_index", line);
        const auto& spans = detail::require(rec, "spans", line);
        if (!spans.is_array()) throw SchemaError(line, "field 'spans' must be an array");
        for (const auto& j : spans) {
            DocumentSpan sp;
            sp.doc_id = detail::require_string(j, "doc_id", line);
            sp.article_id = detail::require_string(j, "article_id", line);
            sp.span_index = detail::require_int(j, "span_index", line);
            sp.token_start = detail::require_int(j, "token_start", line);
            sp.text = detail::require_string(j, "text", line);
            sp.is_gold = detail::require_bool(j, "is_gold", line);
            s.spans.push_back(std::move(sp));
        }
        out.push_back(std::move(s));
    });
    return out;
}

}  // namespace cfr
