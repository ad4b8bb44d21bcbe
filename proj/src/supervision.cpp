// SPDX-License-Identifier: Apache-2.0
#include "cfr/supervision.hpp"

#include <json.hpp>

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "cfr/error.hpp"
#include "cfr/log.hpp"
#include "cfr/parallel.hpp"
#include "json_fields.hpp"

namespace cfr {

using detail::json;

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::gold: return "gold";
        case Strategy::distill: return "distill";
        case Strategy::distill_gold: return "distill_gold";
        case Strategy::lerc: return "lerc";
        case Strategy::distill_gold_plus_lerc: return "distill_gold_plus_lerc";
    }
    return "gold";
}

Strategy parse_strategy_tag(std::string_view tag) {
    for (auto s : {Strategy::gold, Strategy::distill, Strategy::distill_gold, Strategy::lerc,
                   Strategy::distill_gold_plus_lerc}) {
        if (to_string(s) == tag) return s;
    }
    throw InvalidArgument("unknown strategy tag '" + std::string(tag) + "'");
}

Strategy parse_strategy_flag(std::string_view flag) {
    if (flag == "gold") return Strategy::gold;
    if (flag == "distill") return Strategy::distill;
    if (flag == "distill-gold") return Strategy::distill_gold;
    if (flag == "lerc") return Strategy::lerc;
    if (flag == "cfr") return Strategy::distill_gold_plus_lerc;
    throw InvalidArgument("unknown strategy '" + std::string(flag) +
                          "' (expected gold, distill, distill-gold, lerc or cfr)");
}

QueryContext make_context(const ClaimRecord& claim, const SubQuestion& subq) {
    return QueryContext{make_query(claim, subq), claim.text, subq.text, subq.gold_answer};
}

namespace {

ContrastiveExample start(const QueryContext& ctx, Strategy s) {
    ContrastiveExample ex;
    ex.query = ctx.query;
    ex.strategy = s;
    return ex;
}

ContrastiveExample distill_over(const QueryContext& ctx, const std::vector<DocumentSpan>& pool,
                                JudgeClient& judge, Strategy s) {
    auto ex = start(ctx, s);
    for (const auto& span : pool) {
        DocAudit a{span.doc_id, std::nullopt, std::nullopt, "", ""};
        try {
            const auto verdict = judge.judge_relevance(ctx.claim, ctx.question, span.text);
            a.relevant = verdict.relevant;
            a.outcome = verdict.relevant ? "positive" : "negative";
            (verdict.relevant ? ex.positives : ex.negatives).push_back(span);
        } catch (const Error& e) {
            a.outcome = "unscored";
            a.note = e.what();
        }
        ex.audit.push_back(std::move(a));
    }
    return ex;
}

std::vector<DocumentSpan> wild_then_gold(const CandidateSets& c) {
    std::vector<DocumentSpan> pool = c.wild;
    pool.insert(pool.end(), c.gold.begin(), c.gold.end());
    return pool;
}

}  // namespace

ContrastiveExample gen_gold(const QueryContext& ctx, const CandidateSets& candidates) {
    auto ex = start(ctx, Strategy::gold);
    if (!candidates.gold.empty()) {
        ex.positives.push_back(candidates.gold.front());
        ex.audit.push_back(DocAudit{candidates.gold.front().doc_id, std::nullopt, std::nullopt,
                                    "positive", "top-ranked gold span"});
    }
    for (const auto& span : candidates.wild) {
        if (span.is_gold) continue;
        ex.negatives.push_back(span);
        ex.audit.push_back(DocAudit{span.doc_id, std::nullopt, std::nullopt, "negative", ""});
    }
    return ex;
}

ContrastiveExample gen_distill(const QueryContext& ctx, const CandidateSets& candidates,
                               JudgeClient& judge) {
    return distill_over(ctx, candidates.wild, judge, Strategy::distill);
}

ContrastiveExample gen_distill_gold(const QueryContext& ctx, const CandidateSets& candidates,
                                    JudgeClient& judge) {
    return distill_over(ctx, wild_then_gold(candidates), judge, Strategy::distill_gold);
}

ContrastiveExample gen_lerc(const QueryContext& ctx, const CandidateSets& candidates,
                            JudgeClient& judge, LercThresholds thresholds) {
    auto ex = start(ctx, Strategy::lerc);
    if (!ctx.gold_answer || ctx.gold_answer->empty()) return ex;

    std::string gold_short;
    try {
        gold_short = judge.shorten_answer(*ctx.gold_answer);
    } catch (const Error& e) {
        log_warn("gold answer shortening failed for " + ctx.query.claim_id + ": " + e.what());
        return ex;
    }

    const auto pool = wild_then_gold(candidates);
    std::vector<double> scores(pool.size(), -1.0);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        DocAudit a{pool[i].doc_id, std::nullopt, std::nullopt, "unscored", ""};
        try {
            const auto answer = judge.read_answer(ctx.claim, ctx.question, pool[i].text);
            const auto cand_short = judge.shorten_answer(answer.answer);
            scores[i] = judge.score_equivalence(gold_short, cand_short, ctx.question).score;
            a.equivalence = scores[i];
        } catch (const Error& e) {
            a.note = e.what();
        }
        ex.audit.push_back(std::move(a));
    }

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (!ex.audit[i].equivalence) continue;
        if (scores[i] > thresholds.positive && (!best || scores[i] > scores[*best])) best = i;
    }
    for (std::size_t i = 0; i < pool.size(); ++i) {
        auto& a = ex.audit[i];
        if (!a.equivalence) continue;
        if (best && i == *best) {
            a.outcome = "positive";
            ex.positives.push_back(pool[i]);
        } else if (scores[i] < thresholds.negative) {
            a.outcome = "negative";
            ex.negatives.push_back(pool[i]);
        } else {
            a.outcome = "discarded";
            a.note = scores[i] > thresholds.positive ? "not the highest-scoring positive"
                                                     : "mid-band score";
        }
    }
    return ex;
}

ContrastiveExample combine_cfr(const ContrastiveExample& distill_gold,
                               const ContrastiveExample& lerc) {
    ContrastiveExample ex;
    ex.query = distill_gold.query;
    ex.strategy = Strategy::distill_gold_plus_lerc;
    ex.audit = distill_gold.audit;

    std::set<std::string> pos_ids;
    for (const auto& d : distill_gold.positives) {
        if (pos_ids.insert(d.doc_id).second) ex.positives.push_back(d);
    }
    if (has_both_sides(lerc)) {
        for (const auto& d : lerc.positives) {
            if (pos_ids.insert(d.doc_id).second) ex.positives.push_back(d);
        }
        for (const auto& a : lerc.audit) {
            if (a.outcome != "positive") continue;
            for (auto& mine : ex.audit) {
                if (mine.doc_id == a.doc_id) {
                    mine.equivalence = a.equivalence;
                    if (mine.outcome != "positive") {
                        mine.outcome = "positive";
                        mine.note = "promoted by answer equivalence";
                    }
                }
            }
        }
    }
    for (const auto& d : distill_gold.negatives) {
        if (!pos_ids.contains(d.doc_id)) ex.negatives.push_back(d);
    }
    return ex;
}

ContrastiveExample gen_cfr(const QueryContext& ctx, const CandidateSets& candidates,
                           JudgeClient& judge, LercThresholds thresholds) {
    return combine_cfr(gen_distill_gold(ctx, candidates, judge),
                       gen_lerc(ctx, candidates, judge, thresholds));
}

ContrastiveExample generate_example(Strategy strategy, const QueryContext& ctx,
                                    const CandidateSets& candidates, JudgeClient& judge,
                                    LercThresholds thresholds) {
    switch (strategy) {
        case Strategy::gold: return gen_gold(ctx, candidates);
        case Strategy::distill: return gen_distill(ctx, candidates, judge);
        case Strategy::distill_gold: return gen_distill_gold(ctx, candidates, judge);
        case Strategy::lerc: return gen_lerc(ctx, candidates, judge, thresholds);
        case Strategy::distill_gold_plus_lerc: return gen_cfr(ctx, candidates, judge, thresholds);
    }
    throw InvalidArgument("unknown strategy");
}

bool has_both_sides(const ContrastiveExample& ex) {
    return !ex.positives.empty() && !ex.negatives.empty();
}

std::vector<ContrastiveExample> filter_empty(std::vector<ContrastiveExample> examples) {
    std::erase_if(examples, [](const ContrastiveExample& ex) { return !has_both_sides(ex); });
    return examples;
}

std::vector<TrainTuple> explode_tuples(const ContrastiveExample& example) {
    std::vector<TrainTuple> out;
    out.reserve(example.positives.size() * example.negatives.size());
    for (const auto& p : example.positives) {
        for (const auto& n : example.negatives) out.push_back(TrainTuple{example.query, p, n});
    }
    return out;
}

std::vector<TrainTuple> explode_all(const std::vector<ContrastiveExample>& examples) {
    std::vector<TrainTuple> out;
    for (const auto& ex : examples) {
        auto t = explode_tuples(ex);
        std::move(t.begin(), t.end(), std::back_inserter(out));
    }
    return out;
}

DatasetStats compute_stats(const std::vector<ContrastiveExample>& examples) {
    if (examples.empty()) throw InvalidArgument("cannot compute statistics of an empty training set");
    DatasetStats s;
    s.n_examples = examples.size();
    s.strategy = examples.front().strategy;
    double pos = 0.0, neg = 0.0;
    for (const auto& ex : examples) {
        pos += static_cast<double>(ex.positives.size());
        neg += static_cast<double>(ex.negatives.size());
    }
    s.mean_pos = pos / static_cast<double>(examples.size());
    s.mean_neg = neg / static_cast<double>(examples.size());
    return s;
}

GenerationResult generate_training_set(const Dataset& dataset,
                                       const std::vector<DocumentSet>& docsets, Strategy strategy,
                                       JudgeClient& judge, const GenerationConfig& config) {
    std::map<std::pair<std::string, int>, const DocumentSet*> by_key;
    for (const auto& ds : docsets) by_key[{ds.claim_id, ds.q_index}] = &ds;

    struct Item {
        QueryContext ctx;
        const DocumentSet* docset;
    };
    std::vector<Item> items;
    for (const auto& claim : dataset.claims) {
        for (const auto& sq : claim.subquestions) {
            auto it = by_key.find({claim.claim_id, sq.q_index});
            if (it == by_key.end()) continue;
            items.push_back(Item{make_context(claim, sq), it->second});
        }
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        return std::tie(a.ctx.query.claim_id, a.ctx.query.q_index) <
               std::tie(b.ctx.query.claim_id, b.ctx.query.q_index);
    });

    std::vector<ContrastiveExample> generated(items.size());
    parallel_for_index(items.size(), config.parallelism, [&](std::size_t i) {
        const auto cands =
            select_candidates(items[i].ctx.query, *items[i].docset, config.k, config.l, config.bm25);
        generated[i] = generate_example(strategy, items[i].ctx, cands, judge, config.thresholds);
    });

    GenerationResult result;
    result.generated = generated.size();
    result.examples = filter_empty(std::move(generated));
    result.filtered_out = result.generated - result.examples.size();
    return result;
}

// ---------------------------------------------------------------------------
// JSONL

namespace {

json span_json(const DocumentSpan& s) {
    return json{{"doc_id", s.doc_id},         {"article_id", s.article_id},
                {"span_index", s.span_index}, {"token_start", s.token_start},
                {"text", s.text},             {"is_gold", s.is_gold}};
}

DocumentSpan span_from(const json& j, std::size_t line) {
    DocumentSpan s;
    s.doc_id = detail::require_string(j, "doc_id", line);
    s.article_id = detail::require_string(j, "article_id", line);
    s.span_index = detail::require_int(j, "span_index", line);
    s.token_start = detail::require_int(j, "token_start", line);
    s.text = detail::require_string(j, "text", line);
    s.is_gold = detail::require_bool(j, "is_gold", line);
    return s;
}

}  // namespace

void write_examples(std::ostream& out, const std::vector<ContrastiveExample>& examples,
                    const std::string& config_digest) {
    for (const auto& ex : examples) {
        json j;
        j["strategy"] = std::string(to_string(ex.strategy));
        j["claim_id"] = ex.query.claim_id;
        j["q_index"] = ex.query.q_index;
        j["query"] = ex.query.text;
        j["positives"] = json::array();
        for (const auto& s : ex.positives) j["positives"].push_back(span_json(s));
        j["negatives"] = json::array();
        for (const auto& s : ex.negatives) j["negatives"].push_back(span_json(s));
        j["audit"] = json::array();
        for (const auto& a : ex.audit) {
            json aj{{"doc_id", a.doc_id}, {"outcome", a.outcome}};
            if (a.relevant) aj["relevant"] = *a.relevant;
            if (a.equivalence) aj["equivalence"] = *a.equivalence;
            if (!a.note.empty()) aj["note"] = a.note;
            j["audit"].push_back(std::move(aj));
        }
        j["config_digest"] = config_digest;
        out << j.dump() << '\n';
    }
}

std::vector<ContrastiveExample> read_examples(std::istream& in) {
    std::vector<ContrastiveExample> out;
    detail::for_each_jsonl(in, [&](const json& rec, std::size_t line) {
        ContrastiveExample ex;
        try {
            ex.strategy = parse_strategy_tag(detail::require_string(rec, "strategy", line));
        } catch (const InvalidArgument& e) {
            throw SchemaError(line, e.what());
        }
        ex.query.claim_id = detail::require_string(rec, "claim_id", line);
        ex.query.q_index = detail::require_int(rec, "q_index", line);
        ex.query.text = detail::require_string(rec, "query", line);
        for (const auto& s : detail::require(rec, "positives", line)) ex.positives.push_back(span_from(s, line));
        for (const auto& s : detail::require(rec, "negatives", line)) ex.negatives.push_back(span_from(s, line));
        if (auto it = rec.find("audit"); it != rec.end() && it->is_array()) {
            for (const auto& a : *it) {
                DocAudit da;
                da.doc_id = detail::require_string(a, "doc_id", line);
                da.outcome = detail::require_string(a, "outcome", line);
                if (a.contains("relevant")) da.relevant = a["relevant"].get<bool>();
                if (a.contains("equivalence")) da.equivalence = a["equivalence"].get<double>();
                if (a.contains("note")) da.note = a["note"].get<std::string>();
                ex.audit.push_back(std::move(da));
            }
        }
        out.push_back(std::move(ex));
    });
    return out;
}

}  // namespace cfr
