// SPDX-License-Identifier: Apache-2.0
#include "cfr/evaluation.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "cfr/bm25.hpp"
#include "cfr/error.hpp"
#include "cfr/log.hpp"
#include "cfr/parallel.hpp"
#include "cfr/rng.hpp"
#include "json_fields.hpp"

namespace cfr {

using detail::json;

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::equivalence: return "equivalence";
        case Metric::relevance: return "relevance";
        case Metric::gold_at_10: return "gold_at_10";
        case Metric::veracity: return "veracity";
        case Metric::mrr: return "mrr";
    }
    return "mrr";
}

Metric parse_metric(std::string_view name) {
    for (auto m : kAllMetrics) {
        if (to_string(m) == name) return m;
    }
    throw InvalidArgument("unknown metric '" + std::string(name) + "'");
}

std::string_view to_string(ItemStatus s) {
    switch (s) {
        case ItemStatus::ok: return "ok";
        case ItemStatus::unanswerable: return "unanswerable";
        case ItemStatus::errored: return "errored";
    }
    return "ok";
}

namespace {

ItemStatus parse_status(std::string_view s) {
    for (auto v : {ItemStatus::ok, ItemStatus::unanswerable, ItemStatus::errored}) {
        if (to_string(v) == s) return v;
    }
    throw InvalidArgument("unknown item status '" + std::string(s) + "'");
}

}  // namespace

const std::vector<std::string>& veracity_label_set(SourceDataset source) {
    static const std::vector<std::string> fever{"SUPPORTS", "REFUTES", "NOT ENOUGH INFO"};
    static const std::vector<std::string> averitec{"Supported", "Refuted",
                                                   "Conflicting Evidence/Cherrypicking",
                                                   "Not Enough Evidence"};
    static const std::vector<std::string> claimdecomp{"true",        "false",      "mostly-true",
                                                      "half-true",   "barely-true", "pants-fire"};
    switch (source) {
        case SourceDataset::averitec: return averitec;
        case SourceDataset::claimdecomp: return claimdecomp;
        default: return fever;
    }
}

// ---------------------------------------------------------------------------

namespace {

const DocumentSpan* find_span(const DocumentSet& docset, std::string_view doc_id) {
    for (const auto& s : docset.spans) {
        if (s.doc_id == doc_id) return &s;
    }
    return nullptr;
}

const DocumentSpan& top_span(const RankedList& ranked, const DocumentSet& docset) {
    const auto* s = find_span(docset, top1(ranked));
    if (!s) throw InvalidArgument("ranked doc_id '" + top1(ranked) + "' not in document set");
    return *s;
}

}  // namespace

MetricOutcome metric_equivalence(const QueryContext& ctx, const RankedList& ranked,
                                 const DocumentSet& docset, JudgeClient& judge) {
    if (!ctx.gold_answer || ctx.gold_answer->empty()) {
        return MetricOutcome::unanswerable("no gold answer");
    }
    const auto& top = top_span(ranked, docset);
    try {
        const auto answer = judge.read_answer(ctx.claim, ctx.question, top.text);
        const auto cand = answer.short_answer ? *answer.short_answer
                                              : judge.shorten_answer(answer.answer);
        const auto gold = judge.shorten_answer(*ctx.gold_answer);
        return MetricOutcome::ok(clip_unit(judge.score_equivalence(gold, cand, ctx.question).score));
    } catch (const Error& e) {
        return MetricOutcome::errored(e.what());
    }
}

MetricOutcome metric_top_doc_relevance(const QueryContext& ctx, const RankedList& ranked,
                                       const DocumentSet& docset, JudgeClient& judge) {
    const auto& top = top_span(ranked, docset);
    try {
        return MetricOutcome::ok(judge.judge_relevance(ctx.claim, ctx.question, top.text).relevant
                                     ? 1.0
                                     : 0.0);
    } catch (const Error& e) {
        return MetricOutcome::errored(e.what());
    }
}

MetricOutcome metric_gold_at_10(const RankedList& ranked, const DocumentSet& docset) {
    const auto limit = std::min<std::size_t>(10, ranked.entries.size());
    for (std::size_t i = 0; i < limit; ++i) {
        const auto* s = find_span(docset, ranked.entries[i].doc_id);
        if (s && s->is_gold) return MetricOutcome::ok(1.0);
    }
    return MetricOutcome::ok(0.0);
}

MetricOutcome metric_veracity(const ClaimRecord& claim, const std::string& evidence,
                              JudgeClient& judge) {
    if (!claim.veracity_label) return MetricOutcome::unanswerable("no gold veracity label");
    const auto& labels = veracity_label_set(claim.source_dataset);
    if (std::find(labels.begin(), labels.end(), *claim.veracity_label) == labels.end()) {
        return MetricOutcome::errored("gold label '" + *claim.veracity_label +
                                      "' outside the label set");
    }
    try {
        const auto predicted = judge.judge_veracity(claim.text, evidence, labels);
        if (std::find(labels.begin(), labels.end(), predicted.label) == labels.end()) {
            return MetricOutcome::errored("predicted label '" + predicted.label +
                                          "' outside the label set");
        }
        return MetricOutcome::ok(predicted.label == *claim.veracity_label ? 1.0 : 0.0);
    } catch (const Error& e) {
        return MetricOutcome::errored(e.what());
    }
}

MetricOutcome metric_reciprocal_rank(const RankedList& ranked, const DocumentSet& docset) {
    for (std::size_t i = 0; i < ranked.entries.size(); ++i) {
        const auto* s = find_span(docset, ranked.entries[i].doc_id);
        if (s && s->is_gold) return MetricOutcome::ok(1.0 / static_cast<double>(i + 1));
    }
    return MetricOutcome::unanswerable("no gold span");
}

std::size_t rank_of(const RankedList& ranked, std::string_view doc_id) {
    for (std::size_t i = 0; i < ranked.entries.size(); ++i) {
        if (ranked.entries[i].doc_id == doc_id) return i + 1;
    }
    throw InvalidArgument("doc_id '" + std::string(doc_id) + "' not in ranking");
}

double metric_mrr(const std::vector<std::pair<RankedList, std::string>>& ranked_sets) {
    if (ranked_sets.empty()) throw InvalidArgument("MRR over an empty input");
    double sum = 0.0;
    for (const auto& [ranked, positive] : ranked_sets) {
        sum += 1.0 / static_cast<double>(rank_of(ranked, positive));
    }
    return sum / static_cast<double>(ranked_sets.size());
}

// ---------------------------------------------------------------------------

BootstrapResult paired_bootstrap(const std::vector<double>& a, const std::vector<double>& b,
                                 int n_resamples, double alpha, std::uint64_t seed) {
    if (a.size() != b.size()) throw InvalidArgument("paired bootstrap needs equal lengths");
    if (a.empty()) throw InvalidArgument("paired bootstrap needs at least one pair");
    if (n_resamples < 1) throw InvalidArgument("n_resamples must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must be in (0, 1)");
    const auto n = a.size();
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = b[i] - a[i];
    Rng rng(seed);
    int not_better = 0;
    for (int r = 0; r < n_resamples; ++r) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += diff[static_cast<std::size_t>(rng.below(n))];
        if (sum / static_cast<double>(n) <= 0.0) ++not_better;
    }
    BootstrapResult out;
    out.p = static_cast<double>(not_better) / static_cast<double>(n_resamples);
    out.significant = out.p < alpha;
    out.alpha = alpha;
    out.resamples = n_resamples;
    out.seed = seed;
    return out;
}

// ---------------------------------------------------------------------------

std::map<Metric, MetricSummary> summarize(const std::vector<EvalItem>& items,
                                          const std::vector<Metric>& metrics,
                                          std::size_t input_size) {
    std::map<Metric, MetricSummary> out;
    for (auto m : metrics) {
        MetricSummary s;
        double sum = 0.0;
        for (const auto& item : items) {
            auto it = item.outcomes.find(m);
            if (it == item.outcomes.end()) {
                ++s.errored;
                continue;
            }
            switch (it->second.status) {
                case ItemStatus::ok:
                    sum += it->second.value;
                    ++s.n;
                    break;
                case ItemStatus::unanswerable: ++s.unanswerable; break;
                case ItemStatus::errored: ++s.errored; break;
            }
        }
        s.errored += input_size - items.size();
        s.mean = s.n ? sum / static_cast<double>(s.n) : 0.0;
        out[m] = s;
    }
    return out;
}

void attach_significance(EvalReport& report, const EvalReport& baseline, const EvalConfig& config) {
    if (report.items.size() != baseline.items.size()) {
        throw InvalidArgument("baseline covers " + std::to_string(baseline.items.size()) +
                              " items, report covers " + std::to_string(report.items.size()));
    }
    for (std::size_t i = 0; i < report.items.size(); ++i) {
        const auto& x = report.items[i];
        const auto& y = baseline.items[i];
        if (x.claim_id != y.claim_id || x.q_index != y.q_index) {
            throw InvalidArgument("baseline item " + std::to_string(i) + " is (" + y.claim_id +
                                  ", " + std::to_string(y.q_index) + "), report has (" +
                                  x.claim_id + ", " + std::to_string(x.q_index) + ")");
        }
    }
    report.significance.clear();
    for (const auto& [metric, summary] : report.metrics) {
        if (!baseline.metrics.count(metric)) continue;
        std::vector<double> a, b;
        for (std::size_t i = 0; i < report.items.size(); ++i) {
            auto xb = report.items[i].outcomes.find(metric);
            auto xa = baseline.items[i].outcomes.find(metric);
            if (xb == report.items[i].outcomes.end() || xa == baseline.items[i].outcomes.end())
                continue;
            if (xb->second.status != ItemStatus::ok || xa->second.status != ItemStatus::ok)
                continue;
            a.push_back(xa->second.value);
            b.push_back(xb->second.value);
        }
        if (a.empty()) continue;
        report.significance[metric] =
            paired_bootstrap(a, b, config.resamples, config.alpha, config.seed);
    }
}

EvalReport run_eval(const Dataset& dataset, const std::vector<DocumentSet>& docsets,
                    const Adapter& adapter, EmbeddingStore& store, JudgeClient& judge,
                    const EvalConfig& config, const std::string& config_digest,
                    const EvalReport* baseline) {
    if (config.metrics.empty()) throw InvalidArgument("no metrics requested");

    struct Job {
        const ClaimRecord* claim;
        const SubQuestion* subq;
        const DocumentSet* docset;
    };
    std::map<std::pair<std::string, int>, const DocumentSet*> by_key;
    for (const auto& d : docsets) by_key[{d.claim_id, d.q_index}] = &d;
    std::vector<Job> jobs;
    for (const auto& c : dataset.claims) {
        for (const auto& q : c.subquestions) {
            auto it = by_key.find({c.claim_id, q.q_index});
            jobs.push_back(Job{&c, &q, it == by_key.end() ? nullptr : it->second});
        }
    }
    std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
        return std::tie(a.claim->claim_id, a.subq->q_index) <
               std::tie(b.claim->claim_id, b.subq->q_index);
    });
    if (config.n_examples > 0 && jobs.size() > config.n_examples) {
        std::vector<std::size_t> idx(jobs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        Rng rng(config.seed);
        rng.shuffle(std::span<std::size_t>(idx));
        idx.resize(config.n_examples);
        std::sort(idx.begin(), idx.end());
        std::vector<Job> picked;
        for (auto i : idx) picked.push_back(jobs[i]);
        jobs = std::move(picked);
    }

    std::vector<std::string> texts;
    for (const auto& j : jobs) {
        if (!j.docset) continue;
        texts.push_back(make_query(*j.claim, *j.subq).text);
        for (const auto& s : j.docset->spans) texts.push_back(s.text);
    }
    store.prefetch(texts);

    EvalReport report;
    report.input_size = jobs.size();
    report.config_digest = config_digest;
    report.items.resize(jobs.size());
    std::atomic<std::size_t> warnings{0};
    parallel_for_index(jobs.size(), config.parallelism, [&](std::size_t i) {
        const auto& job = jobs[i];
        auto& item = report.items[i];
        item.claim_id = job.claim->claim_id;
        item.q_index = job.subq->q_index;
        if (!job.docset || job.docset->spans.empty()) {
            for (auto m : config.metrics) item.outcomes[m] = MetricOutcome::errored("no documents");
            ++warnings;
            return;
        }
        const auto ctx = make_context(*job.claim, *job.subq);
        const auto ranked = rank(ctx.query, *job.docset, adapter, store);
        for (auto m : config.metrics) {
            MetricOutcome o;
            switch (m) {
                case Metric::equivalence: o = metric_equivalence(ctx, ranked, *job.docset, judge); break;
                case Metric::relevance:
                    o = metric_top_doc_relevance(ctx, ranked, *job.docset, judge);
                    break;
                case Metric::gold_at_10: o = metric_gold_at_10(ranked, *job.docset); break;
                case Metric::veracity:
                    o = metric_veracity(*job.claim, top_span(ranked, *job.docset).text, judge);
                    break;
                case Metric::mrr: o = metric_reciprocal_rank(ranked, *job.docset); break;
            }
            if (o.status == ItemStatus::errored) ++warnings;
            item.outcomes[m] = std::move(o);
        }
    });
    if (warnings > 0) {
        log_warn("evaluation: " + std::to_string(warnings.load()) + " errored metric values excluded");
    }
    report.metrics = summarize(report.items, config.metrics, report.input_size);
    if (baseline) attach_significance(report, *baseline, config);
    return report;
}

// ---------------------------------------------------------------------------

std::string eval_report_json(const EvalReport& report, bool include_items) {
    json j;
    j["config_digest"] = report.config_digest;
    j["input_size"] = report.input_size;
    j["metrics"] = json::object();
    for (const auto& [m, s] : report.metrics) {
        j["metrics"][std::string(to_string(m))] = {
            {"mean", s.mean},
            {"n", s.n},
            {"excluded", {{"unanswerable", s.unanswerable}, {"errored", s.errored}}}};
    }
    j["significance"] = json::object();
    for (const auto& [m, b] : report.significance) {
        j["significance"][std::string(to_string(m))] = {{"p", b.p},
                                                         {"significant", b.significant},
                                                         {"alpha", b.alpha},
                                                         {"resamples", b.resamples},
                                                         {"seed", b.seed}};
    }
    if (include_items) {
        j["items"] = json::array();
        for (const auto& item : report.items) {
            json ij{{"claim_id", item.claim_id}, {"q_index", item.q_index}};
            ij["metrics"] = json::object();
            for (const auto& [m, o] : item.outcomes) {
                json oj{{"status", std::string(to_string(o.status))}};
                if (o.status == ItemStatus::ok) oj["value"] = o.value;
                if (!o.note.empty()) oj["note"] = o.note;
                ij["metrics"][std::string(to_string(m))] = std::move(oj);
            }
            j["items"].push_back(std::move(ij));
        }
    }
    return j.dump(2) + "\n";
}

EvalReport parse_eval_report(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(1, std::string("eval report: ") + e.what());
    }
    EvalReport r;
    try {
        r.config_digest = j.value("config_digest", "");
        r.input_size = j.value("input_size", std::size_t{0});
        for (const auto& [name, s] : j.at("metrics").items()) {
            MetricSummary ms;
            ms.mean = s.at("mean").get<double>();
            ms.n = s.at("n").get<std::size_t>();
            ms.unanswerable = s.at("excluded").at("unanswerable").get<std::size_t>();
            ms.errored = s.at("excluded").at("errored").get<std::size_t>();
            r.metrics[parse_metric(name)] = ms;
        }
        if (auto it = j.find("significance"); it != j.end()) {
            for (const auto& [name, s] : it->items()) {
                BootstrapResult b;
                b.p = s.at("p").get<double>();
                b.significant = s.at("significant").get<bool>();
                b.alpha = s.at("alpha").get<double>();
                b.resamples = s.at("resamples").get<int>();
                b.seed = s.at("seed").get<std::uint64_t>();
                r.significance[parse_metric(name)] = b;
            }
        }
        if (auto it = j.find("items"); it != j.end()) {
            for (const auto& ij : *it) {
                EvalItem item;
                item.claim_id = ij.at("claim_id").get<std::string>();
                item.q_index = ij.at("q_index").get<int>();
                for (const auto& [name, oj] : ij.at("metrics").items()) {
                    MetricOutcome o;
                    o.status = parse_status(oj.at("status").get<std::string>());
                    o.value = oj.value("value", 0.0);
                    o.note = oj.value("note", "");
                    item.outcomes[parse_metric(name)] = o;
                }
                r.items.push_back(std::move(item));
            }
        }
    } catch (const json::exception& e) {
        throw SchemaError(1, std::string("eval report: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw SchemaError(1, std::string("eval report: ") + e.what());
    }
    return r;
}

void write_eval_csv(std::ostream& out, const EvalReport& report) {
    out << "claim_id,q_index";
    for (const auto& [m, s] : report.metrics) out << ',' << to_string(m);
    out << '\n';
    for (const auto& item : report.items) {
        std::string id = item.claim_id;
        if (id.find_first_of(",\"\n") != std::string::npos) {
            std::string q = "\"";
            for (char c : id) q += c == '"' ? std::string("\"\"") : std::string(1, c);
            id = q + "\"";
        }
        out << id << ',' << item.q_index;
        for (const auto& [m, s] : report.metrics) {
            out << ',';
            auto it = item.outcomes.find(m);
            if (it != item.outcomes.end() && it->second.status == ItemStatus::ok) {
                out << json(it->second.value).dump();
            }
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Synthetic benchmark

void validate_synthetic_set(const SyntheticSet& set) {
    auto fail = [](const std::string& what) { throw SchemaError(0, "synthetic set: " + what); };
    if (set.claim.empty()) fail("empty claim");
    if (set.question.empty()) fail("empty question");
    if (set.alt_negatives.size() != 4) {
        fail("expected 4 alternate negatives, got " + std::to_string(set.alt_negatives.size()));
    }
    std::set<std::string> docs;
    auto add = [&](const std::string& text, const std::string& what) {
        if (text.empty()) fail("empty " + what);
        if (!docs.insert(text).second) fail("duplicate document text (" + what + ")");
    };
    add(set.positive, "positive");
    add(set.hard_negative, "hard negative");
    for (std::size_t i = 0; i < set.alt_negatives.size(); ++i) {
        if (set.alt_negatives[i].question.empty()) {
            fail("empty alternate question " + std::to_string(i + 1));
        }
        add(set.alt_negatives[i].document, "alternate negative " + std::to_string(i + 1));
    }
}

std::vector<std::pair<std::string, std::string>> synthetic_documents(const SyntheticSet& set) {
    std::vector<std::pair<std::string, std::string>> docs{{"pos", set.positive},
                                                          {"hard", set.hard_negative}};
    for (std::size_t i = 0; i < set.alt_negatives.size(); ++i) {
        docs.emplace_back("alt" + std::to_string(i + 1), set.alt_negatives[i].document);
    }
    return docs;
}

std::string synthetic_query(const SyntheticSet& set) {
    if (set.question.empty() || set.question == set.claim) return set.claim;
    return set.claim + " " + set.question;
}

SyntheticSet build_synthetic_set(const std::string& claim, const std::string& question,
                                 JudgeClient& generator) {
    auto set = generator.generate_synthetic(claim, question);
    validate_synthetic_set(set);
    return set;
}

SyntheticEval eval_synthetic(const std::vector<SyntheticSet>& sets, const Adapter& adapter,
                             EmbeddingStore& store) {
    if (sets.empty()) throw InvalidArgument("no synthetic sets to evaluate");
    std::vector<std::string> texts;
    for (const auto& s : sets) {
        validate_synthetic_set(s);
        texts.push_back(synthetic_query(s));
        for (auto& [id, text] : synthetic_documents(s)) texts.push_back(text);
    }
    store.prefetch(texts);
    SyntheticEval out;
    double sum = 0.0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        RankedList ranked{"synthetic-" + std::to_string(i), 0,
                          rank_texts(synthetic_query(sets[i]), synthetic_documents(sets[i]),
                                     adapter, store)};
        const double rr = 1.0 / static_cast<double>(rank_of(ranked, "pos"));
        sum += rr;
        out.reciprocal_ranks.push_back(rr);
        out.ranked.push_back(std::move(ranked));
    }
    out.mrr = sum / static_cast<double>(sets.size());
    return out;
}

EvalReport synthetic_report(const SyntheticEval& eval, const std::string& config_digest) {
    EvalReport r;
    r.input_size = eval.reciprocal_ranks.size();
    r.config_digest = config_digest;
    for (std::size_t i = 0; i < eval.ranked.size(); ++i) {
        EvalItem item{eval.ranked[i].claim_id, 0, {}};
        item.outcomes[Metric::mrr] = MetricOutcome::ok(eval.reciprocal_ranks[i]);
        r.items.push_back(std::move(item));
    }
    r.metrics = summarize(r.items, {Metric::mrr}, r.input_size);
    return r;
}

std::vector<TrainTuple> synthetic_tuples(const std::vector<SyntheticSet>& sets,
                                         bool hard_negative_only) {
    std::vector<TrainTuple> out;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        const auto& s = sets[i];
        const auto id = "synthetic-" + std::to_string(i);
        const auto docs = synthetic_documents(s);
        Query q{id, 0, synthetic_query(s)};
        auto span = [&](const std::pair<std::string, std::string>& d) {
            DocumentSpan span;
            span.doc_id = id + "#" + d.first;
            span.article_id = id;
            span.text = d.second;
            return span;
        };
        const auto last = hard_negative_only ? std::size_t{2} : docs.size();
        for (std::size_t k = 1; k < last; ++k) {
            out.push_back(TrainTuple{q, span(docs[0]), span(docs[k])});
        }
    }
    return out;
}

namespace {

constexpr std::string_view kTopics[] = {
    "harbor",   "council",  "budget",   "vaccine",  "pipeline", "election", "drought",
    "tariff",   "stadium",  "museum",   "railway",  "satellite", "wildfire", "treaty",
    "factory",  "pension",  "glacier",  "airline",  "senator",  "reservoir", "festival",
    "mining",   "hospital", "bridge",   "currency", "orchard",  "refinery", "lottery",
    "hurricane", "library", "border",   "subsidy",  "vineyard", "tunnel",   "ferry",
    "census",   "curfew",   "dialysis", "embassy",  "fishery",  "granary",  "highway",
    "inflation", "jury",    "kiln",     "lagoon",   "monsoon",  "nursery",  "observatory",
    "quarry",   "rainfall", "sawmill",  "turbine",  "uranium",  "vaccination", "warehouse",
    "yacht",    "zoning",   "aqueduct", "brewery"};

constexpr std::string_view kCues[] = {
    "kestrelmark", "marlinseal", "quillstone", "vortexline", "emberglyph", "cobaltsign",
    "juniperkey",  "saffronmark", "tidewrit",  "lumenhold",  "ravenquill", "orchidtrace",
    "basaltnote",  "cinderpost", "hazelcode",  "ferrowatch"};

constexpr std::string_view kFiller[] = {
    "ledger", "archive", "memo", "bulletin", "digest", "dossier", "transcript", "summary",
    "notice", "circular", "minutes", "roster", "brief", "register", "almanac", "chronicle"};

template <std::size_t N>
std::string_view pick(Rng& rng, const std::string_view (&arr)[N]) {
    return arr[rng.below(N)];
}

std::vector<std::string_view> distinct_topics(Rng& rng, std::size_t n) {
    std::vector<std::string_view> all(std::begin(kTopics), std::end(kTopics));
    rng.shuffle(std::span<std::string_view>(all));
    all.resize(n);
    return all;
}

std::string join(const std::vector<std::string_view>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

SyntheticSet separable_set(Rng& rng) {
    const auto t = distinct_topics(rng, 14);
    const auto cue = pick(rng, kCues);
    SyntheticSet s;
    s.claim = "reports say the " + std::string(t[0]) + " " + std::string(t[1]) + " " +
              std::string(t[2]) + " plan changed";
    s.question = "what " + std::string(cue) + " record covers the " + std::string(t[3]) + "?";
    s.positive = std::string(cue) + " " + std::string(cue) + " " + std::string(pick(rng, kFiller)) +
                 " " + std::string(t[1]);
    s.hard_negative = std::string(t[0]) + " " + std::string(t[1]) + " " + std::string(t[2]) +
                      " " + std::string(t[3]) + " plan changed say reports " +
                      std::string(pick(rng, kFiller));
    for (int i = 0; i < 4; ++i) {
        const auto a = t[4 + 2 * static_cast<std::size_t>(i)];
        const auto b = t[5 + 2 * static_cast<std::size_t>(i)];
        s.alt_negatives.push_back(
            AltNegative{"what happened to the " + std::string(a) + " " + std::string(b) + "?",
                        join({pick(rng, kFiller), a, b, t[static_cast<std::size_t>(i % 3)],
                              pick(rng, kFiller)})});
    }
    s.explanation = "shares cue " + std::string(cue) + " with the question";
    return s;
}

}  // namespace

SeparableTask make_separable_task(const SeparableTaskConfig& config) {
    Rng rng(config.seed);
    SeparableTask task;
    auto fill = [&](std::vector<SyntheticSet>& out, std::size_t n) {
        while (out.size() < n) {
            auto s = separable_set(rng);
            try {
                validate_synthetic_set(s);
            } catch (const SchemaError&) {
                continue;
            }
            out.push_back(std::move(s));
        }
    };
    fill(task.train, config.train_sets);
    fill(task.heldout, config.heldout_sets);
    return task;
}

void write_synthetic_sets(std::ostream& out, const std::vector<SyntheticSet>& sets,
                          const std::string& config_digest) {
    for (const auto& s : sets) {
        json alts = json::array();
        for (const auto& a : s.alt_negatives) {
            alts.push_back({{"question", a.question}, {"document", a.document}});
        }
        json j{{"claim", s.claim},
               {"question", s.question},
               {"positive", s.positive},
               {"hard_negative", s.hard_negative},
               {"alt_negatives", std::move(alts)},
               {"explanation", s.explanation},
               {"config_digest", config_digest}};
        out << j.dump() << '\n';
    }
}

std::vector<SyntheticSet> read_synthetic_sets(std::istream& in) {
    std::vector<SyntheticSet> out;
    detail::for_each_jsonl(in, [&](const json& rec, std::size_t line) {
        SyntheticSet s;
        s.claim = detail::require_string(rec, "claim", line);
        s.question = detail::require_string(rec, "question", line);
        s.positive = detail::require_string(rec, "positive", line);
        s.hard_negative = detail::require_string(rec, "hard_negative", line);
        s.explanation = detail::optional_string(rec, "explanation", line).value_or("");
        const auto& alts = detail::require(rec, "alt_negatives", line);
        if (!alts.is_array()) throw SchemaError(line, "field 'alt_negatives' must be an array");
        for (const auto& a : alts) {
            s.alt_negatives.push_back(AltNegative{detail::require_string(a, "question", line),
                                                  detail::require_string(a, "document", line)});
        }
        try {
            validate_synthetic_set(s);
        } catch (const SchemaError& e) {
            throw SchemaError(line, e.what());
        }
        out.push_back(std::move(s));
    });
    return out;
}

}  // namespace cfr
