// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfr/clients.hpp"
#include "cfr/corpus.hpp"
#include "cfr/reranker.hpp"
#include "cfr/supervision.hpp"

namespace cfr {

enum class Metric { equivalence, relevance, gold_at_10, veracity, mrr };

inline constexpr std::array<Metric, 5> kAllMetrics = {
    Metric::equivalence, Metric::relevance, Metric::gold_at_10, Metric::veracity, Metric::mrr};

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view name);

/// Closed veracity label set of a source dataset. The first entry is the
/// supporting label and the last one the abstaining label.
const std::vector<std::string>& veracity_label_set(SourceDataset source);

enum class ItemStatus { ok, unanswerable, errored };

std::string_view to_string(ItemStatus s);

struct MetricOutcome {
    ItemStatus status = ItemStatus::ok;
    double value = 0.0;  // meaningful only when status == ok
    std::string note;

    static MetricOutcome ok(double v) { return {ItemStatus::ok, v, {}}; }
    static MetricOutcome unanswerable(std::string note) {
        return {ItemStatus::unanswerable, 0.0, std::move(note)};
    }
    static MetricOutcome errored(std::string note) {
        return {ItemStatus::errored, 0.0, std::move(note)};
    }
};

// ---------------------------------------------------------------------------
// Per-item metrics. Each takes a ranked list produced by the retriever under
// test. Judge failures become errored outcomes, never exceptions.

/// Reads an answer from the top-1 document, shortens it and the gold answer,
/// and scores the pair. No gold answer: unanswerable.
MetricOutcome metric_equivalence(const QueryContext& ctx, const RankedList& ranked,
                                 const DocumentSet& docset, JudgeClient& judge);

/// 1 when the judge deems the top-1 document relevant.
MetricOutcome metric_top_doc_relevance(const QueryContext& ctx, const RankedList& ranked,
                                       const DocumentSet& docset, JudgeClient& judge);

/// 1 when a gold span appears within the first 10 ranks.
MetricOutcome metric_gold_at_10(const RankedList& ranked, const DocumentSet& docset);

/// 1 when the label predicted from the top-1 document equals the gold label.
/// No gold label: unanswerable. Gold label outside the set: errored.
MetricOutcome metric_veracity(const ClaimRecord& claim, const std::string& evidence,
                              JudgeClient& judge);

/// Reciprocal rank of the best-ranked gold span. No gold span: unanswerable.
MetricOutcome metric_reciprocal_rank(const RankedList& ranked, const DocumentSet& docset);

/// 1-based rank of doc_id in the list. Throws InvalidArgument when absent.
std::size_t rank_of(const RankedList& ranked, std::string_view doc_id);

/// Mean of 1/rank(positive). Throws InvalidArgument on an empty input.
double metric_mrr(const std::vector<std::pair<RankedList, std::string>>& ranked_sets);

// ---------------------------------------------------------------------------

struct BootstrapResult {
    double p = 1.0;
    bool significant = false;
    double alpha = 0.05;
    int resamples = 10000;
    std::uint64_t seed = 0;
};

/// One-sided paired bootstrap of mean(b) - mean(a): p is the fraction of
/// resamples whose difference is <= 0; significant when p < alpha.
BootstrapResult paired_bootstrap(const std::vector<double>& a, const std::vector<double>& b,
                                 int n_resamples = 10000, double alpha = 0.05,
                                 std::uint64_t seed = 0);

// ---------------------------------------------------------------------------

struct EvalItem {
    std::string claim_id;
    int q_index = 0;
    std::map<Metric, MetricOutcome> outcomes;
};

struct MetricSummary {
    double mean = 0.0;
    std::size_t n = 0;
    std::size_t unanswerable = 0;
    std::size_t errored = 0;
};

struct EvalReport {
    std::size_t input_size = 0;
    std::map<Metric, MetricSummary> metrics;
    std::map<Metric, BootstrapResult> significance;
    std::string config_digest;
    std::vector<EvalItem> items;  // (claim_id, q_index) order
};

struct EvalConfig {
    std::vector<Metric> metrics{kAllMetrics.begin(), kAllMetrics.end()};
    std::size_t n_examples = 200;  // 0 keeps every item
    double alpha = 0.05;
    int resamples = 10000;
    std::uint64_t seed = 0;
    int parallelism = 8;
};

/// Summaries from items. Means are plain arithmetic means of ok values.
std::map<Metric, MetricSummary> summarize(const std::vector<EvalItem>& items,
                                          const std::vector<Metric>& metrics,
                                          std::size_t input_size);

/// Pairs items by (claim_id, q_index) with the baseline and fills
/// report.significance for every metric both reports carry. Throws
/// InvalidArgument when the two reports cover different items.
void attach_significance(EvalReport& report, const EvalReport& baseline, const EvalConfig& config);

/// Draws up to n_examples items (seeded, kept in (claim_id, q_index) order),
/// ranks each document set with the adapter and computes the metrics.
EvalReport run_eval(const Dataset& dataset, const std::vector<DocumentSet>& docsets,
                    const Adapter& adapter, EmbeddingStore& store, JudgeClient& judge,
                    const EvalConfig& config, const std::string& config_digest,
                    const EvalReport* baseline = nullptr);

std::string eval_report_json(const EvalReport& report, bool include_items = true);
EvalReport parse_eval_report(std::string_view json_text);

/// Header: claim_id,q_index,<metric>... Excluded values are written empty.
void write_eval_csv(std::ostream& out, const EvalReport& report);

// ---------------------------------------------------------------------------
// Synthetic benchmark.

/// Exactly 4 alternate negatives, every text non-empty, the 6 documents
/// pairwise distinct. Throws SchemaError otherwise.
void validate_synthetic_set(const SyntheticSet& set);

/// Candidate documents in fixed order: positive, hard negative, alternates.
/// Ids are "pos", "hard", "alt1".."alt4".
std::vector<std::pair<std::string, std::string>> synthetic_documents(const SyntheticSet& set);

std::string synthetic_query(const SyntheticSet& set);

SyntheticSet build_synthetic_set(const std::string& claim, const std::string& question,
                                 JudgeClient& generator);

struct SyntheticEval {
    double mrr = 0.0;
    std::vector<double> reciprocal_ranks;
    std::vector<RankedList> ranked;
};

SyntheticEval eval_synthetic(const std::vector<SyntheticSet>& sets, const Adapter& adapter,
                             EmbeddingStore& store);

/// The MRR report in EvalReport form (one metric, "mrr").
EvalReport synthetic_report(const SyntheticEval& eval, const std::string& config_digest);

/// One (query, d+, d-) tuple per negative of each set, or only the
/// (query, positive, hard negative) tuple when hard_negative_only is set.
std::vector<TrainTuple> synthetic_tuples(const std::vector<SyntheticSet>& sets,
                                         bool hard_negative_only = false);

struct SeparableTaskConfig {
    std::size_t train_sets = 200;  // one hard-negative tuple each
    std::size_t heldout_sets = 100;
    std::uint64_t seed = 7;
};

struct SeparableTask {
    std::vector<SyntheticSet> train;
    std::vector<SyntheticSet> heldout;
};

/// Synthetic sets where the query and its positive share a cue drawn from a
/// small fixed vocabulary, while the hard negative repeats the query topic
/// without the cue.
SeparableTask make_separable_task(const SeparableTaskConfig& config = {});

void write_synthetic_sets(std::ostream& out, const std::vector<SyntheticSet>& sets,
                          const std::string& config_digest);
std::vector<SyntheticSet> read_synthetic_sets(std::istream& in);

}  // namespace cfr
