// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfr/bm25.hpp"
#include "cfr/clients.hpp"
#include "cfr/corpus.hpp"

namespace cfr {

enum class Strategy { gold, distill, distill_gold, lerc, distill_gold_plus_lerc };

/// Tag used in files: gold, distill, distill_gold, lerc, distill_gold_plus_lerc.
std::string_view to_string(Strategy s);
Strategy parse_strategy_tag(std::string_view tag);

/// Command-line spelling: gold, distill, distill-gold, lerc, cfr.
Strategy parse_strategy_flag(std::string_view flag);

/// What happened to one candidate document while building an example.
struct DocAudit {
    std::string doc_id;
    std::optional<bool> relevant;       // relevance verdict
    std::optional<double> equivalence;  // answer-equivalence score
    std::string outcome;  // "positive", "negative", "discarded", "unscored"
    std::string note;

    bool operator==(const DocAudit&) const = default;
};

/// The inputs a generator sees for one (claim, subquestion).
struct QueryContext {
    Query query;
    std::string claim;
    std::string question;
    std::optional<std::string> gold_answer;
};

QueryContext make_context(const ClaimRecord& claim, const SubQuestion& subq);

struct ContrastiveExample {
    Query query;
    std::vector<DocumentSpan> positives;
    std::vector<DocumentSpan> negatives;
    Strategy strategy = Strategy::gold;
    std::vector<DocAudit> audit;

    bool operator==(const ContrastiveExample&) const = default;
};

struct TrainTuple {
    Query query;
    DocumentSpan positive;
    DocumentSpan negative;

    bool operator==(const TrainTuple&) const = default;
};

struct DatasetStats {
    std::size_t n_examples = 0;
    double mean_pos = 0.0;
    double mean_neg = 0.0;
    Strategy strategy = Strategy::gold;
};

struct LercThresholds {
    double positive = 0.7;  // scores strictly above become positive candidates
    double negative = 0.3;  // scores strictly below become negatives
};

/// D+ = the top-BM25 gold span; D- = every non-gold span of S.
ContrastiveExample gen_gold(const QueryContext& ctx, const CandidateSets& candidates);

/// One relevance call per span of S; relevant spans go to D+, the rest to D-.
ContrastiveExample gen_distill(const QueryContext& ctx, const CandidateSets& candidates,
                               JudgeClient& judge);

/// As gen_distill over S followed by G.
ContrastiveExample gen_distill_gold(const QueryContext& ctx, const CandidateSets& candidates,
                                    JudgeClient& judge);

/// Reads an answer from every span of S then G and scores its shortened form
/// against the shortened gold answer. D+ is the single highest score above the
/// positive threshold (earliest span wins ties); D- is every score below the
/// negative threshold; mid-band and failed spans are discarded.
ContrastiveExample gen_lerc(const QueryContext& ctx, const CandidateSets& candidates,
                            JudgeClient& judge, LercThresholds thresholds = {});

/// D+ = distill-gold positives plus answer-equivalence positives (by doc_id);
/// D- = distill-gold negatives not in D+. The equivalence example only
/// contributes when it survives empty-side filtering.
ContrastiveExample combine_cfr(const ContrastiveExample& distill_gold,
                               const ContrastiveExample& lerc);

ContrastiveExample gen_cfr(const QueryContext& ctx, const CandidateSets& candidates,
                           JudgeClient& judge, LercThresholds thresholds = {});

ContrastiveExample generate_example(Strategy strategy, const QueryContext& ctx,
                                    const CandidateSets& candidates, JudgeClient& judge,
                                    LercThresholds thresholds = {});

bool has_both_sides(const ContrastiveExample& ex);

/// Drops examples with an empty D+ or D-.
std::vector<ContrastiveExample> filter_empty(std::vector<ContrastiveExample> examples);

/// Every (d+, d-) pair of the example, positives outer.
std::vector<TrainTuple> explode_tuples(const ContrastiveExample& example);
std::vector<TrainTuple> explode_all(const std::vector<ContrastiveExample>& examples);

/// Throws InvalidArgument on an empty set.
DatasetStats compute_stats(const std::vector<ContrastiveExample>& examples);

struct GenerationConfig {
    int k = 10;
    int l = 5;
    Bm25Params bm25;
    LercThresholds thresholds;
    int parallelism = 8;
};

struct GenerationResult {
    std::vector<ContrastiveExample> examples;  // after filtering, (claim_id, q_index) order
    std::size_t generated = 0;
    std::size_t filtered_out = 0;
};

/// Candidate selection plus example generation for every subquestion of the
/// dataset that has a document set.
GenerationResult generate_training_set(const Dataset& dataset,
                                       const std::vector<DocumentSet>& docsets, Strategy strategy,
                                       JudgeClient& judge, const GenerationConfig& config);

// Training-set JSONL: one example per line.
void write_examples(std::ostream& out, const std::vector<ContrastiveExample>& examples,
                    const std::string& config_digest);
std::vector<ContrastiveExample> read_examples(std::istream& in);

}  // namespace cfr
