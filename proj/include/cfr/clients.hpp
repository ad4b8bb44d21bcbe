// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cfr {

struct EmbeddingVector {
    std::vector<double> values;
    std::string source_model;

    bool operator==(const EmbeddingVector&) const = default;
};

struct JudgeVerdict {
    bool relevant = false;
    std::string raw_response;  // "Yes" or "No"
};

struct ReaderAnswer {
    std::string answer;
    std::optional<std::string> short_answer;
};

struct EquivalenceScore {
    double score = 0.0;  // in [0, 1]
};

struct VeracityLabel {
    std::string label;

    bool operator==(const VeracityLabel&) const = default;
};

struct AltNegative {
    std::string question;
    std::string document;

    bool operator==(const AltNegative&) const = default;
};

/// One benchmark item: a positive, a hard negative and four documents that
/// answer alternate questions. Structural checks live in validate_synthetic_set().
struct SyntheticSet {
    std::string claim;
    std::string question;
    std::string positive;
    std::string hard_negative;
    std::vector<AltNegative> alt_negatives;
    std::string explanation;

    bool operator==(const SyntheticSet&) const = default;
};

/// Frozen text encoder. Output i corresponds to input i.
class EmbeddingClient {
public:
    virtual ~EmbeddingClient() = default;
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
    virtual std::string model_name() const = 0;
};

/// The reader/judge services: relevance labels, answers, answer shortening,
/// answer equivalence, veracity and synthetic-set generation.
class JudgeClient {
public:
    virtual ~JudgeClient() = default;
    virtual JudgeVerdict judge_relevance(const std::string& claim, const std::string& question,
                                         const std::string& passage) = 0;
    virtual ReaderAnswer read_answer(const std::string& claim, const std::string& question,
                                     const std::string& passage) = 0;
    virtual std::string shorten_answer(const std::string& answer) = 0;
    virtual EquivalenceScore score_equivalence(const std::string& gold_short,
                                               const std::string& candidate_short,
                                               const std::string& question) = 0;
    virtual VeracityLabel judge_veracity(const std::string& claim, const std::string& evidence,
                                         const std::vector<std::string>& label_set) = 0;
    virtual SyntheticSet generate_synthetic(const std::string& claim,
                                            const std::string& question) = 0;
};

// ---------------------------------------------------------------------------
// Wire-level parsing shared by the HTTP clients. Each returns a typed value or
// throws ProtocolError carrying the raw text.

/// Accepts "Yes"/"No" in any case, surrounding whitespace and quotes, and a
/// trailing period.
bool parse_yes_no(std::string_view raw);

/// Returns the member of label_set matching raw (case-insensitive, trimmed).
std::string parse_veracity(std::string_view raw, const std::vector<std::string>& label_set);

double clip_unit(double x);

// ---------------------------------------------------------------------------
// Offline test doubles. Pure functions of their inputs.

/// Signed feature hashing of lowercased token unigrams and bigrams into
/// `dim` buckets, L2-normalised.
class HashEmbedder final : public EmbeddingClient {
public:
    explicit HashEmbedder(std::size_t dim = 128) : dim_(dim) {}
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
    std::string model_name() const override { return "hash-mock-" + std::to_string(dim_); }
    std::size_t dim() const { return dim_; }

    /// (bucket, sign) of every hashed feature of the text, before normalisation.
    std::vector<std::pair<std::size_t, int>> features(std::string_view text) const;

private:
    std::size_t dim_;
};

/// Lexical-overlap judge.
///  relevance:   >= 50% of the question's content words occur in the passage
///  answer:      the passage sentence sharing the most question content words
///  shorten:     content words of the answer
///  equivalence: fraction of the gold answer's content words (minus question
///               words) present in the candidate
///  veracity:    claim verbatim in evidence -> label_set[0]; mostly covered with
///               a negation cue -> label_set[1]; otherwise label_set.back()
///  synthetic:   templated set carrying planted marker tokens
class OverlapJudge final : public JudgeClient {
public:
    JudgeVerdict judge_relevance(const std::string& claim, const std::string& question,
                                 const std::string& passage) override;
    ReaderAnswer read_answer(const std::string& claim, const std::string& question,
                             const std::string& passage) override;
    std::string shorten_answer(const std::string& answer) override;
    EquivalenceScore score_equivalence(const std::string& gold_short,
                                       const std::string& candidate_short,
                                       const std::string& question) override;
    VeracityLabel judge_veracity(const std::string& claim, const std::string& evidence,
                                 const std::vector<std::string>& label_set) override;
    SyntheticSet generate_synthetic(const std::string& claim, const std::string& question) override;

    static constexpr std::string_view kNoAnswer = "The passage does not answer the question.";
};

/// Forwards to another judge and counts calls per endpoint.
class CountingJudge final : public JudgeClient {
public:
    explicit CountingJudge(JudgeClient& inner) : inner_(inner) {}

    JudgeVerdict judge_relevance(const std::string& claim, const std::string& question,
                                 const std::string& passage) override;
    ReaderAnswer read_answer(const std::string& claim, const std::string& question,
                             const std::string& passage) override;
    std::string shorten_answer(const std::string& answer) override;
    EquivalenceScore score_equivalence(const std::string& gold_short,
                                       const std::string& candidate_short,
                                       const std::string& question) override;
    VeracityLabel judge_veracity(const std::string& claim, const std::string& evidence,
                                 const std::vector<std::string>& label_set) override;
    SyntheticSet generate_synthetic(const std::string& claim, const std::string& question) override;

    std::size_t relevance_calls() const { return relevance_.load(); }
    std::size_t answer_calls() const { return answer_.load(); }
    std::size_t shorten_calls() const { return shorten_.load(); }
    std::size_t equivalence_calls() const { return equivalence_.load(); }
    std::size_t veracity_calls() const { return veracity_.load(); }
    std::size_t synthetic_calls() const { return synthetic_.load(); }
    void reset();

private:
    JudgeClient& inner_;
    std::atomic<std::size_t> relevance_{0}, answer_{0}, shorten_{0}, equivalence_{0},
        veracity_{0}, synthetic_{0};
};

/// Session-level memo over an embedding client: each distinct text is sent
/// once, in request batches of `batch_size`, and the dimension is checked to
/// stay constant.
class EmbeddingStore {
public:
    explicit EmbeddingStore(EmbeddingClient& client, std::size_t batch_size = 32);

    /// Fetches every text not yet cached.
    void prefetch(const std::vector<std::string>& texts);
    const std::vector<double>& get(const std::string& text);
    std::size_t dim() const { return dim_; }
    std::size_t size() const;

private:
    EmbeddingClient& client_;
    std::size_t batch_size_;
    std::size_t dim_ = 0;
    mutable std::mutex mu_;
    std::map<std::string, std::vector<double>> vectors_;
};

}  // namespace cfr
