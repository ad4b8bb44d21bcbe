// SPDX-License-Identifier: Apache-2.0
#include "cfr/clients.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

#include "cfr/error.hpp"
#include "cfr/text.hpp"

namespace cfr {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string normalize_reply(std::string_view raw) {
    std::string s = trim(raw);
    while (!s.empty() && (s.front() == '"' || s.front() == '\'')) s.erase(s.begin());
    while (!s.empty() && (s.back() == '"' || s.back() == '\'' || s.back() == '.')) s.pop_back();
    return to_lower_ascii(trim(s));
}

std::set<std::string> term_set(std::string_view text) {
    const auto terms = content_terms(text);
    return {terms.begin(), terms.end()};
}

std::vector<std::string> sentences(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        const bool boundary = (c == '.' || c == '!' || c == '?') &&
                              (i + 1 == text.size() ||
                               std::isspace(static_cast<unsigned char>(text[i + 1])));
        if (boundary) {
            auto s = trim(text.substr(start, i + 1 - start));
            if (!s.empty()) out.push_back(std::move(s));
            start = i + 1;
        }
    }
    auto tail = trim(text.substr(std::min(start, text.size())));
    if (!tail.empty()) out.push_back(std::move(tail));
    return out;
}

std::string collapse_lower(std::string_view text) {
    const auto toks = default_tokenizer().tokenize(to_lower_ascii(text));
    return default_tokenizer().detokenize(toks);
}

void require_nonempty(std::string_view what, const std::string& s) {
    if (s.empty()) throw InvalidArgument(std::string(what) + " must be non-empty");
}

}  // namespace

bool parse_yes_no(std::string_view raw) {
    const auto s = normalize_reply(raw);
    if (s == "yes") return true;
    if (s == "no") return false;
    throw ProtocolError("expected \"Yes\" or \"No\" from relevance judge", std::string(raw));
}

std::string parse_veracity(std::string_view raw, const std::vector<std::string>& label_set) {
    const auto s = normalize_reply(raw);
    for (const auto& label : label_set) {
        if (to_lower_ascii(label) == s) return label;
    }
    throw ProtocolError("veracity label outside the label set", std::string(raw));
}

double clip_unit(double x) {
    if (std::isnan(x)) return 0.0;
    return std::clamp(x, 0.0, 1.0);
}

// ---------------------------------------------------------------------------

std::vector<std::pair<std::size_t, int>> HashEmbedder::features(std::string_view text) const {
    const auto toks = lexical_terms(text);
    std::vector<std::pair<std::size_t, int>> out;
    out.reserve(toks.size() * 2);
    auto add = [&](const std::string& feature) {
        const auto h = fnv1a64(feature);
        out.emplace_back(static_cast<std::size_t>(h % dim_), (h >> 63) ? -1 : 1);
    };
    for (std::size_t i = 0; i < toks.size(); ++i) {
        add("u:" + toks[i]);
        if (i + 1 < toks.size()) add("b:" + toks[i] + " " + toks[i + 1]);
    }
    return out;
}

std::vector<EmbeddingVector> HashEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        require_nonempty("embedding input", t);
        std::vector<double> v(dim_, 0.0);
        for (const auto& [bucket, sign] : features(t)) v[bucket] += sign;
        double norm = 0.0;
        for (double x : v) norm += x * x;
        if (norm > 0.0) {
            const double inv = 1.0 / std::sqrt(norm);
            for (double& x : v) x *= inv;
        }
        out.push_back(EmbeddingVector{std::move(v), model_name()});
    }
    return out;
}

// ---------------------------------------------------------------------------

JudgeVerdict OverlapJudge::judge_relevance(const std::string& claim, const std::string& question,
                                           const std::string& passage) {
    require_nonempty("claim", claim);
    require_nonempty("question", question);
    require_nonempty("passage", passage);
    const auto q = term_set(question);
    const auto p = term_set(passage);
    std::size_t hit = 0;
    for (const auto& t : q) hit += p.contains(t) ? 1 : 0;
    const bool relevant = !q.empty() && 2 * hit >= q.size();
    return JudgeVerdict{relevant, relevant ? "Yes" : "No"};
}

ReaderAnswer OverlapJudge::read_answer(const std::string& claim, const std::string& question,
                                       const std::string& passage) {
    require_nonempty("claim", claim);
    require_nonempty("question", question);
    require_nonempty("passage", passage);
    const auto q = term_set(question);
    std::size_t best = 0;
    std::string answer(kNoAnswer);
    for (auto& s : sentences(passage)) {
        std::size_t hit = 0;
        for (const auto& t : term_set(s)) hit += q.contains(t) ? 1 : 0;
        if (hit > best) {
            best = hit;
            answer = std::move(s);
        }
    }
    return ReaderAnswer{std::move(answer), std::nullopt};
}

std::string OverlapJudge::shorten_answer(const std::string& answer) {
    require_nonempty("answer", answer);
    const auto terms = content_terms(answer);
    if (terms.empty()) return "none";
    return default_tokenizer().detokenize(terms);
}

EquivalenceScore OverlapJudge::score_equivalence(const std::string& gold_short,
                                                 const std::string& candidate_short,
                                                 const std::string& question) {
    require_nonempty("gold answer", gold_short);
    require_nonempty("candidate answer", candidate_short);
    const auto gold = term_set(gold_short);
    const auto cand = term_set(candidate_short);
    const auto q = term_set(question);
    std::set<std::string> key;
    for (const auto& t : gold) {
        if (!q.contains(t)) key.insert(t);
    }
    if (key.empty()) key = gold;
    if (key.empty()) {
        return EquivalenceScore{collapse_lower(gold_short) == collapse_lower(candidate_short) ? 1.0
                                                                                              : 0.0};
    }
    std::size_t hit = 0;
    for (const auto& t : key) hit += cand.contains(t) ? 1 : 0;
    return EquivalenceScore{clip_unit(static_cast<double>(hit) / static_cast<double>(key.size()))};
}

VeracityLabel OverlapJudge::judge_veracity(const std::string& claim, const std::string& evidence,
                                           const std::vector<std::string>& label_set) {
    require_nonempty("claim", claim);
    require_nonempty("evidence", evidence);
    if (label_set.empty()) throw InvalidArgument("label set must be non-empty");
    if (collapse_lower(evidence).find(collapse_lower(claim)) != std::string::npos) {
        return VeracityLabel{label_set.front()};
    }
    const auto c = term_set(claim);
    const auto e = term_set(evidence);
    std::size_t hit = 0;
    for (const auto& t : c) hit += e.contains(t) ? 1 : 0;
    static const std::set<std::string> kNegations = {"not",  "no",     "never", "false",
                                                     "denied", "untrue", "myth"};
    bool negated = false;
    for (const auto& t : lexical_terms(evidence)) negated = negated || kNegations.contains(t);
    if (label_set.size() >= 2 && !c.empty() && 2 * hit >= c.size() && negated) {
        return VeracityLabel{label_set[1]};
    }
    return VeracityLabel{label_set.back()};
}

SyntheticSet OverlapJudge::generate_synthetic(const std::string& claim,
                                              const std::string& question) {
    require_nonempty("claim", claim);
    require_nonempty("question", question);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(claim + "\n" + question)));
    const std::string m = "zq" + std::string(hex, 8);
    SyntheticSet set;
    set.claim = claim;
    set.question = question;
    set.positive = "Field notes " + m +
                   "pos describe a related development that settles the matter once a single "
                   "inference step is made.";
    set.hard_negative = "Coverage " + m + "neg restates the topic at length: " + claim +
                        " It gives no detail that settles the question.";
    for (int i = 1; i <= 4; ++i) {
        const auto tag = m + "alt" + std::to_string(i);
        set.alt_negatives.push_back(
            AltNegative{"Alternate question " + tag + ": what else was reported?",
                        "Background " + tag + "doc covers a different aspect of the story."});
    }
    set.explanation = "Positive " + m + "pos needs one inference step; hard negative " + m +
                      "neg only restates the topic.";
    return set;
}

// ---------------------------------------------------------------------------

JudgeVerdict CountingJudge::judge_relevance(const std::string& claim, const std::string& question,
                                            const std::string& passage) {
    ++relevance_;
    return inner_.judge_relevance(claim, question, passage);
}

ReaderAnswer CountingJudge::read_answer(const std::string& claim, const std::string& question,
                                        const std::string& passage) {
    ++answer_;
    return inner_.read_answer(claim, question, passage);
}

std::string CountingJudge::shorten_answer(const std::string& answer) {
    ++shorten_;
    return inner_.shorten_answer(answer);
}

EquivalenceScore CountingJudge::score_equivalence(const std::string& gold_short,
                                                  const std::string& candidate_short,
                                                  const std::string& question) {
    ++equivalence_;
    return inner_.score_equivalence(gold_short, candidate_short, question);
}

VeracityLabel CountingJudge::judge_veracity(const std::string& claim, const std::string& evidence,
                                            const std::vector<std::string>& label_set) {
    ++veracity_;
    return inner_.judge_veracity(claim, evidence, label_set);
}

SyntheticSet CountingJudge::generate_synthetic(const std::string& claim,
                                               const std::string& question) {
    ++synthetic_;
    return inner_.generate_synthetic(claim, question);
}

void CountingJudge::reset() {
    relevance_ = answer_ = shorten_ = equivalence_ = veracity_ = synthetic_ = 0;
}

// ---------------------------------------------------------------------------

EmbeddingStore::EmbeddingStore(EmbeddingClient& client, std::size_t batch_size)
    : client_(client), batch_size_(batch_size == 0 ? 1 : batch_size) {}

void EmbeddingStore::prefetch(const std::vector<std::string>& texts) {
    std::vector<std::string> missing;
    {
        std::lock_guard lock(mu_);
        std::set<std::string_view> queued;
        for (const auto& t : texts) {
            if (!vectors_.contains(t) && queued.insert(t).second) missing.push_back(t);
        }
    }
    for (std::size_t start = 0; start < missing.size(); start += batch_size_) {
        const auto end = std::min(start + batch_size_, missing.size());
        std::vector<std::string> batch(missing.begin() + static_cast<std::ptrdiff_t>(start),
                                       missing.begin() + static_cast<std::ptrdiff_t>(end));
        std::vector<EmbeddingVector> vecs;
        try {
            vecs = client_.embed(batch);
        } catch (const Error& e) {
            throw TransportError("embedding batch " + std::to_string(start / batch_size_) +
                                     " (texts " + std::to_string(start) + ".." +
                                     std::to_string(end - 1) + ") failed: " + e.what(),
                                 false);
        }
        if (vecs.size() != batch.size()) {
            throw ProtocolError("embedding count mismatch", std::to_string(vecs.size()));
        }
        std::lock_guard lock(mu_);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            auto& v = vecs[i].values;
            if (dim_ == 0) dim_ = v.size();
            if (v.size() != dim_ || dim_ == 0) {
                throw ProtocolError("embedding dimension changed within a session",
                                    std::to_string(v.size()));
            }
            for (double x : v) {
                if (!std::isfinite(x)) throw ProtocolError("non-finite embedding entry", batch[i]);
            }
            vectors_.emplace(batch[i], std::move(v));
        }
    }
}

const std::vector<double>& EmbeddingStore::get(const std::string& text) {
    {
        std::lock_guard lock(mu_);
        if (auto it = vectors_.find(text); it != vectors_.end()) return it->second;
    }
    prefetch({text});
    std::lock_guard lock(mu_);
    return vectors_.at(text);
}

std::size_t EmbeddingStore::size() const {
    std::lock_guard lock(mu_);
    return vectors_.size();
}

}  // namespace cfr
