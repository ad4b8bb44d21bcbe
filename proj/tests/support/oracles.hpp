// SPDX-License-Identifier: Apache-2.0
// Reference computations written directly from the formulas, sharing no code
// with the library routines they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

inline std::vector<std::string> split(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

struct Doc {
    std::string id;
    std::string text;  // lowercase words separated by single spaces
    bool gold = false;
};

/// Okapi BM25 for every (query, doc) pair from raw term counts.
inline std::vector<double> bm25_scores(const std::string& query, const std::vector<Doc>& docs,
                                       double k1 = 1.2, double b = 0.75) {
    const double n_docs = static_cast<double>(docs.size());
    std::vector<std::vector<std::string>> toks;
    double total = 0.0;
    for (const auto& d : docs) {
        toks.push_back(split(d.text));
        total += static_cast<double>(toks.back().size());
    }
    const double avgdl = total / n_docs;
    const auto qt = split(query);
    const std::set<std::string> distinct(qt.begin(), qt.end());
    std::vector<double> scores(docs.size(), 0.0);
    for (const auto& t : distinct) {
        double df = 0.0;
        for (const auto& d : toks) df += std::count(d.begin(), d.end(), t) > 0 ? 1.0 : 0.0;
        const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
        for (std::size_t i = 0; i < docs.size(); ++i) {
            const double tf = static_cast<double>(std::count(toks[i].begin(), toks[i].end(), t));
            if (tf == 0.0) continue;
            const double len = static_cast<double>(toks[i].size());
            const double norm = k1 * (1.0 - b + b * len / avgdl);
            scores[i] += idf * (tf * (k1 + 1.0) / (tf + norm));
        }
    }
    return scores;
}

/// Top-k non-gold and top-l gold ids by descending score, ascending id.
inline std::pair<std::vector<std::string>, std::vector<std::string>> bm25_candidates(
    const std::string& query, const std::vector<Doc>& docs, int k, int l) {
    const auto scores = bm25_scores(query, docs);
    std::vector<std::size_t> order(docs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return docs[a].id < docs[b].id;
    });
    std::vector<std::string> wild, gold;
    for (auto i : order) {
        auto& bucket = docs[i].gold ? gold : wild;
        const auto cap = static_cast<std::size_t>(docs[i].gold ? l : k);
        if (bucket.size() < cap) bucket.push_back(docs[i].id);
    }
    return {wild, gold};
}

// ---------------------------------------------------------------------------
// Contrastive loss evaluated naively: explicit matrix-vector products,
// explicit cosines, explicit softmax.

using Vec = std::vector<double>;
using Mat = std::vector<double>;  // row-major e x e

inline Vec matvec(const Mat& w, const Vec& x) {
    const auto e = x.size();
    Vec out(e, 0.0);
    for (std::size_t i = 0; i < e; ++i) {
        for (std::size_t j = 0; j < e; ++j) out[i] += w[i * e + j] * x[j];
    }
    return out;
}

inline double cos(const Vec& a, const Vec& b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

inline double infonce(double pos_cos, const std::vector<double>& neg_cos, double tau) {
    double denom = std::exp(pos_cos / tau);
    for (double c : neg_cos) denom += std::exp(c / tau);
    return -std::log(std::exp(pos_cos / tau) / denom);
}

struct Tuple {
    Vec q, p, n;
    std::size_t pos_id = 0;
};

inline double batch_loss(const Mat& w, const std::vector<Tuple>& batch, double tau, bool in_batch) {
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto u = matvec(w, batch[i].q);
        const double pc = cos(u, matvec(w, batch[i].p));
        std::vector<double> negs{cos(u, matvec(w, batch[i].n))};
        if (in_batch) {
            for (std::size_t j = 0; j < batch.size(); ++j) {
                if (j != i && batch[j].pos_id != batch[i].pos_id) {
                    negs.push_back(cos(u, matvec(w, batch[j].p)));
                }
            }
        }
        total += infonce(pc, negs, tau);
    }
    return total / static_cast<double>(batch.size());
}

/// Central differences of batch_loss with respect to every weight.
inline Mat finite_difference_gradient(Mat w, const std::vector<Tuple>& batch, double tau,
                                      bool in_batch, double h = 1e-5) {
    Mat g(w.size(), 0.0);
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double orig = w[k];
        w[k] = orig + h;
        const double up = batch_loss(w, batch, tau, in_batch);
        w[k] = orig - h;
        const double down = batch_loss(w, batch, tau, in_batch);
        w[k] = orig;
        g[k] = (up - down) / (2.0 * h);
    }
    return g;
}

/// max |a - b| / max(max |b|, floor)
inline double relative_error(const Mat& a, const Mat& b, double floor = 1e-8) {
    double diff = 0.0, scale = floor;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        scale = std::max(scale, std::abs(b[i]));
    }
    return diff / scale;
}

// ---------------------------------------------------------------------------

/// Expected sliding-window offsets: 0, stride, ... stopping after the first
/// window that reaches the last token.
inline std::vector<int> window_starts(int n_tokens, int span, int stride) {
    std::vector<int> out;
    if (n_tokens <= 0) return out;
    for (int s = 0;; s += stride) {
        out.push_back(s);
        if (s + span >= n_tokens) break;
    }
    return out;
}

/// Expected MRR of a uniformly random rank among n documents.
inline double random_mrr(int n) {
    double h = 0.0;
    for (int r = 1; r <= n; ++r) h += 1.0 / r;
    return h / n;
}

}  // namespace oracle
