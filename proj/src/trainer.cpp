// SPDX-License-Identifier: Apache-2.0
#include "cfr/trainer.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "cfr/error.hpp"
#include "cfr/kernels.hpp"
#include "cfr/rng.hpp"
#include "cfr/text.hpp"

namespace cfr {

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (in_batch_negatives && batch_size < 2) {
        throw ConfigError("batch_size must be >= 2 with in-batch negatives");
    }
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
}

std::string TrainConfig::digest() const {
    nlohmann::json j{{"learning_rate", learning_rate},
                     {"batch_size", batch_size},
                     {"epochs", epochs},
                     {"temperature", temperature},
                     {"seed", seed},
                     {"optimizer", std::string(to_string(optimizer))},
                     {"in_batch_negatives", in_batch_negatives},
                     {"adam_beta1", adam_beta1},
                     {"adam_beta2", adam_beta2},
                     {"adam_eps", adam_eps}};
    return sha256_hex(j.dump());
}

namespace {

double norm_of(std::span<const double> v) { return std::sqrt(kernels::dot(v, v)); }

double log_sum_exp(std::span<const double> s) {
    const double m = *std::max_element(s.begin(), s.end());
    double acc = 0.0;
    for (double x : s) acc += std::exp(x - m);
    return m + std::log(acc);
}

// Accumulates d cos(u, v) / du and / dv, scaled by coef, into gu and gv.
void cosine_grad(std::span<const double> u, double nu, std::span<const double> v, double nv,
                 double cos, double coef, std::span<double> gu, std::span<double> gv) {
    const double inv = 1.0 / (nu * nv);
    kernels::axpy(coef * inv, v, gu);
    kernels::axpy(-coef * cos / (nu * nu), u, gu);
    kernels::axpy(coef * inv, u, gv);
    kernels::axpy(-coef * cos / (nv * nv), v, gv);
}

struct Transformed {
    std::vector<double> data;  // rows of dim
    std::vector<double> norms;
    std::size_t dim;

    std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
};

// Layout: queries [0, B), positives [B, 2B), negatives [2B, 3B).
Transformed transform_batch(const Adapter& adapter, std::span<const EmbeddedTuple> batch) {
    const auto b = batch.size();
    const auto e = adapter.dim();
    Transformed t{std::vector<double>(3 * b * e), std::vector<double>(3 * b), e};
    for (std::size_t i = 0; i < b; ++i) {
        const std::span<const double> src[3] = {batch[i].query, batch[i].positive, batch[i].negative};
        for (std::size_t k = 0; k < 3; ++k) {
            const auto idx = k * b + i;
            std::span<double> out(t.data.data() + idx * e, e);
            adapter.apply_into(src[k], out);
            t.norms[idx] = norm_of(out);
            if (!(t.norms[idx] > 0.0)) {
                throw DegenerateInput("zero vector after applying the adapter (tuple " +
                                      std::to_string(i) + ")");
            }
        }
    }
    return t;
}

// Candidate rows for tuple i: the positive first, then the negatives.
std::vector<std::size_t> candidates_for(std::span<const EmbeddedTuple> batch, std::size_t i,
                                        bool in_batch) {
    const auto b = batch.size();
    std::vector<std::size_t> rows{b + i, 2 * b + i};
    if (in_batch) {
        for (std::size_t j = 0; j < b; ++j) {
            if (j != i && batch[j].positive_id != batch[i].positive_id) rows.push_back(b + j);
        }
    }
    return rows;
}

LossGradient evaluate(const Adapter& adapter, std::span<const EmbeddedTuple> batch,
                      double temperature, bool in_batch, bool want_gradient) {
    if (batch.empty()) throw InvalidArgument("empty batch");
    if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
    const auto b = batch.size();
    const auto e = adapter.dim();
    const auto t = transform_batch(adapter, batch);

    LossGradient out;
    std::vector<double> grads;  // gradient wrt each transformed row
    if (want_gradient) grads.assign(3 * b * e, 0.0);

    double total = 0.0;
    std::vector<double> cos, logits;
    for (std::size_t i = 0; i < b; ++i) {
        const auto rows = candidates_for(batch, i, in_batch);
        const auto u = t.row(i);
        cos.resize(rows.size());
        logits.resize(rows.size());
        for (std::size_t c = 0; c < rows.size(); ++c) {
            cos[c] = kernels::dot(u, t.row(rows[c])) / (t.norms[i] * t.norms[rows[c]]);
            logits[c] = cos[c] / temperature;
        }
        const double lse = log_sum_exp(logits);
        const double loss = lse - logits[0];
        if (!std::isfinite(loss)) {
            std::ostringstream msg;
            msg << "non-finite loss at batch tuple " << i << " (batch size " << b
                << ", temperature " << temperature << ", positive cosine " << cos[0] << ")";
            throw NumericalError(msg.str());
        }
        total += loss;
        if (!want_gradient) continue;
        std::span<double> gu(grads.data() + i * e, e);
        for (std::size_t c = 0; c < rows.size(); ++c) {
            const double p = std::exp(logits[c] - lse);
            const double coef = (p - (c == 0 ? 1.0 : 0.0)) / (temperature * static_cast<double>(b));
            std::span<double> gv(grads.data() + rows[c] * e, e);
            cosine_grad(u, t.norms[i], t.row(rows[c]), t.norms[rows[c]], cos[c], coef, gu, gv);
        }
    }
    out.loss = total / static_cast<double>(b);

    if (want_gradient) {
        // dL/dW = sum over rows r of g_r x_r^T, x_r the raw input of row r.
        out.gradient.assign(e * e, 0.0);
        for (std::size_t i = 0; i < b; ++i) {
            const std::span<const double> src[3] = {batch[i].query, batch[i].positive,
                                                    batch[i].negative};
            for (std::size_t k = 0; k < 3; ++k) {
                const double* g = grads.data() + (k * b + i) * e;
                for (std::size_t r = 0; r < e; ++r) {
                    if (g[r] == 0.0) continue;
                    kernels::axpy(g[r], src[k], std::span<double>(out.gradient.data() + r * e, e));
                }
            }
        }
    }
    return out;
}

}  // namespace

double infonce_loss(std::span<const double> query, std::span<const double> positive,
                    const std::vector<std::span<const double>>& negatives, double temperature) {
    if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
    std::vector<double> logits;
    logits.reserve(negatives.size() + 1);
    logits.push_back(cosine(query, positive) / temperature);
    for (const auto& n : negatives) logits.push_back(cosine(query, n) / temperature);
    if (negatives.empty()) return 0.0;
    const double loss = log_sum_exp(logits) - logits[0];
    if (!std::isfinite(loss)) throw NumericalError("non-finite InfoNCE loss");
    return std::max(0.0, loss);
}

LossGradient loss_and_gradient(const Adapter& adapter, std::span<const EmbeddedTuple> batch,
                               double temperature, bool in_batch_negatives) {
    return evaluate(adapter, batch, temperature, in_batch_negatives, true);
}

double batch_loss(const Adapter& adapter, std::span<const EmbeddedTuple> batch, double temperature,
                  bool in_batch_negatives) {
    return evaluate(adapter, batch, temperature, in_batch_negatives, false).loss;
}

Optimizer::Optimizer(const TrainConfig& config, std::size_t n_params) : config_(config) {
    if (config_.optimizer == OptimizerKind::adam) {
        m_.assign(n_params, 0.0);
        v_.assign(n_params, 0.0);
    }
}

void Optimizer::step(std::span<double> weights, std::span<const double> gradient) {
    if (weights.size() != gradient.size()) throw InvalidArgument("optimizer: size mismatch");
    const double lr = config_.learning_rate;
    if (config_.optimizer == OptimizerKind::sgd) {
        kernels::axpy(-lr, gradient, weights);
        return;
    }
    ++t_;
    const double b1 = config_.adam_beta1, b2 = config_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double g = gradient[i];
        m_[i] = b1 * m_[i] + (1.0 - b1) * g;
        v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
        weights[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.adam_eps);
    }
}

TrainResult train(const std::vector<TrainTuple>& tuples, const TrainConfig& config,
                  EmbeddingStore& store) {
    config.validate();
    if (tuples.empty()) throw InvalidArgument("training needs at least one tuple");
    const auto started = std::chrono::steady_clock::now();

    std::vector<std::string> texts;
    texts.reserve(tuples.size() * 3);
    for (const auto& t : tuples) {
        texts.push_back(t.query.text);
        texts.push_back(t.positive.text);
        texts.push_back(t.negative.text);
    }
    store.prefetch(texts);

    std::map<std::string, std::size_t> positive_ids;
    std::vector<EmbeddedTuple> embedded;
    embedded.reserve(tuples.size());
    for (const auto& t : tuples) {
        const auto id = positive_ids.emplace(t.positive.text, positive_ids.size()).first->second;
        embedded.push_back(EmbeddedTuple{store.get(t.query.text), store.get(t.positive.text),
                                         store.get(t.negative.text), id});
    }

    TrainResult result{Adapter::identity(store.dim()), {}};
    result.report.tuple_count = tuples.size();
    Optimizer opt(config, store.dim() * store.dim());
    Rng rng(config.seed);
    std::vector<std::size_t> order(tuples.size());
    std::vector<EmbeddedTuple> batch;
    const auto bs = static_cast<std::size_t>(config.batch_size);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(order));
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += bs) {
            const auto end = std::min(start + bs, order.size());
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(embedded[order[i]]);
            auto lg = loss_and_gradient(result.adapter, batch, config.temperature,
                                        config.in_batch_negatives);
            epoch_loss += lg.loss * static_cast<double>(batch.size());
            opt.step(result.adapter.weights(), lg.gradient);
        }
        for (double w : result.adapter.weights()) {
            if (!std::isfinite(w)) {
                throw NumericalError("adapter weights diverged in epoch " + std::to_string(epoch));
            }
        }
        result.report.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(tuples.size()));
    }

    result.report.checkpoint_digest =
        sha256_hex(encode_checkpoint(Checkpoint{result.adapter, config.digest()}));
    result.report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

}  // namespace cfr
