// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfr/clients.hpp"
#include "cfr/reranker.hpp"
#include "cfr/supervision.hpp"

namespace cfr {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view s);

struct TrainConfig {
    double learning_rate = 2e-5;
    int batch_size = 32;
    int epochs = 12;
    double temperature = 1.0;
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::adam;
    bool in_batch_negatives = true;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    /// Throws ConfigError on an invalid combination.
    void validate() const;

    /// SHA-256 over the canonical JSON form.
    std::string digest() const;
};

struct TrainReport {
    std::vector<double> epoch_mean_loss;
    std::string checkpoint_digest;
    std::size_t tuple_count = 0;
    double wall_time_seconds = 0.0;
};

/// -log( e^{f(y,d+)/t} / (e^{f(y,d+)/t} + sum_{d-} e^{f(y,d-)/t}) ), f = cosine.
/// Zero for an empty negative set. Throws DegenerateInput on a zero vector.
double infonce_loss(std::span<const double> query, std::span<const double> positive,
                    const std::vector<std::span<const double>>& negatives, double temperature);

/// Raw embeddings of one training tuple. positive_id identifies the positive
/// document; in-batch negatives skip other tuples whose positive_id is equal.
struct EmbeddedTuple {
    std::span<const double> query;
    std::span<const double> positive;
    std::span<const double> negative;
    std::size_t positive_id = 0;
};

struct LossGradient {
    double loss = 0.0;
    std::vector<double> gradient;  // dim x dim, row-major, d(loss)/d(weights)
};

/// Mean InfoNCE over the batch. Each tuple's negatives are its explicit
/// negative plus, when in_batch_negatives is set, the positives of the other
/// tuples. The shared adapter is applied to queries and documents and the
/// gradient flows through both sides.
LossGradient loss_and_gradient(const Adapter& adapter, std::span<const EmbeddedTuple> batch,
                               double temperature, bool in_batch_negatives);

/// Loss only; same value as loss_and_gradient().loss.
double batch_loss(const Adapter& adapter, std::span<const EmbeddedTuple> batch, double temperature,
                  bool in_batch_negatives);

class Optimizer {
public:
    explicit Optimizer(const TrainConfig& config, std::size_t n_params);
    void step(std::span<double> weights, std::span<const double> gradient);

private:
    TrainConfig config_;
    std::vector<double> m_, v_;
    std::uint64_t t_ = 0;
};

struct TrainResult {
    Adapter adapter;
    TrainReport report;
};

/// Fetches every distinct text once through the store, then runs `epochs`
/// passes of seeded shuffle, fixed-size batches (last partial batch kept) and
/// one optimizer step per batch, starting from the identity adapter.
TrainResult train(const std::vector<TrainTuple>& tuples, const TrainConfig& config,
                  EmbeddingStore& store);

}  // namespace cfr
