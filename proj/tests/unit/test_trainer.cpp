// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "cfr/error.hpp"
#include "cfr/rng.hpp"
#include "cfr/trainer.hpp"
#include "support/oracles.hpp"

using namespace cfr;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform() * 2.0 - 1.0;
    return v;
}

struct Fixture {
    std::vector<oracle::Tuple> tuples;
    std::vector<EmbeddedTuple> embedded;
    oracle::Mat w;

    Fixture(std::size_t dim, std::size_t n, Rng& rng, bool shared_positive = false) {
        for (std::size_t i = 0; i < n; ++i) {
            oracle::Tuple t{random_vec(rng, dim), random_vec(rng, dim), random_vec(rng, dim), i};
            if (shared_positive && i == 1) {
                t.p = tuples[0].p;
                t.pos_id = 0;
            }
            tuples.push_back(t);
        }
        for (const auto& t : tuples) embedded.push_back(EmbeddedTuple{t.q, t.p, t.n, t.pos_id});
        w.assign(dim * dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) w[i * dim + i] = 1.0;
        for (auto& x : w) x += 0.2 * (rng.uniform() - 0.5);
    }
    Adapter adapter() const { return Adapter(static_cast<std::size_t>(std::sqrt(static_cast<double>(w.size()))), w); }
};

TrainTuple text_tuple(const std::string& q, const std::string& p, const std::string& n) {
    return TrainTuple{Query{"c", 0, q}, DocumentSpan{p, p, 0, 0, p, true}, DocumentSpan{n, n, 0, 0, n, false}};
}

std::vector<TrainTuple> small_corpus() {
    std::vector<TrainTuple> out;
    const char* topics[] = {"river", "senate", "vaccine", "stadium", "tariff", "drought", "bridge", "museum"};
    for (int i = 0; i < 8; ++i) {
        const std::string t = topics[i];
        out.push_back(text_tuple("did the " + t + " plan change", t + " plan record shows the change",
                                 std::string("unrelated notes about ") + topics[(i + 3) % 8]));
    }
    return out;
}

class FailingEmbedder final : public EmbeddingClient {
public:
    std::vector<EmbeddingVector> embed(const std::vector<std::string>&) override {
        throw TransportError("embedding service unavailable", true);
    }
    std::string model_name() const override { return "failing"; }
};

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("loss of orthogonal documents is ln(negatives + 1)") {
    std::vector<double> q{1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    std::vector<std::vector<double>> docs;
    for (int i = 1; i <= 10; ++i) {
        std::vector<double> d(11, 0.0);
        d[i] = 1.0;
        docs.push_back(d);
    }
    std::vector<std::span<const double>> negs(docs.begin() + 1, docs.end());
    CHECK(infonce_loss(q, docs[0], negs, 1.0) == doctest::Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("loss values") {
    const std::vector<double> q{1, 0}, p{1, 0}, n{-1, 0};
    CHECK(infonce_loss(q, p, {}, 1.0) == 0.0);
    CHECK(infonce_loss(q, p, {n}, 1.0) == doctest::Approx(std::log1p(std::exp(-2.0))).epsilon(1e-12));
    CHECK(infonce_loss(q, p, {n}, 1.0) == doctest::Approx(0.126928).epsilon(1e-5));
    CHECK(infonce_loss(q, n, {p}, 0.5) == doctest::Approx(oracle::infonce(-1.0, {1.0}, 0.5)).epsilon(1e-12));
    CHECK_THROWS_AS(infonce_loss(q, std::vector<double>{0, 0}, {n}, 1.0), DegenerateInput);
    CHECK_THROWS_AS(infonce_loss(q, p, {n}, 0.0), InvalidArgument);
}

TEST_CASE("loss is non-negative and matches the naive evaluation") {
    Rng rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        Fixture f(6, 5, rng, trial % 2 == 0);
        for (bool in_batch : {false, true}) {
            for (double tau : {0.05, 0.3, 1.0}) {
                const double got = batch_loss(f.adapter(), f.embedded, tau, in_batch);
                CHECK(got >= 0.0);
                CHECK(got == doctest::Approx(oracle::batch_loss(f.w, f.tuples, tau, in_batch)).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("analytic gradient matches central differences") {
    Rng rng(22);
    for (std::size_t dim : {4u, 8u, 16u}) {
        for (double tau : {0.1, 1.0}) {
            for (bool in_batch : {false, true}) {
                CAPTURE(dim);
                CAPTURE(tau);
                CAPTURE(in_batch);
                Fixture f(dim, 4, rng, true);
                const auto lg = loss_and_gradient(f.adapter(), f.embedded, tau, in_batch);
                const auto fd = oracle::finite_difference_gradient(f.w, f.tuples, tau, in_batch);
                CHECK(lg.loss == doctest::Approx(oracle::batch_loss(f.w, f.tuples, tau, in_batch)));
                CHECK(oracle::relative_error(lg.gradient, fd) < 1e-5);
            }
        }
    }
}

TEST_CASE("a single-tuple batch has only its explicit negative") {
    Rng rng(23);
    Fixture f(5, 1, rng);
    const auto lg = loss_and_gradient(f.adapter(), f.embedded, 0.5, true);
    CHECK(lg.loss == doctest::Approx(oracle::batch_loss(f.w, f.tuples, 0.5, false)));
    const auto fd = oracle::finite_difference_gradient(f.w, f.tuples, 0.5, false);
    CHECK(oracle::relative_error(lg.gradient, fd) < 1e-5);
}

TEST_CASE("extreme temperatures raise a numerical error") {
    Rng rng(24);
    Fixture f(4, 3, rng);
    CHECK_THROWS_AS(loss_and_gradient(f.adapter(), f.embedded, 1e-320, true), NumericalError);
    CHECK_THROWS_AS(loss_and_gradient(f.adapter(), std::span<const EmbeddedTuple>{}, 1.0, true), InvalidArgument);
}

TEST_CASE("config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    auto bad = c;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.temperature = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.batch_size = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.in_batch_negatives = false;
    CHECK_NOTHROW(bad.validate());
    bad = c;
    bad.epochs = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK(parse_optimizer("sgd") == OptimizerKind::sgd);
    CHECK_THROWS_AS(parse_optimizer("rmsprop"), ConfigError);
    auto other = c;
    other.seed = 1;
    CHECK(c.digest() != other.digest());
    CHECK(c.digest() == TrainConfig{}.digest());
}

TEST_CASE("SGD and Adam steps") {
    TrainConfig c;
    c.optimizer = OptimizerKind::sgd;
    c.learning_rate = 0.5;
    Optimizer sgd(c, 2);
    std::vector<double> w{1.0, 2.0};
    sgd.step(w, std::vector<double>{2.0, -4.0});
    CHECK(w == std::vector<double>{0.0, 4.0});

    c.optimizer = OptimizerKind::adam;
    c.learning_rate = 0.1;
    Optimizer adam(c, 2);
    w = {1.0, 2.0};
    adam.step(w, std::vector<double>{3.0, -1e-3});
    // First bias-corrected Adam step moves each weight by lr * sign(g).
    CHECK(w[0] == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(w[1] == doctest::Approx(2.1).epsilon(1e-4));
}

TEST_CASE("training is deterministic for a seed") {
    HashEmbedder emb(32);
    TrainConfig c;
    c.learning_rate = 1e-2;
    c.batch_size = 3;
    c.epochs = 3;
    c.seed = 4;
    EmbeddingStore s1(emb), s2(emb);
    const auto a = train(small_corpus(), c, s1);
    const auto b = train(small_corpus(), c, s2);
    CHECK(a.adapter == b.adapter);
    CHECK(a.report.checkpoint_digest == b.report.checkpoint_digest);
    CHECK(a.report.epoch_mean_loss == b.report.epoch_mean_loss);
    CHECK(a.report.epoch_mean_loss.size() == 3);
    CHECK(a.report.tuple_count == 8);

    c.seed = 5;
    EmbeddingStore s3(emb);
    CHECK_FALSE(train(small_corpus(), c, s3).adapter == a.adapter);
}

TEST_CASE("training reduces the loss with a workable learning rate") {
    HashEmbedder emb(32);
    EmbeddingStore store(emb);
    TrainConfig c;
    c.learning_rate = 5e-3;
    c.temperature = 0.1;
    c.batch_size = 4;
    c.epochs = 20;
    const auto r = train(small_corpus(), c, store);
    CHECK(r.report.epoch_mean_loss.back() < r.report.epoch_mean_loss.front());
}

TEST_CASE("zero epochs return the identity adapter") {
    HashEmbedder emb(16);
    EmbeddingStore store(emb);
    TrainConfig c;
    c.epochs = 0;
    const auto r = train(small_corpus(), c, store);
    CHECK(r.adapter == Adapter::identity(16));
    CHECK(r.report.epoch_mean_loss.empty());
}

TEST_CASE("embedding failures surface before any step") {
    FailingEmbedder emb;
    EmbeddingStore store(emb);
    CHECK_THROWS_AS(train(small_corpus(), TrainConfig{}, store), TransportError);
    HashEmbedder ok(8);
    EmbeddingStore store2(ok);
    CHECK_THROWS_AS(train({}, TrainConfig{}, store2), InvalidArgument);
}

TEST_CASE("divergent learning rates raise a numerical error") {
    HashEmbedder emb(16);
    EmbeddingStore store(emb);
    TrainConfig c;
    c.optimizer = OptimizerKind::sgd;
    c.learning_rate = 1e305;
    c.batch_size = 4;
    c.epochs = 3;
    CHECK_THROWS_AS(train(small_corpus(), c, store), NumericalError);
}

}
