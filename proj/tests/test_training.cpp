#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "frontal/training.hpp"
#include "helpers.hpp"

using namespace frontal;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.latent_dim = 8;
    cfg.base_size = 4;
    cfg.stages = 1;
    cfg.channels = 4;
    return cfg;
}

TrainConfig tiny_train(std::uint64_t seed, int steps) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.batch_size = 8;
    cfg.steps = steps;
    cfg.model = tiny_config();
    return cfg;
}

} // namespace

TEST_CASE("loss combination follows the balance formulas") {
    EquilibriumState eq; // k = 0, gamma = 0.5
    const LossTerms t = combine_losses(0.2, 0.05, eq);
    REQUIRE(t.l_d == Catch::Approx(0.2));
    REQUIRE(t.l_g == Catch::Approx(0.05));
    REQUIRE(t.m == Catch::Approx(0.25));
}

TEST_CASE("convergence measure identities") {
    REQUIRE(convergence_measure(0.2, 0.05, 0.5) == Catch::Approx(0.25));
    REQUIRE(convergence_measure(0.0, 0.37, 0.9) == Catch::Approx(0.37));
    // balanced losses collapse M onto L_real
    REQUIRE(convergence_measure(0.4, 0.2, 0.5) == Catch::Approx(0.4));
    SplitMix64 rng(5);
    for (int i = 0; i < 100; ++i) {
        const double lr = rng.uniform(0.0, 2.0);
        const double lf = rng.uniform(0.0, 2.0);
        const double g = rng.uniform(0.01, 1.0);
        REQUIRE(convergence_measure(lr, lf, g) >= lr);
        REQUIRE(convergence_measure(lr, lf, g) >= 0.0);
    }
}

TEST_CASE("k update is proportional and clamped") {
    EquilibriumState eq;
    eq.k = 0.0;
    eq.gamma = 0.5;
    eq.lambda_k = 0.001;
    REQUIRE(update_k(eq, 0.2, 0.05).k == Catch::Approx(5e-5));

    eq.gamma = 1.0;
    REQUIRE(update_k(eq, 0.1, 0.2).k == 0.0); // lower clamp

    eq.k = 1.0;
    REQUIRE(update_k(eq, 5.0, 0.0).k == 1.0); // upper clamp
}

TEST_CASE("began_losses on zero-weight nets isolates the real loss") {
    const ModelConfig cfg = tiny_config();
    Generator g(cfg, 1);
    Discriminator d(cfg, 2);
    for (const auto& [name, p] : g.params()) {
        Tensor t = p;
        for (double& v : t.values_mut()) v = 0.0;
    }
    for (const auto& [name, p] : d.params()) {
        Tensor t = p;
        for (double& v : t.values_mut()) v = 0.0;
    }
    // D(x) == 0 and G(z) == 0 == D(G(z)): l_real = mean|x|, l_fake = 0
    const Tensor half = Tensor::full({1, 1, 8, 8}, 0.5);
    ImageBatch batch = make_mirror_batch({half}, {30.0});
    const Tensor z = seeded_uniform({2, 8}, -1.0, 1.0, 3);
    EquilibriumState eq;
    const LossTerms t = began_losses(batch, z, g, d, eq);
    REQUIRE(t.l_real == Catch::Approx(0.5));
    REQUIRE(t.l_fake == 0.0);
    REQUIRE(t.l_d == Catch::Approx(0.5));
    REQUIRE(t.m == Catch::Approx(0.75));

    // x == D(x) exactly: zero image in, zero reconstruction out
    ImageBatch zeros = make_mirror_batch({Tensor::zeros({1, 1, 8, 8})}, {0.0});
    REQUIRE(began_losses(zeros, z, g, d, eq).l_real == 0.0);
}

TEST_CASE("adam leaves parameters alone under zero gradients") {
    Tensor p = Tensor::from_values({3}, {1.0, 2.0, 3.0});
    p.mark_parameter();
    p.grad_mut(); // allocate zeros
    NamedParams params;
    params.emplace_back("p", p);
    Adam adam(0.001);
    adam.step(params);
    REQUIRE(p.values()[0] == 1.0);
    REQUIRE(p.values()[1] == 2.0);
    REQUIRE(p.values()[2] == 3.0);
}

TEST_CASE("first adam step moves by about lr in the gradient direction") {
    Tensor p = Tensor::from_values({1}, {0.7});
    p.mark_parameter();
    p.grad_mut()[0] = 0.3;
    NamedParams params;
    params.emplace_back("p", p);
    Adam adam(0.001);
    adam.step(params);
    // measured: lr * g / (|g| + eps) = 0.0009999999666...
    REQUIRE(0.7 - p.values()[0] == Catch::Approx(0.001).margin(1e-9));

    Tensor q = Tensor::from_values({1}, {0.7});
    q.mark_parameter();
    q.grad_mut()[0] = -2.0;
    NamedParams qp;
    qp.emplace_back("q", q);
    Adam adam2(0.001);
    adam2.step(qp);
    REQUIRE(q.values()[0] - 0.7 == Catch::Approx(0.001).margin(1e-9));
}

TEST_CASE("adam minimizes a quadratic") {
    Tensor x = Tensor::from_values({1}, {0.0});
    x.mark_parameter();
    NamedParams params;
    params.emplace_back("x", x);
    Adam adam(0.01);
    for (int i = 0; i < 2000; ++i) {
        // f(x) = (x-2)^2, df/dx = 2(x-2)
        x.zero_grad();
        x.grad_mut()[0] = 2.0 * (x.values()[0] - 2.0);
        adam.step(params);
    }
    REQUIRE(std::abs(x.values()[0] - 2.0) < 0.01);
}

TEST_CASE("adam requires gradients") {
    Tensor p = Tensor::from_values({1}, {1.0});
    p.mark_parameter();
    NamedParams params;
    params.emplace_back("p", p);
    Adam adam;
    REQUIRE_THROWS_AS(adam.step(params), ContractError);
}

TEST_CASE("zero-step training writes the initialization checkpoint") {
    testutil::TempDir dir("train0");
    TrainConfig cfg = tiny_train(5, 0);
    cfg.checkpoint_path = dir / "ck.bin";
    cfg.metrics_path = dir / "m.csv";
    const Dataset data = make_synth_dataset(4, 50, 20.0, 60.0, cfg.model.image_size());
    const TrainOutput out = train(cfg, data);
    REQUIRE(out.history.empty());
    REQUIRE(testutil::read_text(dir / "m.csv") == "step,l_real,l_fake,l_d,l_g,k,m\n");

    const Checkpoint ck = load_checkpoint(dir / "ck.bin");
    const Generator fresh(cfg.model, SplitMix64(cfg.seed).split(1).state());
    const NamedParams a = ck.generator.params();
    const NamedParams b = fresh.params();
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(testutil::bit_equal(a[i].second, b[i].second));
    }
}

TEST_CASE("same seed, same metrics bytes") {
    testutil::TempDir dir("traindet");
    const Dataset data = make_synth_dataset(6, 50, 20.0, 60.0, 8);
    for (const char* name : {"a", "b"}) {
        TrainConfig cfg = tiny_train(99, 12);
        cfg.metrics_path = dir / (std::string("m_") + name + ".csv");
        train(cfg, data);
    }
    const auto a = testutil::read_text(dir / "m_a.csv");
    REQUIRE(a == testutil::read_text(dir / "m_b.csv"));
    REQUIRE(a.substr(0, a.find('\n')) == "step,l_real,l_fake,l_d,l_g,k,m");
}

TEST_CASE("a training step touches only the scheduled network") {
    const Dataset data = make_synth_dataset(6, 51, 20.0, 60.0, 8);
    const auto snapshot = [](const NamedParams& params) {
        std::vector<std::vector<double>> copy;
        for (const auto& [name, p] : params) {
            copy.emplace_back(p.values().begin(), p.values().end());
        }
        return copy;
    };
    const auto changed = [&](const NamedParams& params,
                             const std::vector<std::vector<double>>& before) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto now = params[i].second.values();
            for (std::size_t j = 0; j < now.size(); ++j) {
                if (now[j] != before[i][j]) return true;
            }
        }
        return false;
    };

    for (const bool freeze_g : {true, false}) {
        TrainConfig cfg = tiny_train(7, 1);
        Generator g(cfg.model, 70);
        Discriminator d(cfg.model, 71);
        EquilibriumState eq;
        Adam ad(cfg.learning_rate), ag(cfg.learning_rate);
        SplitMix64 rng(72);
        ImageBatch batch = sample_mirror_batch(data, cfg.batch_size, rng);
        const Tensor z = seeded_uniform({cfg.batch_size, cfg.model.latent_dim}, -1.0, 1.0, 73);

        const auto g_before = snapshot(g.params());
        const auto d_before = snapshot(d.params());
        StepOptions opts;
        opts.update_g = !freeze_g;
        opts.update_d = freeze_g;
        began_train_step(g, d, eq, ad, ag, batch, z, opts);
        if (freeze_g) {
            REQUIRE_FALSE(changed(g.params(), g_before));
            REQUIRE(changed(d.params(), d_before));
        } else {
            REQUIRE(changed(g.params(), g_before));
            REQUIRE_FALSE(changed(d.params(), d_before));
        }
    }
}

TEST_CASE("equilibrium invariants hold over a short run") {
    TrainConfig cfg = tiny_train(13, 60);
    const Dataset data = make_synth_dataset(6, 52, 20.0, 60.0, cfg.model.image_size());
    const TrainOutput out = train(cfg, data);
    REQUIRE(out.history.size() == 60);
    for (const MetricsRow& r : out.history) {
        REQUIRE(r.k >= 0.0);
        REQUIRE(r.k <= 1.0);
        REQUIRE(r.m >= r.l_real);
        REQUIRE(r.m >= 0.0);
    }
}

TEST_CASE("divergence aborts with the last-good checkpoint retained") {
    testutil::TempDir dir("trainabort");
    TrainConfig cfg = tiny_train(3, 500);
    // tanh keeps losses bounded for any finite weights, so overflow the
    // pre-activation accumulations instead
    cfg.learning_rate = 1e100;
    cfg.checkpoint_path = dir / "ck.bin";
    cfg.metrics_path = dir / "m.csv";
    const Dataset data = make_synth_dataset(6, 53, 20.0, 60.0, cfg.model.image_size());
    REQUIRE_THROWS_AS(train(cfg, data), NumericError);
    REQUIRE(std::filesystem::exists(dir / "ck.bin"));
    REQUIRE_NOTHROW(load_checkpoint(dir / "ck.bin"));
    // metrics contain only finite rows
    const std::string metrics = testutil::read_text(dir / "m.csv");
    REQUIRE(metrics.find("nan") == std::string::npos);
    REQUIRE(metrics.find("inf") == std::string::npos);
}

TEST_CASE("train validates its configuration") {
    const Dataset data = make_synth_dataset(4, 54, 20.0, 60.0, 8);
    TrainConfig odd = tiny_train(1, 5);
    odd.batch_size = 7;
    REQUIRE_THROWS_AS(train(odd, data), ContractError);

    TrainConfig mismatched = tiny_train(1, 5);
    const Dataset wrong_size = make_synth_dataset(4, 54, 20.0, 60.0, 16);
    REQUIRE_THROWS_AS(train(mismatched, wrong_size), ContractError);

    TrainConfig bad_gamma = tiny_train(1, 5);
    bad_gamma.gamma = 0.0;
    REQUIRE_THROWS_AS(train(bad_gamma, data), ContractError);
}

TEST_CASE("checkpoint interval writes intermediate snapshots") {
    testutil::TempDir dir("trainint");
    TrainConfig cfg = tiny_train(8, 6);
    cfg.checkpoint_interval = 2;
    cfg.checkpoint_path = dir / "ck.bin";
    const Dataset data = make_synth_dataset(4, 55, 20.0, 60.0, cfg.model.image_size());
    train(cfg, data);
    REQUIRE(std::filesystem::exists(dir / "ck.bin"));
}
