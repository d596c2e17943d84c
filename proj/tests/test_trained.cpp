#include <catch2/catch_amalgamated.hpp>

#include "frontal/dataset.hpp"
#include "frontal/inversion.hpp"
#include "frontal/training.hpp"
#include "helpers.hpp"

using namespace frontal;

// One small trained model shared by the post-training behavior tests.
namespace {

struct TrainedFixture {
    TrainConfig cfg;
    Dataset data;
    TrainOutput out;

    TrainedFixture() {
        cfg.seed = 424242;
        cfg.batch_size = 8;
        cfg.steps = 400;
        cfg.model.latent_dim = 8;
        cfg.model.base_size = 4;
        cfg.model.stages = 1;
        cfg.model.channels = 6;
        data = make_synth_dataset(16, 31, 20.0, 60.0, cfg.model.image_size());
        out = train(cfg, data);
    }
};

const TrainedFixture& trained() {
    static TrainedFixture fixture;
    return fixture;
}

} // namespace

TEST_CASE("training reduces the convergence measure") {
    const auto& fx = trained();
    const auto& h = fx.out.history;
    REQUIRE(h.size() == 400);
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < 50; ++i) head += h[static_cast<std::size_t>(i)].m / 50.0;
    for (int i = 0; i < 50; ++i) tail += h[h.size() - 50 + static_cast<std::size_t>(i)].m / 50.0;
    REQUIRE(tail < head);
}

TEST_CASE("the trained auto-encoder beats the zero-image baseline") {
    const auto& fx = trained();
    for (std::size_t i = 0; i < 4; ++i) {
        const Tensor& x = fx.data.images[i];
        const double rec = l1_mean(x, fx.out.discriminator.reconstruct(x)).item();
        const double baseline = l1_mean(x, Tensor::zeros(x.shape())).item();
        REQUIRE(rec < baseline);
    }
}

TEST_CASE("inverting a generated image halves the loss") {
    const auto& fx = trained();
    const Tensor zstar = seeded_uniform({1, 8}, -1.0, 1.0, 777);
    const Embedding ze(zstar.values().begin(), zstar.values().end());
    const Tensor target = generate(fx.out.generator, ze);
    InversionConfig cfg;
    cfg.steps = 200;
    cfg.lr = 0.05;
    cfg.seed = 3;
    const InversionResult r = invert(fx.out.generator, target, cfg);
    REQUIRE(r.final_loss < 0.5 * r.initial_loss);
}

TEST_CASE("a symmetric input yields balanced paired fits") {
    const auto& fx = trained();
    SynthFaceSpec spec;
    spec.seed = 12;
    spec.pose_deg = 0.0; // exactly symmetric render
    spec.size = fx.cfg.model.image_size();
    const Tensor image = synth_face(spec);
    InversionConfig cfg;
    cfg.steps = 150;
    cfg.lr = 0.05;
    cfg.seed = 5;
    const auto [left, right] = paired_invert(fx.out.generator, fx.out.discriminator, image, cfg);
    const double lo = std::min(left.final_loss, right.final_loss);
    const double hi = std::max(left.final_loss, right.final_loss);
    REQUIRE(hi <= 1.1 * lo); // equal objectives, solutions within 10%
}
