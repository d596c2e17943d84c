#include <catch2/catch_amalgamated.hpp>

#include <limits>

#include "frontal/inversion.hpp"
#include "helpers.hpp"

using namespace frontal;

namespace {

ModelConfig small_config() {
    ModelConfig cfg;
    cfg.latent_dim = 8;
    cfg.base_size = 4;
    cfg.stages = 1;
    cfg.channels = 4;
    return cfg;
}

} // namespace

TEST_CASE("invert validates its inputs") {
    const Generator g(small_config(), 1);
    const Tensor target = Tensor::zeros({1, 1, 8, 8});
    InversionConfig cfg;
    cfg.steps = 0;
    REQUIRE_THROWS_AS(invert(g, target, cfg), ContractError);
    cfg.steps = 5;
    cfg.lr = 0.0;
    REQUIRE_THROWS_AS(invert(g, target, cfg), ContractError);
    cfg = InversionConfig{};
    REQUIRE_THROWS_AS(invert(g, Tensor::zeros({1, 1, 4, 4}), cfg), ShapeError);
    cfg.init = InversionInit::Encoder;
    REQUIRE_THROWS_AS(invert(g, target, cfg), ContractError); // no discriminator given
}

TEST_CASE("one step yields a two-entry trace") {
    const Generator g(small_config(), 2);
    const Tensor target = seeded_uniform({1, 1, 8, 8}, -0.5, 0.5, 3);
    InversionConfig cfg;
    cfg.steps = 1;
    const InversionResult r = invert(g, target, cfg);
    REQUIRE(r.loss_trace.size() == 2);
    REQUIRE(r.initial_loss == r.loss_trace.front());
    REQUIRE(r.final_loss == r.loss_trace.back());
    REQUIRE(r.z.size() == 8);
}

TEST_CASE("inversion is deterministic") {
    const Generator g(small_config(), 4);
    const Tensor target = seeded_uniform({1, 1, 8, 8}, -0.5, 0.5, 5);
    InversionConfig cfg;
    cfg.steps = 25;
    cfg.seed = 17;
    const InversionResult a = invert(g, target, cfg);
    const InversionResult b = invert(g, target, cfg);
    REQUIRE(a.z == b.z);
    REQUIRE(a.loss_trace == b.loss_trace);
}

TEST_CASE("generator parameters are untouched by inversion") {
    const Generator g(small_config(), 6);
    std::vector<std::vector<double>> before;
    for (const auto& [name, p] : g.params()) {
        before.emplace_back(p.values().begin(), p.values().end());
    }
    const Tensor target = seeded_uniform({1, 1, 8, 8}, -0.5, 0.5, 7);
    InversionConfig cfg;
    cfg.steps = 30;
    invert(g, target, cfg);
    std::size_t i = 0;
    for (const auto& [name, p] : g.params()) {
        const auto now = p.values();
        REQUIRE(std::equal(now.begin(), now.end(), before[i].begin(), before[i].end()));
        ++i;
    }
}

TEST_CASE("the returned embedding is the best seen") {
    const Generator g(small_config(), 8);
    const Tensor target = seeded_uniform({1, 1, 8, 8}, -0.5, 0.5, 9);
    InversionConfig cfg;
    cfg.steps = 40;
    cfg.lr = 0.2; // coarse steps so the trace is not monotone
    const InversionResult r = invert(g, target, cfg);
    double best = std::numeric_limits<double>::infinity();
    for (double v : r.loss_trace) best = std::min(best, v);
    const double recomputed = l1_mean(generate(g, r.z), target).item();
    REQUIRE(recomputed == best);
    REQUIRE(r.final_loss >= best);
}

TEST_CASE("encoder init starts from the discriminator embedding") {
    const ModelConfig cfg = small_config();
    const Generator g(cfg, 10);
    const Discriminator d(cfg, 11);
    const Tensor target = seeded_uniform({1, 1, 8, 8}, -0.5, 0.5, 12);
    InversionConfig icfg;
    icfg.steps = 1;
    icfg.init = InversionInit::Encoder;
    const InversionResult r = invert(g, target, icfg, &d);
    const Tensor enc = d.encode(target);
    const double expected = l1_mean(g.forward(enc), target).item();
    REQUIRE(r.initial_loss == expected);
}

TEST_CASE("paired inversion fits the image and its mirror") {
    const ModelConfig cfg = small_config();
    const Generator g(cfg, 13);
    const Discriminator d(cfg, 14);
    const Tensor image = seeded_uniform({1, 1, 8, 8}, -0.5, 0.5, 15);
    InversionConfig icfg;
    icfg.steps = 10;
    icfg.seed = 29;
    const auto [left, right] = paired_invert(g, d, image, icfg);
    REQUIRE(left.z.size() == 8);
    REQUIRE(right.z.size() == 8);

    // the right branch is exactly the inversion of the mirrored image
    InversionConfig rcfg = icfg;
    rcfg.seed = icfg.seed + 1;
    const InversionResult direct = invert(g, mirror(image), rcfg, &d);
    REQUIRE(right.z == direct.z);
    REQUIRE(right.loss_trace == direct.loss_trace);
}
