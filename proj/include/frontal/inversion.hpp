#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "frontal/models.hpp"
#include "frontal/ops.hpp"
#include "frontal/slerp.hpp"
#include "frontal/training.hpp"

// Latent inversion: fit an embedding to a target image by running Adam on
// the embedding alone, minimizing l1_mean(G(z), target). The generator is
// read-only throughout.

namespace frontal {

enum class InversionInit {
    UniformRandom, // z0 ~ U[-1,1)^h from the config seed
    Encoder,       // z0 = D.encode(target); needs a discriminator
};

struct InversionConfig {
    int steps = 200;
    double lr = 0.05;
    InversionInit init = InversionInit::UniformRandom;
    std::uint64_t seed = 0;
};

struct InversionResult {
    Embedding z;                    // embedding with the lowest traced loss
    double initial_loss = 0.0;      // loss_trace.front()
    double final_loss = 0.0;        // loss_trace.back()
    std::vector<double> loss_trace; // steps + 1 entries
};

// Renders a single embedding through the generator; [1,1,S,S].
inline Tensor generate(const Generator& g, const Embedding& z) {
    Tensor zt = Tensor::from_values({1, static_cast<std::int64_t>(z.size())},
                                    std::vector<double>(z.begin(), z.end()));
    return g.forward(zt);
}

inline InversionResult invert(const Generator& g, const Tensor& target,
                              const InversionConfig& cfg, const Discriminator* d = nullptr) {
    if (cfg.steps < 1) throw ContractError("invert: steps must be >= 1");
    if (!(cfg.lr > 0.0)) throw ContractError("invert: lr must be positive");
    const int h = g.config().latent_dim;
    const int s = g.config().image_size();
    if (target.shape() != Shape{1, 1, s, s}) {
        throw ShapeError("invert: target " + shape_str(target.shape()) +
                         " does not match generator output [1,1," + std::to_string(s) + "," +
                         std::to_string(s) + "]");
    }

    Tensor z;
    if (cfg.init == InversionInit::Encoder) {
        if (d == nullptr) throw ContractError("invert: encoder init needs a discriminator");
        z = d->encode(target).clone();
    } else {
        z = seeded_uniform({1, h}, -1.0, 1.0, cfg.seed);
    }
    z.mark_parameter();

    NamedParams zp;
    zp.emplace_back("z", z);
    Adam adam(cfg.lr);

    InversionResult res;
    res.loss_trace.reserve(static_cast<std::size_t>(cfg.steps) + 1);
    double best_loss = std::numeric_limits<double>::infinity();
    Embedding best_z;

    const auto note = [&](double loss) {
        res.loss_trace.push_back(loss);
        if (loss < best_loss) {
            best_loss = loss;
            best_z.assign(z.values().begin(), z.values().end());
        }
    };

    for (int step = 0; step < cfg.steps; ++step) {
        Tape tape;
        Tensor out = g.forward(z, &tape);
        Tensor loss = l1_mean(out, target, &tape);
        const double v = loss.item();
        if (!std::isfinite(v)) {
            throw NumericError("invert: non-finite loss at step " + std::to_string(step) +
                               " after " + std::to_string(res.loss_trace.size()) +
                               " trace entries");
        }
        note(v);
        z.zero_grad();
        tape.backward(loss);
        adam.step(zp);
    }

    const double last = l1_mean(g.forward(z), target).item();
    if (!std::isfinite(last)) {
        throw NumericError("invert: non-finite loss after the final update");
    }
    note(last);

    res.z = std::move(best_z);
    res.initial_loss = res.loss_trace.front();
    res.final_loss = res.loss_trace.back();
    return res;
}

// Inverts the image and its mirror view with the same settings; the mirror
// run uses seed + 1 so random initializations differ.
inline std::pair<InversionResult, InversionResult> paired_invert(const Generator& g,
                                                                 const Discriminator& d,
                                                                 const Tensor& image,
                                                                 const InversionConfig& cfg) {
    InversionConfig right_cfg = cfg;
    right_cfg.seed = cfg.seed + 1;
    InversionResult left = invert(g, image, cfg, &d);
    InversionResult right = invert(g, mirror(image), right_cfg, &d);
    return {std::move(left), std::move(right)};
}

} // namespace frontal
