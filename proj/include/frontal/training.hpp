#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "frontal/checkpoint.hpp"
#include "frontal/dataset.hpp"
#include "frontal/models.hpp"
#include "frontal/ops.hpp"

// Boundary-equilibrium training. Both networks see reconstruction losses:
//
//   L_real = l1_mean(x, D(x))          L_fake = l1_mean(G(z), D(G(z)))
//   L_D = L_real - k * L_fake          L_G = L_fake
//   k  <- clamp(k + lambda * (gamma * L_real - L_fake), 0, 1)
//   M  = L_real + |gamma * L_real - L_fake|
//
// gamma balances the two losses (low gamma trades diversity for quality),
// k is the proportional control weighting the fake term in L_D, and M is
// the scalar tracked to judge convergence.

namespace frontal {

struct EquilibriumState {
    double k = 0.0;
    double gamma = 0.5;
    double lambda_k = 0.001;

    void validate() const {
        if (!(gamma > 0.0) || gamma > 1.0) throw ContractError("EquilibriumState: gamma must be in (0,1]");
        if (!(lambda_k > 0.0)) throw ContractError("EquilibriumState: lambda_k must be positive");
        if (k < 0.0 || k > 1.0) throw ContractError("EquilibriumState: k must be in [0,1]");
    }
};

struct LossTerms {
    double l_real = 0.0;
    double l_fake = 0.0;
    double l_d = 0.0;
    double l_g = 0.0;
    double m = 0.0;
};

inline double convergence_measure(double l_real, double l_fake, double gamma) {
    return l_real + std::abs(gamma * l_real - l_fake);
}

inline LossTerms combine_losses(double l_real, double l_fake, const EquilibriumState& eq) {
    LossTerms t;
    t.l_real = l_real;
    t.l_fake = l_fake;
    t.l_d = l_real - eq.k * l_fake;
    t.l_g = l_fake;
    t.m = convergence_measure(l_real, l_fake, eq.gamma);
    return t;
}

inline EquilibriumState update_k(EquilibriumState eq, double l_real, double l_fake) {
    eq.k = std::clamp(eq.k + eq.lambda_k * (eq.gamma * l_real - l_fake), 0.0, 1.0);
    return eq;
}

// Builds the loss graph for one batch on `tape`. l_d and l_g stay attached
// to the tape for backward; k enters L_D as a constant.
struct LossGraph {
    Tensor l_real, l_fake, l_d;
    Tensor fake_images; // G(z), reused by tests
};

inline LossGraph build_loss_graph(const Tensor& x, const Tensor& z, const Generator& g,
                                  const Discriminator& d, double k, Tape* tape) {
    LossGraph lg;
    Tensor d_real = d.reconstruct(x, tape);
    lg.l_real = l1_mean(x, d_real, tape);
    lg.fake_images = g.forward(z, tape);
    Tensor d_fake = d.reconstruct(lg.fake_images, tape);
    lg.l_fake = l1_mean(lg.fake_images, d_fake, tape);
    lg.l_d = sub(lg.l_real, scale(lg.l_fake, k, tape), tape);
    return lg;
}

// Loss terms for one batch without touching any state.
inline LossTerms began_losses(const ImageBatch& x, const Tensor& z, const Generator& g,
                              const Discriminator& d, const EquilibriumState& eq) {
    const LossGraph lg = build_loss_graph(x.images, z, g, d, eq.k, nullptr);
    const double l_real = lg.l_real.item();
    const double l_fake = lg.l_fake.item();
    if (!std::isfinite(l_real) || !std::isfinite(l_fake)) {
        throw NumericError("began_losses: non-finite loss (l_real=" + std::to_string(l_real) +
                           ", l_fake=" + std::to_string(l_fake) + ")");
    }
    return combine_losses(l_real, l_fake, eq);
}

// Bias-corrected Adam. Moment buffers are keyed by position in the
// parameter list, which must be stable across calls.
class Adam {
public:
    explicit Adam(double lr = 0.001, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const NamedParams& params) {
        if (m_.empty()) {
            for (const auto& [name, p] : params) {
                m_.emplace_back(p.values().size(), 0.0);
                v_.emplace_back(p.values().size(), 0.0);
            }
        }
        if (m_.size() != params.size()) {
            throw ContractError("Adam: parameter list changed size");
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto& [name, p_const] = params[i];
            Tensor p = p_const;
            if (!p.has_grad()) {
                throw ContractError("Adam: parameter '" + name + "' has no gradient");
            }
            auto g = p.grad();
            auto val = p.values_mut();
            auto& m = m_[i];
            auto& v = v_[i];
            if (m.size() != g.size()) {
                throw ContractError("Adam: parameter '" + name + "' changed shape");
            }
            for (std::size_t j = 0; j < g.size(); ++j) {
                m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
                v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
                const double m_hat = m[j] / bc1;
                const double v_hat = v[j] / bc2;
                val[j] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
            }
        }
    }

    std::int64_t steps_taken() const { return t_; }
    double learning_rate() const { return lr_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

struct TrainConfig {
    std::uint64_t seed = 0;
    int batch_size = 16;
    double gamma = 0.5;
    double lambda_k = 0.001;
    double learning_rate = 0.001;
    int steps = 2000;
    int checkpoint_interval = 0; // 0 = only the initial and final snapshots
    ModelConfig model;
    std::filesystem::path checkpoint_path; // empty = no checkpoint file
    std::filesystem::path metrics_path;    // empty = no metrics file

    void validate() const {
        model.validate();
        if (batch_size < 2 || batch_size % 2 != 0) {
            throw ContractError("TrainConfig: batch_size must be even and >= 2");
        }
        if (steps < 0) throw ContractError("TrainConfig: steps must be >= 0");
        if (!(learning_rate > 0.0)) throw ContractError("TrainConfig: learning_rate must be positive");
        if (checkpoint_interval < 0) throw ContractError("TrainConfig: checkpoint_interval must be >= 0");
        EquilibriumState eq;
        eq.gamma = gamma;
        eq.lambda_k = lambda_k;
        eq.validate();
    }
};

struct MetricsRow {
    std::int64_t step = 0;
    double l_real = 0.0, l_fake = 0.0, l_d = 0.0, l_g = 0.0, k = 0.0, m = 0.0;
};

struct StepOptions {
    bool update_d = true;
    bool update_g = true;
};

namespace detail {

inline void zero_grads(const NamedParams& params) {
    for (const auto& [name, p] : params) {
        Tensor t = p;
        t.zero_grad();
    }
}

} // namespace detail

// One alternation: d(L_D)/d(theta_D) and d(L_G)/d(theta_G) are both taken
// at the step's incoming parameters, then the two Adam updates apply and k
// moves. Returns the step's loss terms.
inline LossTerms began_train_step(Generator& g, Discriminator& d, EquilibriumState& eq,
                                  Adam& adam_d, Adam& adam_g, const ImageBatch& batch,
                                  const Tensor& z, const StepOptions& opts = {}) {
    const NamedParams gp = g.params();
    const NamedParams dp = d.params();

    Tape tape_d;
    LossGraph lg = build_loss_graph(batch.images, z, g, d, eq.k, &tape_d);
    const double l_real = lg.l_real.item();
    const double l_fake = lg.l_fake.item();
    const LossTerms terms = combine_losses(l_real, l_fake, eq);
    if (!std::isfinite(terms.m)) {
        throw NumericError("training: non-finite convergence measure (l_real=" +
                           std::to_string(l_real) + ", l_fake=" + std::to_string(l_fake) + ")");
    }

    detail::zero_grads(gp);
    detail::zero_grads(dp);
    tape_d.backward(lg.l_d);

    // Hold d(L_D)/d(theta_D) while the generator pass reuses the grad buffers.
    std::vector<std::vector<double>> d_grads;
    if (opts.update_d) {
        d_grads.reserve(dp.size());
        for (const auto& [name, p] : dp) {
            d_grads.emplace_back(p.grad().begin(), p.grad().end());
        }
    }

    if (opts.update_g) {
        Tape tape_g;
        Tensor fake = g.forward(z, &tape_g);
        Tensor d_fake = d.reconstruct(fake, &tape_g);
        Tensor l_g = l1_mean(fake, d_fake, &tape_g);
        detail::zero_grads(gp);
        detail::zero_grads(dp);
        tape_g.backward(l_g);
        adam_g.step(gp);
    }

    if (opts.update_d) {
        for (std::size_t i = 0; i < dp.size(); ++i) {
            Tensor p = dp[i].second;
            auto dst = p.grad_mut();
            std::copy(d_grads[i].begin(), d_grads[i].end(), dst.begin());
        }
        adam_d.step(dp);
    }

    detail::zero_grads(gp);
    detail::zero_grads(dp);
    eq = update_k(eq, l_real, l_fake);
    return terms;
}

struct TrainOutput {
    Generator generator;
    Discriminator discriminator;
    EquilibriumState eq;
    std::vector<MetricsRow> history;
};

namespace detail {

class MetricsWriter {
public:
    explicit MetricsWriter(const std::filesystem::path& path) {
        if (path.empty()) return;
        out_.open(path, std::ios::trunc);
        if (!out_) throw ContractError("train: cannot open metrics file " + path.string());
        out_ << "step,l_real,l_fake,l_d,l_g,k,m\n" << std::flush;
    }

    // ~17 significant digits so parsed values round-trip exactly
    void row(const MetricsRow& r) {
        if (!out_.is_open()) return;
        char buf[256];
        std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      static_cast<long long>(r.step), r.l_real, r.l_fake, r.l_d, r.l_g, r.k,
                      r.m);
        out_ << buf << std::flush;
    }

private:
    std::ofstream out_;
};

} // namespace detail

// Full run: fresh models from cfg.seed, `steps` alternations over mirror
// batches, metrics appended per step, checkpoint written at the start, at
// every checkpoint_interval, and at the end. Seed streams: 1 -> generator
// init, 2 -> discriminator init, 3 -> batch sampling, 4 -> latent draws.
inline TrainOutput train(const TrainConfig& cfg, const Dataset& data) {
    cfg.validate();
    if (data.images.empty()) throw ContractError("train: empty dataset");
    if (data.image_size != cfg.model.image_size()) {
        throw ContractError("train: dataset images are " + std::to_string(data.image_size) +
                            "px but the model expects " +
                            std::to_string(cfg.model.image_size()) + "px");
    }

    SplitMix64 master(cfg.seed);
    TrainOutput out;
    out.generator = Generator(cfg.model, master.split(1).state());
    out.discriminator = Discriminator(cfg.model, master.split(2).state());
    SplitMix64 data_rng = master.split(3);
    SplitMix64 z_rng = master.split(4);

    out.eq.gamma = cfg.gamma;
    out.eq.lambda_k = cfg.lambda_k;

    Adam adam_d(cfg.learning_rate);
    Adam adam_g(cfg.learning_rate);
    detail::MetricsWriter metrics(cfg.metrics_path);

    const auto snapshot = [&] {
        if (!cfg.checkpoint_path.empty()) {
            save_checkpoint(cfg.checkpoint_path, out.generator, out.discriminator, out.eq.k);
        }
    };
    snapshot(); // the step-0 state is the last-good checkpoint until replaced

    for (int step = 0; step < cfg.steps; ++step) {
        ImageBatch batch = sample_mirror_batch(data, cfg.batch_size, data_rng);
        Tensor z = Tensor::zeros({cfg.batch_size, cfg.model.latent_dim});
        for (double& v : z.values_mut()) v = z_rng.uniform(-1.0, 1.0);

        const LossTerms terms = began_train_step(out.generator, out.discriminator, out.eq,
                                                 adam_d, adam_g, batch, z);

        MetricsRow row;
        row.step = step;
        row.l_real = terms.l_real;
        row.l_fake = terms.l_fake;
        row.l_d = terms.l_d;
        row.l_g = terms.l_g;
        row.k = out.eq.k;
        row.m = terms.m;
        metrics.row(row);
        out.history.push_back(row);

        if (cfg.checkpoint_interval > 0 && (step + 1) % cfg.checkpoint_interval == 0) {
            snapshot();
        }
    }
    snapshot();
    return out;
}

} // namespace frontal
