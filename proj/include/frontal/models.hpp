#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "frontal/ops.hpp"
#include "frontal/rng.hpp"
#include "frontal/tensor.hpp"

// The generator and the auto-encoder discriminator. Both are parameterized
// by one ModelConfig; the discriminator bottleneck width equals the
// generator latent width so encoder outputs can seed latent inversion.
//
// Generator / decoder: z [N,h] -> linear -> [N,C,b,b] -> `stages` x
// (upsample2x -> 3x3 deconv -> ELU) -> 3x3 deconv to one channel -> tanh.
// Encoder: 3x3 conv -> ELU -> `stages` x (4x4 stride-2 conv -> ELU)
// -> linear to the bottleneck [N,h].
//
// Parameter counts (see param_count):
//   decoder(C,b,h,stages) = h*C*b^2 + C*b^2 + stages*(9C^2 + C) + 9C + 1
//   encoder(C,b,h,stages) = 10C + stages*(16C^2 + C) + C*b^2*h + h

namespace frontal {

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

struct ModelConfig {
    int latent_dim = 16;
    int base_size = 4;
    int stages = 2;
    int channels = 8;

    int image_size() const { return base_size << stages; }

    void validate() const {
        if (latent_dim < 2) throw ContractError("ModelConfig: latent_dim must be >= 2");
        if (base_size < 1) throw ContractError("ModelConfig: base_size must be >= 1");
        if (stages < 1) throw ContractError("ModelConfig: stages must be >= 1");
        if (channels < 1) throw ContractError("ModelConfig: channels must be >= 1");
    }

    bool operator==(const ModelConfig&) const = default;
};

namespace detail {

// uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in))
inline Tensor init_weight(Shape shape, std::int64_t fan_in, SplitMix64& rng) {
    Tensor t = Tensor::zeros(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : t.values_mut()) v = rng.uniform(-bound, bound);
    t.mark_parameter();
    return t;
}

inline Tensor init_zeros(Shape shape) {
    Tensor t = Tensor::zeros(std::move(shape));
    t.mark_parameter();
    return t;
}

// Latent-to-image stack shared by the generator and the discriminator's
// decoder half.
struct DecoderStack {
    Tensor proj_w, proj_b;
    std::vector<Tensor> stage_k, stage_b;
    Tensor out_k, out_b;

    void init(const ModelConfig& cfg, SplitMix64& rng) {
        const std::int64_t c = cfg.channels;
        const std::int64_t flat = c * cfg.base_size * cfg.base_size;
        proj_w = init_weight({cfg.latent_dim, flat}, cfg.latent_dim, rng);
        proj_b = init_zeros({flat});
        stage_k.clear();
        stage_b.clear();
        for (int s = 0; s < cfg.stages; ++s) {
            stage_k.push_back(init_weight({c, c, 3, 3}, c * 9, rng));
            stage_b.push_back(init_zeros({c}));
        }
        out_k = init_weight({c, 1, 3, 3}, c * 9, rng);
        out_b = init_zeros({1});
    }

    Tensor forward(const ModelConfig& cfg, const Tensor& z, Tape* tape) const {
        if (z.shape().size() != 2 || z.shape()[1] != cfg.latent_dim) {
            throw ShapeError("decoder: expected latent batch [N," +
                             std::to_string(cfg.latent_dim) + "], got " + shape_str(z.shape()));
        }
        const std::int64_t n = z.shape()[0];
        Tensor a = linear(z, proj_w, proj_b, tape);
        a = reshape(a, {n, cfg.channels, cfg.base_size, cfg.base_size}, tape);
        for (int s = 0; s < cfg.stages; ++s) {
            a = upsample2x(a, tape);
            a = deconv2d(a, stage_k[static_cast<std::size_t>(s)], 1, 1, tape);
            a = bias_add(a, stage_b[static_cast<std::size_t>(s)], tape);
            a = elu(a, tape);
        }
        a = deconv2d(a, out_k, 1, 1, tape);
        a = bias_add(a, out_b, tape);
        return tanh(a, tape);
    }

    void collect(const std::string& prefix, NamedParams& out) const {
        out.emplace_back(prefix + ".proj.w", proj_w);
        out.emplace_back(prefix + ".proj.b", proj_b);
        for (std::size_t s = 0; s < stage_k.size(); ++s) {
            out.emplace_back(prefix + ".s" + std::to_string(s) + ".k", stage_k[s]);
            out.emplace_back(prefix + ".s" + std::to_string(s) + ".b", stage_b[s]);
        }
        out.emplace_back(prefix + ".out.k", out_k);
        out.emplace_back(prefix + ".out.b", out_b);
    }

    static std::int64_t param_count(const ModelConfig& cfg) {
        const std::int64_t c = cfg.channels;
        const std::int64_t flat = c * cfg.base_size * cfg.base_size;
        return cfg.latent_dim * flat + flat + cfg.stages * (9 * c * c + c) + 9 * c + 1;
    }
};

} // namespace detail

class Generator {
public:
    Generator() = default;

    Generator(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
        cfg.validate();
        SplitMix64 rng(seed);
        stack_.init(cfg, rng);
    }

    // z [N,h] -> image batch [N,1,S,S] in [-1,1].
    Tensor forward(const Tensor& z, Tape* tape = nullptr) const {
        return stack_.forward(cfg_, z, tape);
    }

    NamedParams params() const {
        NamedParams out;
        stack_.collect("g", out);
        return out;
    }

    const ModelConfig& config() const { return cfg_; }

    static std::int64_t param_count(const ModelConfig& cfg) {
        return detail::DecoderStack::param_count(cfg);
    }

private:
    ModelConfig cfg_;
    detail::DecoderStack stack_;
};

class Discriminator {
public:
    Discriminator() = default;

    Discriminator(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
        cfg.validate();
        SplitMix64 rng(seed);
        const std::int64_t c = cfg.channels;
        enc0_k_ = detail::init_weight({c, 1, 3, 3}, 9, rng);
        enc0_b_ = detail::init_zeros({c});
        for (int s = 0; s < cfg.stages; ++s) {
            down_k_.push_back(detail::init_weight({c, c, 4, 4}, c * 16, rng));
            down_b_.push_back(detail::init_zeros({c}));
        }
        const std::int64_t flat = c * cfg.base_size * cfg.base_size;
        fc_w_ = detail::init_weight({flat, cfg.latent_dim}, flat, rng);
        fc_b_ = detail::init_zeros({cfg.latent_dim});
        decoder_.init(cfg, rng);
    }

    // x [N,1,S,S] -> bottleneck embeddings [N,h].
    Tensor encode(const Tensor& x, Tape* tape = nullptr) const {
        check_image(x);
        const std::int64_t n = x.shape()[0];
        Tensor a = conv2d(x, enc0_k_, 1, 1, tape);
        a = bias_add(a, enc0_b_, tape);
        a = elu(a, tape);
        for (std::size_t s = 0; s < down_k_.size(); ++s) {
            a = conv2d(a, down_k_[s], 2, 1, tape);
            a = bias_add(a, down_b_[s], tape);
            a = elu(a, tape);
        }
        a = reshape(a, {n, cfg_.channels * cfg_.base_size * cfg_.base_size}, tape);
        return linear(a, fc_w_, fc_b_, tape);
    }

    Tensor decode(const Tensor& z, Tape* tape = nullptr) const {
        return decoder_.forward(cfg_, z, tape);
    }

    // Auto-encoder pass; output shape equals input shape.
    Tensor reconstruct(const Tensor& x, Tape* tape = nullptr) const {
        return decode(encode(x, tape), tape);
    }

    NamedParams params() const {
        NamedParams out;
        out.emplace_back("d.enc0.k", enc0_k_);
        out.emplace_back("d.enc0.b", enc0_b_);
        for (std::size_t s = 0; s < down_k_.size(); ++s) {
            out.emplace_back("d.down" + std::to_string(s) + ".k", down_k_[s]);
            out.emplace_back("d.down" + std::to_string(s) + ".b", down_b_[s]);
        }
        out.emplace_back("d.fc.w", fc_w_);
        out.emplace_back("d.fc.b", fc_b_);
        decoder_.collect("d.dec", out);
        return out;
    }

    const ModelConfig& config() const { return cfg_; }

    static std::int64_t param_count(const ModelConfig& cfg) {
        const std::int64_t c = cfg.channels;
        const std::int64_t flat = c * cfg.base_size * cfg.base_size;
        const std::int64_t encoder =
            10 * c + cfg.stages * (16 * c * c + c) + flat * cfg.latent_dim + cfg.latent_dim;
        return encoder + detail::DecoderStack::param_count(cfg);
    }

private:
    void check_image(const Tensor& x) const {
        const int s = cfg_.image_size();
        if (x.shape().size() != 4 || x.shape()[1] != 1 || x.shape()[2] != s ||
            x.shape()[3] != s) {
            throw ShapeError("discriminator: expected [N,1," + std::to_string(s) + "," +
                             std::to_string(s) + "], got " + shape_str(x.shape()));
        }
    }

    ModelConfig cfg_;
    Tensor enc0_k_, enc0_b_;
    std::vector<Tensor> down_k_, down_b_;
    Tensor fc_w_, fc_b_;
    detail::DecoderStack decoder_;
};

} // namespace frontal
