#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "frontal/dataset.hpp"
#include "frontal/gradcheck.hpp"
#include "frontal/models.hpp"
#include "frontal/ops.hpp"
#include "frontal/rng.hpp"
#include "frontal/slerp.hpp"
#include "frontal/training.hpp"

// Invariant suites behind `verify` and the acceptance run: interpolation
// geometry, gradient correctness against central finite differences, and
// equilibrium dynamics over a short training run.

namespace frontal {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

using SlerpFn = std::function<Embedding(const Embedding&, const Embedding&, double)>;

namespace detail {

inline double emb_norm(const Embedding& z) {
    double s = 0.0;
    for (double v : z) s += v * v;
    return std::sqrt(s);
}

inline double emb_dot(const Embedding& a, const Embedding& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Random pair usable by slerp: moderate norms, not near-antipodal.
inline std::pair<Embedding, Embedding> random_pair(SplitMix64& rng, std::size_t dim) {
    for (;;) {
        Embedding a(dim), b(dim);
        for (double& v : a) v = rng.uniform(-2.0, 2.0);
        for (double& v : b) v = rng.uniform(-2.0, 2.0);
        const double na = emb_norm(a), nb = emb_norm(b);
        if (na < 0.5 || nb < 0.5) continue;
        if (emb_dot(a, b) / (na * nb) < -0.99) continue;
        return {std::move(a), std::move(b)};
    }
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// Smallest |a_i - b_i| across an L1 pair. Central differences are a valid
// oracle for l1_mean only while the eps-tube stays on one side of every
// tie, so full-loss checks evaluate at points where this clears a margin.
inline double min_tie_distance(const Tensor& a, const Tensor& b) {
    const auto av = a.values();
    const auto bv = b.values();
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < av.size(); ++i) m = std::min(m, std::abs(av[i] - bv[i]));
    return m;
}

} // namespace detail

// Geometry of the interpolator. `fn` defaults to the library slerp; tests
// inject a perturbed version to prove the suite catches regressions.
inline std::vector<CheckResult> verify_slerp(std::uint64_t seed, int trials,
                                             const SlerpFn& fn_in = nullptr) {
    const SlerpFn fn = fn_in ? fn_in : [](const Embedding& a, const Embedding& b, double t) {
        return slerp(a, b, t);
    };
    SplitMix64 rng(seed);
    double worst_norm = 0.0, worst_sym = 0.0, worst_plane = 0.0, worst_limit = 0.0;
    bool endpoints_exact = true;

    for (int trial = 0; trial < trials; ++trial) {
        const std::size_t dim = 2 + rng.next_below(31);
        auto [z0, z1] = detail::random_pair(rng, dim);

        // endpoint exactness, bit for bit
        const Embedding e0 = fn(z0, z1, 0.0);
        const Embedding e1 = fn(z0, z1, 1.0);
        for (std::size_t i = 0; i < dim; ++i) {
            if (e0[i] != z0[i] || e1[i] != z1[i]) endpoints_exact = false;
        }

        const double t = rng.uniform(0.05, 0.95);

        // unit inputs stay on the unit sphere
        Embedding u0 = z0, u1 = z1;
        const double n0 = detail::emb_norm(z0), n1 = detail::emb_norm(z1);
        for (std::size_t i = 0; i < dim; ++i) {
            u0[i] /= n0;
            u1[i] /= n1;
        }
        worst_norm = std::max(worst_norm,
                              std::abs(detail::emb_norm(fn(u0, u1, t)) - 1.0));

        // symmetry in (z0, z1, t) <-> (z1, z0, 1-t)
        const Embedding fwd = fn(z0, z1, t);
        const Embedding rev = fn(z1, z0, 1.0 - t);
        for (std::size_t i = 0; i < dim; ++i) {
            worst_sym = std::max(worst_sym, std::abs(fwd[i] - rev[i]));
        }

        // output stays in span(z0, z1)
        Embedding e_a = u0;
        Embedding w = z1;
        const double proj = detail::emb_dot(z1, e_a);
        for (std::size_t i = 0; i < dim; ++i) w[i] -= proj * e_a[i];
        const double wn = detail::emb_norm(w);
        double resid2 = 0.0;
        const double ca = detail::emb_dot(fwd, e_a);
        if (wn > 1e-12) {
            for (std::size_t i = 0; i < dim; ++i) w[i] /= wn;
            const double cb = detail::emb_dot(fwd, w);
            for (std::size_t i = 0; i < dim; ++i) {
                const double r = fwd[i] - ca * e_a[i] - cb * w[i];
                resid2 += r * r;
            }
        } else {
            for (std::size_t i = 0; i < dim; ++i) {
                const double r = fwd[i] - ca * e_a[i];
                resid2 += r * r;
            }
        }
        worst_plane = std::max(worst_plane, std::sqrt(resid2));

        // Omega -> 0: slerp collapses onto lerp. Rotate u0 by 1e-3 rad
        // toward an orthogonal direction to build the small-angle pair.
        Embedding ortho(dim, 0.0);
        {
            Embedding raw(dim);
            for (double& v : raw) v = rng.uniform(-1.0, 1.0);
            const double along = detail::emb_dot(raw, u0);
            for (std::size_t i = 0; i < dim; ++i) raw[i] -= along * u0[i];
            const double rn = detail::emb_norm(raw);
            if (rn > 1e-9) {
                for (std::size_t i = 0; i < dim; ++i) ortho[i] = raw[i] / rn;
            } else {
                continue; // vanishing orthogonal draw; next trial
            }
        }
        const double ang = 1e-3;
        Embedding near(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            near[i] = std::cos(ang) * u0[i] + std::sin(ang) * ortho[i];
        }
        for (double tt = 0.1; tt < 0.95; tt += 0.1) {
            const Embedding s = fn(u0, near, tt);
            const Embedding l = lerp(u0, near, tt);
            for (std::size_t i = 0; i < dim; ++i) {
                worst_limit = std::max(worst_limit, std::abs(s[i] - l[i]));
            }
        }
    }

    std::vector<CheckResult> checks;
    checks.push_back({"slerp.endpoints_exact", endpoints_exact,
                      endpoints_exact ? "bit-exact" : "endpoint drifted"});
    checks.push_back({"slerp.unit_norm", worst_norm < 1e-9,
                      "max |norm-1| = " + detail::fmt(worst_norm)});
    checks.push_back({"slerp.symmetry", worst_sym < 1e-12,
                      "max deviation = " + detail::fmt(worst_sym)});
    checks.push_back({"slerp.planarity", worst_plane < 1e-9,
                      "max residual = " + detail::fmt(worst_plane)});
    checks.push_back({"slerp.lerp_limit", worst_limit < 1e-6,
                      "max |slerp-lerp| = " + detail::fmt(worst_limit)});

    // pinned hand values
    const Embedding q = fn({1.0, 0.0}, {0.0, 1.0}, 0.5);
    const double r2 = std::sqrt(0.5);
    const bool mid_ok = std::abs(q[0] - r2) < 1e-5 && std::abs(q[1] - r2) < 1e-5;
    checks.push_back({"slerp.quarter_circle_midpoint", mid_ok,
                      "(" + detail::fmt(q[0]) + ", " + detail::fmt(q[1]) + ")"});
    const Embedding third = fn({1.0, 0.0}, {0.0, 1.0}, 1.0 / 3.0);
    const bool third_ok =
        std::abs(third[0] - 0.86602540378443871) < 1e-5 && std::abs(third[1] - 0.5) < 1e-5;
    checks.push_back({"slerp.quarter_circle_third", third_ok,
                      "(" + detail::fmt(third[0]) + ", " + detail::fmt(third[1]) + ")"});
    checks.push_back({"schedule.count_10", schedule_count(1.0, 0.0, 0.1) == 10, "n_t(1,0,0.1)"});
    checks.push_back({"schedule.angle_step_10", angle_step(50.0, -50.0, 10) == 10.0,
                      "n(50,-50,10)"});
    return checks;
}

// Max relative error over every parameter coordinate of a scalar loss,
// central differences vs. the tape.
inline double grad_check_params(const std::function<Tensor(Tape*)>& loss_fn,
                                const NamedParams& params, double eps = 1e-5) {
    for (const auto& [name, p] : params) {
        Tensor t = p;
        t.zero_grad();
    }
    Tape tape;
    Tensor loss = loss_fn(&tape);
    if (!std::isfinite(loss.item())) throw NumericError("grad_check_params: non-finite loss");
    tape.backward(loss);

    double max_rel = 0.0;
    for (const auto& [name, p] : params) {
        Tensor t = p;
        const std::vector<double> autodiff(t.grad_mut().begin(), t.grad_mut().end());
        auto vals = t.values_mut();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double saved = vals[i];
            vals[i] = saved + eps;
            const double f_plus = loss_fn(nullptr).item();
            vals[i] = saved - eps;
            const double f_minus = loss_fn(nullptr).item();
            vals[i] = saved;
            const double fd = (f_plus - f_minus) / (2.0 * eps);
            const double rel = std::abs(autodiff[i] - fd) / std::max(1.0, std::abs(fd));
            max_rel = std::max(max_rel, rel);
        }
        t.zero_grad();
    }
    return max_rel;
}

struct LayerGradReport {
    std::string layer;
    double max_rel = 0.0;
};

// Finite-difference checks for every layer type and both full losses.
inline std::vector<CheckResult> verify_grad(std::uint64_t seed, int points = 10,
                                            double tol = 1e-5,
                                            std::vector<LayerGradReport>* report = nullptr) {
    std::vector<CheckResult> checks;
    const auto run = [&](const std::string& layer,
                         const std::function<double(std::uint64_t)>& one_point) {
        double worst = 0.0;
        for (int i = 0; i < points; ++i) {
            worst = std::max(worst, one_point(seed + static_cast<std::uint64_t>(i)));
        }
        if (report) report->push_back({layer, worst});
        checks.push_back({"grad." + layer, worst < tol,
                          "max rel err = " + detail::fmt(worst)});
    };

    run("conv2d", [](std::uint64_t s) {
        const Tensor x = seeded_uniform({1, 2, 4, 4}, -1.0, 1.0, s);
        const Tensor k = seeded_uniform({3, 2, 3, 3}, -0.7, 0.7, s + 1000);
        const Tensor target = seeded_uniform({1, 3, 4, 4}, -1.0, 1.0, s + 2000);
        const double wrt_x = grad_check(
            [&](const Tensor& v, Tape* t) { return l1_mean(conv2d(v, k, 1, 1, t), target, t); },
            x);
        const double wrt_k = grad_check(
            [&](const Tensor& v, Tape* t) { return l1_mean(conv2d(x, v, 1, 1, t), target, t); },
            k);
        return std::max(wrt_x, wrt_k);
    });
    run("conv2d_strided", [](std::uint64_t s) {
        const Tensor x = seeded_uniform({2, 2, 6, 6}, -1.0, 1.0, s);
        const Tensor k = seeded_uniform({2, 2, 4, 4}, -0.7, 0.7, s + 1000);
        const Tensor target = seeded_uniform({2, 2, 3, 3}, -1.0, 1.0, s + 2000);
        return grad_check(
            [&](const Tensor& v, Tape* t) { return l1_mean(conv2d(v, k, 2, 1, t), target, t); },
            x);
    });
    run("deconv2d", [](std::uint64_t s) {
        const Tensor x = seeded_uniform({1, 2, 3, 3}, -1.0, 1.0, s);
        const Tensor k = seeded_uniform({2, 3, 3, 3}, -0.7, 0.7, s + 1000);
        const Tensor target = seeded_uniform({1, 3, 3, 3}, -1.0, 1.0, s + 2000);
        const double wrt_x = grad_check(
            [&](const Tensor& v, Tape* t) { return l1_mean(deconv2d(v, k, 1, 1, t), target, t); },
            x);
        const double wrt_k = grad_check(
            [&](const Tensor& v, Tape* t) { return l1_mean(deconv2d(x, v, 1, 1, t), target, t); },
            k);
        return std::max(wrt_x, wrt_k);
    });
    run("deconv2d_strided", [](std::uint64_t s) {
        const Tensor x = seeded_uniform({1, 2, 3, 3}, -1.0, 1.0, s);
        const Tensor k = seeded_uniform({2, 2, 2, 2}, -0.7, 0.7, s + 1000);
        const Tensor target = seeded_uniform({1, 2, 6, 6}, -1.0, 1.0, s + 2000);
        return grad_check(
            [&](const Tensor& v, Tape* t) { return l1_mean(deconv2d(v, k, 2, 0, t), target, t); },
            x);
    });
    run("upsample2x", [](std::uint64_t s) {
        const Tensor x = seeded_uniform({2, 2, 3, 3}, -1.0, 1.0, s);
        const Tensor target = seeded_uniform({2, 2, 6, 6}, -1.0, 1.0, s + 2000);
        return grad_check(
            [&](const Tensor& v, Tape* t) { return l1_mean(upsample2x(v, t), target, t); }, x);
    });
    run("elu", [](std::uint64_t s) {
        const Tensor x = seeded_uniform({3, 7}, -2.0, 2.0, s);
        const Tensor target = seeded_uniform({3, 7}, -1.0, 1.0, s + 2000);
        return grad_check(
            [&](const Tensor& v, Tape* t) { return l1_mean(elu(v, t), target, t); }, x);
    });
    run("tanh", [](std::uint64_t s) {
        const Tensor x = seeded_uniform({3, 7}, -2.0, 2.0, s);
        const Tensor target = seeded_uniform({3, 7}, -1.0, 1.0, s + 2000);
        return grad_check(
            [&](const Tensor& v, Tape* t) { return l1_mean(tanh(v, t), target, t); }, x);
    });
    run("linear", [](std::uint64_t s) {
        const Tensor x = seeded_uniform({3, 4}, -1.0, 1.0, s);
        const Tensor w = seeded_uniform({4, 5}, -0.7, 0.7, s + 1000);
        const Tensor b = seeded_uniform({5}, -0.5, 0.5, s + 1500);
        const Tensor target = seeded_uniform({3, 5}, -1.0, 1.0, s + 2000);
        const double wrt_x = grad_check(
            [&](const Tensor& v, Tape* t) { return l1_mean(linear(v, w, b, t), target, t); }, x);
        const double wrt_w = grad_check(
            [&](const Tensor& v, Tape* t) { return l1_mean(linear(x, v, b, t), target, t); }, w);
        const double wrt_b = grad_check(
            [&](const Tensor& v, Tape* t) { return l1_mean(linear(x, w, v, t), target, t); }, b);
        return std::max({wrt_x, wrt_w, wrt_b});
    });
    run("bias_add", [](std::uint64_t s) {
        const Tensor x = seeded_uniform({2, 3, 4, 4}, -1.0, 1.0, s);
        const Tensor b = seeded_uniform({3}, -0.5, 0.5, s + 1000);
        const Tensor target = seeded_uniform({2, 3, 4, 4}, -1.0, 1.0, s + 2000);
        const double wrt_x = grad_check(
            [&](const Tensor& v, Tape* t) { return l1_mean(bias_add(v, b, t), target, t); }, x);
        const double wrt_b = grad_check(
            [&](const Tensor& v, Tape* t) { return l1_mean(bias_add(x, v, t), target, t); }, b);
        return std::max(wrt_x, wrt_b);
    });
    run("l1_mean", [](std::uint64_t s) {
        // keep the two arguments apart so no coordinate sits on the kink
        const Tensor x = seeded_uniform({4, 6}, 0.5, 1.5, s);
        const Tensor target = seeded_uniform({4, 6}, -1.5, -0.5, s + 2000);
        return grad_check(
            [&](const Tensor& v, Tape* t) { return l1_mean(v, target, t); }, x);
    });

    // Full losses on a small model, evaluated away from L1 ties: draws whose
    // pixel differences come within 5e-4 (50 x eps) of a kink are re-drawn,
    // since the finite-difference oracle is undefined across a tie.
    ModelConfig small;
    small.latent_dim = 6;
    small.base_size = 4;
    small.stages = 1;
    small.channels = 3;
    constexpr double kTieMargin = 5e-4;
    run("loss_d", [small](std::uint64_t s) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            const std::uint64_t seed = s + 7919 * attempt;
            const Generator g(small, seed);
            const Discriminator d(small, seed + 1);
            const Tensor x = seeded_uniform({2, 1, 8, 8}, -0.9, 0.9, seed + 2);
            const Tensor z = seeded_uniform({2, 6}, -1.0, 1.0, seed + 3);
            const LossGraph probe = build_loss_graph(x, z, g, d, 0.3, nullptr);
            const Tensor fake = probe.fake_images;
            if (detail::min_tie_distance(x, d.reconstruct(x)) < kTieMargin ||
                detail::min_tie_distance(fake, d.reconstruct(fake)) < kTieMargin) {
                continue;
            }
            NamedParams all = g.params();
            for (auto& p : d.params()) all.push_back(p);
            return grad_check_params(
                [&](Tape* t) {
                    LossGraph lg = build_loss_graph(x, z, g, d, 0.3, t);
                    return lg.l_d;
                },
                all);
        }
    });
    run("loss_g", [small](std::uint64_t s) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            const std::uint64_t seed = s + 7919 * attempt;
            const Generator g(small, seed);
            const Discriminator d(small, seed + 1);
            const Tensor z = seeded_uniform({2, 6}, -1.0, 1.0, seed + 3);
            const Tensor fake = g.forward(z);
            if (detail::min_tie_distance(fake, d.reconstruct(fake)) < kTieMargin) continue;
            NamedParams all = g.params();
            for (auto& p : d.params()) all.push_back(p);
            return grad_check_params(
                [&](Tape* t) {
                    Tensor f = g.forward(z, t);
                    Tensor rec = d.reconstruct(f, t);
                    return l1_mean(f, rec, t);
                },
                all);
        }
    });
    return checks;
}

// Short boundary-equilibrium run; asserts the control variable stays in
// [0,1] and M >= L_real at every step.
inline std::vector<CheckResult> verify_equilibrium(std::uint64_t seed, int steps = 1000) {
    ModelConfig small;
    small.latent_dim = 8;
    small.base_size = 4;
    small.stages = 1;
    small.channels = 6;

    TrainConfig cfg;
    cfg.seed = seed;
    cfg.batch_size = 8;
    cfg.steps = steps;
    cfg.model = small;

    const Dataset data = make_synth_dataset(16, seed + 77, 20.0, 60.0, small.image_size());
    const TrainOutput out = train(cfg, data);

    bool k_in_range = true, m_dominates = true, m_nonneg = true;
    double worst_k = 0.0;
    for (const MetricsRow& r : out.history) {
        if (r.k < 0.0 || r.k > 1.0) k_in_range = false;
        if (r.m < r.l_real) m_dominates = false;
        if (r.m < 0.0) m_nonneg = false;
        worst_k = std::max(worst_k, std::abs(r.k - 0.5));
    }
    std::vector<CheckResult> checks;
    checks.push_back({"equilibrium.steps_run",
                      static_cast<int>(out.history.size()) == steps,
                      std::to_string(out.history.size()) + " rows"});
    checks.push_back({"equilibrium.k_in_unit_interval", k_in_range,
                      "max |k-0.5| = " + detail::fmt(worst_k)});
    checks.push_back({"equilibrium.m_at_least_l_real", m_dominates, "M >= L_real"});
    checks.push_back({"equilibrium.m_nonnegative", m_nonneg, "M >= 0"});
    return checks;
}

} // namespace frontal
