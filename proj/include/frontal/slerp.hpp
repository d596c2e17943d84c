#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "frontal/errors.hpp"

// Spherical linear interpolation between latent embeddings and the
// scheduling arithmetic for interpolation strips.
//
//   slerp(z0,z1;t) = sin((1-t)*Omega)/sin(Omega) * z0 + sin(t*Omega)/sin(Omega) * z1
//
// Omega is taken from the unit-normalized copies of z0 and z1 (learned
// embeddings are not unit length, and the angle is only well defined on
// the sphere); the combination itself uses the raw vectors.

namespace frontal {

using Embedding = std::vector<double>;

namespace detail {

inline double norm(const Embedding& z) {
    double s = 0.0;
    for (double v : z) s += v * v;
    return std::sqrt(s);
}

inline double dot(const Embedding& a, const Embedding& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace detail

inline Embedding lerp(const Embedding& z0, const Embedding& z1, double t) {
    if (z0.size() != z1.size()) throw ShapeError("lerp: dimension mismatch");
    Embedding out(z0.size());
    for (std::size_t i = 0; i < z0.size(); ++i) out[i] = (1.0 - t) * z0[i] + t * z1[i];
    return out;
}

inline Embedding slerp(const Embedding& z0, const Embedding& z1, double t) {
    if (z0.size() != z1.size()) throw ShapeError("slerp: dimension mismatch");
    // Endpoints are exact by contract, not by arithmetic accident.
    if (t == 0.0) return z0;
    if (t == 1.0) return z1;

    const double n0 = detail::norm(z0);
    const double n1 = detail::norm(z1);
    if (n0 == 0.0 || n1 == 0.0) throw DomainError("slerp: zero-length input vector");

    double cos_omega = detail::dot(z0, z1) / (n0 * n1);
    cos_omega = std::clamp(cos_omega, -1.0, 1.0);
    const double omega = std::acos(cos_omega);

    constexpr double kPi = 3.14159265358979323846;
    if (std::abs(omega - kPi) < 1e-6) {
        throw DomainError("slerp: antipodal inputs, interpolation plane undefined");
    }
    const double sin_omega = std::sin(omega);
    if (sin_omega < 1e-6) return lerp(z0, z1, t); // Omega -> 0 limit

    const double a = std::sin((1.0 - t) * omega) / sin_omega;
    const double b = std::sin(t * omega) / sin_omega;
    Embedding out(z0.size());
    for (std::size_t i = 0; i < z0.size(); ++i) out[i] = a * z0[i] + b * z1[i];
    return out;
}

// Number of interpolation points: (t_ceil - t_floor) / delta, which must be
// an integer.
inline int schedule_count(double t_ceil, double t_floor, double delta) {
    if (!(t_floor < t_ceil)) throw ContractError("schedule_count: requires t_floor < t_ceil");
    if (!(delta > 0.0) || delta > t_ceil - t_floor) {
        throw ContractError("schedule_count: delta must lie in (0, t_ceil - t_floor]");
    }
    const double ratio = (t_ceil - t_floor) / delta;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio))) {
        throw ContractError("schedule_count: (t_ceil - t_floor)/delta is not integral");
    }
    return static_cast<int>(rounded);
}

// Signed per-step angular deviation in degrees across the strip. Drives the
// labeling of strip images, not the interpolation itself.
inline double angle_step(double angle_left_deg, double angle_right_deg, int n_t) {
    if (n_t < 1) throw ContractError("angle_step: n_t must be >= 1");
    return (angle_left_deg - angle_right_deg) / static_cast<double>(n_t);
}

// Validated bundle of the scheduling quantities.
struct InterpolationSchedule {
    double t_ceil = 1.0;
    double t_floor = 0.0;
    double delta = 0.1;
    int n_t = 10;
    double angle_left_deg = 0.0;
    double angle_right_deg = 0.0;
    double step_deg = 0.0;

    static InterpolationSchedule make(double t_ceil, double t_floor, double delta,
                                      double angle_left_deg, double angle_right_deg) {
        InterpolationSchedule s;
        s.t_ceil = t_ceil;
        s.t_floor = t_floor;
        s.delta = delta;
        s.n_t = schedule_count(t_ceil, t_floor, delta);
        s.angle_left_deg = angle_left_deg;
        s.angle_right_deg = angle_right_deg;
        s.step_deg = angle_step(angle_left_deg, angle_right_deg, s.n_t);
        return s;
    }
};

// n_t embeddings at t_i = i/(n_t - 1), endpoints included.
inline std::vector<Embedding> interpolation_path(const Embedding& z0, const Embedding& z1,
                                                 int n_t) {
    if (n_t < 2) throw ContractError("interpolation_path: n_t must be >= 2");
    std::vector<Embedding> path;
    path.reserve(static_cast<std::size_t>(n_t));
    for (int i = 0; i < n_t; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n_t - 1);
        path.push_back(slerp(z0, z1, t));
    }
    return path;
}

// The two center elements of the strip. For an odd-length path both refer
// to the single middle element and `degenerate` is set.
struct MedianPair {
    Embedding first;
    Embedding second;
    std::size_t first_index = 0;
    std::size_t second_index = 0;
    bool degenerate = false;
};

inline MedianPair median_pair(const std::vector<Embedding>& path) {
    if (path.size() < 2) throw ContractError("median_pair: path must have at least 2 elements");
    MedianPair m;
    if (path.size() % 2 == 0) {
        m.first_index = path.size() / 2 - 1;
        m.second_index = path.size() / 2;
    } else {
        m.first_index = path.size() / 2;
        m.second_index = m.first_index;
        m.degenerate = true;
    }
    m.first = path[m.first_index];
    m.second = path[m.second_index];
    return m;
}

} // namespace frontal
