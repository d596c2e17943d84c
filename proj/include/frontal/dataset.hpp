#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "frontal/ops.hpp"
#include "frontal/pgm.hpp"
#include "frontal/rng.hpp"
#include "frontal/tensor.hpp"

// Procedural "posed face" images for desk-scale training.
//
// A face is a bilaterally symmetric pattern (elliptical head plate, two
// eye wells, a nose highlight, a mouth band) whose geometry and contrast
// jitter per identity seed. Pose is a yaw stand-in: the pattern is sampled
// through a horizontal warp that shifts the face and shears the two
// half-faces by opposite factors,
//
//   u(x, theta) = shift(theta) + x * (1 + shear(theta) * sign(x)).
//
// The warp satisfies u(-x, -theta) = -u(x, theta) exactly in floating
// point, and the pattern is an even function of u built from exactly
// commuting terms, so mirror(synth(seed, theta)) == synth(seed, -theta)
// holds bit for bit and the theta = 0 render is exactly symmetric.

namespace frontal {

struct SynthFaceSpec {
    std::uint64_t seed = 0;
    double pose_deg = 0.0;
    int size = 16;
};

namespace detail {

struct FacePattern {
    double head_ax, head_ay, skin;
    double eye_x, eye_y, eye_rx, eye_ry, eye_depth;
    double nose_y, nose_rx, nose_ry, nose_gain;
    double mouth_y, mouth_rx, mouth_ry, mouth_depth;
};

inline FacePattern face_pattern(std::uint64_t seed) {
    SplitMix64 rng(seed);
    FacePattern p;
    p.head_ax = rng.uniform(0.60, 0.72);
    p.head_ay = rng.uniform(0.78, 0.92);
    p.skin = rng.uniform(1.25, 1.55);
    p.eye_x = rng.uniform(0.25, 0.38);
    p.eye_y = rng.uniform(-0.35, -0.18);
    p.eye_rx = rng.uniform(0.08, 0.13);
    p.eye_ry = rng.uniform(0.06, 0.11);
    p.eye_depth = rng.uniform(0.9, 1.3);
    p.nose_y = rng.uniform(0.02, 0.12);
    p.nose_rx = rng.uniform(0.06, 0.10);
    p.nose_ry = rng.uniform(0.12, 0.20);
    p.nose_gain = rng.uniform(0.25, 0.45);
    p.mouth_y = rng.uniform(0.38, 0.52);
    p.mouth_rx = rng.uniform(0.18, 0.32);
    p.mouth_ry = rng.uniform(0.045, 0.08);
    p.mouth_depth = rng.uniform(0.6, 1.0);
    return p;
}

inline double gauss2(double dx, double rx, double dy, double ry) {
    const double qx = dx / rx;
    const double qy = dy / ry;
    return std::exp(-(qx * qx + qy * qy));
}

// Intensity of the upright pattern at pattern coordinates (u, y); even in u.
inline double pattern_at(const FacePattern& p, double u, double y) {
    const double mu = u / p.head_ax;
    const double my = y / p.head_ay;
    const double m = mu * mu + my * my;
    // soft head edge, ~C1 across m = 1
    double t = (1.08 - m) * 4.0;
    t = std::clamp(t, 0.0, 1.0);
    const double edge = t * t * (3.0 - 2.0 * t);

    const double eyes = gauss2(u - p.eye_x, p.eye_rx, y - p.eye_y, p.eye_ry) +
                        gauss2(u + p.eye_x, p.eye_rx, y - p.eye_y, p.eye_ry);
    const double nose = gauss2(u, p.nose_rx, y - p.nose_y, p.nose_ry);
    const double mouth = gauss2(u, p.mouth_rx, y - p.mouth_y, p.mouth_ry);

    double v = -1.0 + p.skin * edge - p.eye_depth * eyes + p.nose_gain * nose -
               p.mouth_depth * mouth;
    return std::clamp(v, -1.0, 1.0);
}

constexpr double kPoseShear = 0.30; // half-face shear per unit pose (pose/60 deg)
constexpr double kPoseShift = 0.10; // lateral shift per unit pose

} // namespace detail

constexpr double kMaxPoseDeg = 60.0;

// Renders the identity `spec.seed` at yaw `spec.pose_deg`; [1,1,S,S] in [-1,1].
inline Tensor synth_face(const SynthFaceSpec& spec) {
    if (!(std::abs(spec.pose_deg) <= kMaxPoseDeg)) {
        throw ContractError("synth_face: |pose_deg| must be <= 60, got " +
                            std::to_string(spec.pose_deg));
    }
    if (spec.size < 2) throw ContractError("synth_face: size must be >= 2");

    const detail::FacePattern p = detail::face_pattern(spec.seed);
    const int s = spec.size;
    const double half = static_cast<double>(s) / 2.0;
    const double center = static_cast<double>(s - 1) / 2.0;
    const double pose = spec.pose_deg / kMaxPoseDeg;

    Tensor img = Tensor::zeros({1, 1, s, s});
    auto v = img.values_mut();
    for (int r = 0; r < s; ++r) {
        const double y = (static_cast<double>(r) - center) / half;
        for (int c = 0; c < s; ++c) {
            const double x = (static_cast<double>(c) - center) / half;
            const double sgn = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
            const double u = detail::kPoseShift * pose +
                             x * (1.0 + detail::kPoseShear * pose * sgn);
            v[static_cast<std::size_t>(r) * s + c] = detail::pattern_at(p, u, y);
        }
    }
    return img;
}

// Mean |I - mirror(I)| over all pixels; 0 iff the image is left-right
// symmetric.
inline double asymmetry_score(const Tensor& image) {
    const Tensor m = mirror(image);
    const auto a = image.values();
    const auto b = m.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

// Batch with the split layout: first half originals, second half their
// mirrors in the same order (so item i + N/2 == mirror(item i) exactly),
// mirrored poses negated.
struct ImageBatch {
    Tensor images; // [N,1,S,S]
    std::vector<double> poses;
    bool mirror_layout = false;
};

inline ImageBatch make_mirror_batch(const std::vector<Tensor>& images,
                                    const std::vector<double>& poses) {
    if (images.empty()) throw ContractError("make_mirror_batch: no images");
    if (poses.size() != images.size()) {
        throw ContractError("make_mirror_batch: images and poses differ in length");
    }
    const Shape& s0 = images[0].shape();
    if (s0.size() != 4 || s0[0] != 1 || s0[1] != 1) {
        throw ShapeError("make_mirror_batch: items must be [1,1,S,S], got " + shape_str(s0));
    }
    const std::int64_t half = static_cast<std::int64_t>(images.size());
    const std::int64_t hw = s0[2] * s0[3];

    ImageBatch batch;
    batch.images = Tensor::zeros({2 * half, 1, s0[2], s0[3]});
    batch.poses.resize(static_cast<std::size_t>(2 * half));
    batch.mirror_layout = true;
    auto out = batch.images.values_mut();
    for (std::int64_t i = 0; i < half; ++i) {
        if (images[static_cast<std::size_t>(i)].shape() != s0) {
            throw ShapeError("make_mirror_batch: item shapes differ");
        }
        const auto src = images[static_cast<std::size_t>(i)].values();
        const Tensor mir = mirror(images[static_cast<std::size_t>(i)]);
        const auto msrc = mir.values();
        std::copy(src.begin(), src.end(), out.begin() + i * hw);
        std::copy(msrc.begin(), msrc.end(), out.begin() + (half + i) * hw);
        batch.poses[static_cast<std::size_t>(i)] = poses[static_cast<std::size_t>(i)];
        batch.poses[static_cast<std::size_t>(half + i)] = -poses[static_cast<std::size_t>(i)];
    }
    return batch;
}

// In-memory dataset: one rendered image per entry plus its provenance.
struct Dataset {
    std::vector<Tensor> images;
    std::vector<std::uint64_t> seeds;
    std::vector<double> poses;
    int image_size = 0;

    std::size_t size() const { return images.size(); }
};

// `count` identities with per-identity pattern seed and pose drawn from the
// dataset seed's stream; poses uniform in [pose_min, pose_max].
inline Dataset make_synth_dataset(int count, std::uint64_t seed, double pose_min,
                                  double pose_max, int size) {
    if (count < 1) throw ContractError("make_synth_dataset: count must be >= 1");
    if (!(pose_min <= pose_max)) throw ContractError("make_synth_dataset: pose_min > pose_max");
    if (std::abs(pose_min) > kMaxPoseDeg || std::abs(pose_max) > kMaxPoseDeg) {
        throw ContractError("make_synth_dataset: poses must lie in [-60, 60]");
    }
    Dataset ds;
    ds.image_size = size;
    SplitMix64 rng(seed);
    for (int i = 0; i < count; ++i) {
        SynthFaceSpec spec;
        spec.seed = rng.next_u64();
        spec.pose_deg = pose_min < pose_max ? rng.uniform(pose_min, pose_max) : pose_min;
        spec.size = size;
        ds.images.push_back(synth_face(spec));
        ds.seeds.push_back(spec.seed);
        ds.poses.push_back(spec.pose_deg);
    }
    return ds;
}

// Draws batch_size/2 dataset items and lays them out as a mirror batch.
inline ImageBatch sample_mirror_batch(const Dataset& ds, int batch_size, SplitMix64& rng) {
    if (batch_size < 2 || batch_size % 2 != 0) {
        throw ContractError("sample_mirror_batch: batch size must be even and >= 2");
    }
    if (ds.images.empty()) throw ContractError("sample_mirror_batch: empty dataset");
    std::vector<Tensor> picks;
    std::vector<double> poses;
    for (int i = 0; i < batch_size / 2; ++i) {
        const std::size_t idx = static_cast<std::size_t>(rng.next_below(ds.images.size()));
        picks.push_back(ds.images[idx]);
        poses.push_back(ds.poses[idx]);
    }
    return make_mirror_batch(picks, poses);
}

// Manifest CSV: header `path,seed,pose_deg`, one row per image, paths
// relative to the manifest's directory.
struct ManifestEntry {
    std::string path;
    std::uint64_t seed = 0;
    double pose_deg = 0.0;
};

inline void write_manifest(const std::filesystem::path& manifest_path,
                           const std::vector<ManifestEntry>& entries) {
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw ContractError("write_manifest: cannot open " + manifest_path.string());
    out << "path,seed,pose_deg\n";
    char buf[64];
    for (const auto& e : entries) {
        std::snprintf(buf, sizeof buf, "%.17g", e.pose_deg);
        out << e.path << "," << e.seed << "," << buf << "\n";
    }
    if (!out) throw ContractError("write_manifest: short write to " + manifest_path.string());
}

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw ContractError("read_manifest: cannot open " + manifest_path.string());
    std::string line;
    if (!std::getline(in, line) || line != "path,seed,pose_deg") {
        throw ParseError(ParseError::Kind::BadHeader, 0,
                         "manifest: expected header 'path,seed,pose_deg'");
    }
    std::vector<ManifestEntry> entries;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw ParseError(ParseError::Kind::BadHeader, lineno,
                             "manifest: malformed row '" + line + "'");
        }
        ManifestEntry e;
        e.path = line.substr(0, c1);
        try {
            e.seed = std::stoull(line.substr(c1 + 1, c2 - c1 - 1));
            e.pose_deg = std::stod(line.substr(c2 + 1));
        } catch (const std::exception&) {
            throw ParseError(ParseError::Kind::BadHeader, lineno,
                             "manifest: malformed row '" + line + "'");
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

// Loads every manifest row's PGM, relative paths resolved against the
// manifest's directory.
inline Dataset load_dataset(const std::filesystem::path& manifest_path) {
    const auto entries = read_manifest(manifest_path);
    if (entries.empty()) throw ContractError("load_dataset: manifest lists no images");
    const auto dir = manifest_path.parent_path();
    Dataset ds;
    for (const auto& e : entries) {
        std::filesystem::path p(e.path);
        if (p.is_relative()) p = dir / p;
        Tensor img = load_pgm(p);
        if (ds.images.empty()) {
            ds.image_size = static_cast<int>(img.shape()[2]);
        }
        if (img.shape()[2] != ds.image_size || img.shape()[3] != ds.image_size) {
            throw ContractError("load_dataset: image sizes differ across the manifest");
        }
        ds.images.push_back(std::move(img));
        ds.seeds.push_back(e.seed);
        ds.poses.push_back(e.pose_deg);
    }
    return ds;
}

} // namespace frontal
