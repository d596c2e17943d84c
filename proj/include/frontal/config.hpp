#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "frontal/inversion.hpp"
#include "frontal/training.hpp"

// Run configuration: plain-text `key = value` lines with '#' comments.
// Flags override the file; the FF_SEED environment variable overrides the
// built-in default seed but loses to both. Unknown keys are rejected.

namespace frontal {

struct RunConfig {
    // model
    int latent_dim = 16;
    int base_size = 4;
    int stages = 2;
    int channels = 8;
    // training
    std::uint64_t seed = 0;
    int batch_size = 16;
    double gamma = 0.5;
    double lambda_k = 0.001;
    double learning_rate = 0.001;
    int steps = 2000;
    int checkpoint_interval = 0;
    // dataset: a manifest wins over procedural synthesis
    std::string data_manifest;
    int synth_identities = 64;
    double synth_pose_min = 20.0;
    double synth_pose_max = 60.0;
    // inversion
    int inv_steps = 200;
    double inv_lr = 0.05;
    std::string inv_init = "uniform"; // uniform | encoder
    // interpolation
    int interp_points = 10;

    ModelConfig model_config() const {
        ModelConfig m;
        m.latent_dim = latent_dim;
        m.base_size = base_size;
        m.stages = stages;
        m.channels = channels;
        return m;
    }

    TrainConfig train_config() const {
        TrainConfig t;
        t.seed = seed;
        t.batch_size = batch_size;
        t.gamma = gamma;
        t.lambda_k = lambda_k;
        t.learning_rate = learning_rate;
        t.steps = steps;
        t.checkpoint_interval = checkpoint_interval;
        t.model = model_config();
        return t;
    }

    InversionConfig inversion_config() const {
        InversionConfig c;
        c.steps = inv_steps;
        c.lr = inv_lr;
        c.init = inv_init == "encoder" ? InversionInit::Encoder : InversionInit::UniformRandom;
        c.seed = seed;
        return c;
    }

    void validate() const {
        train_config().validate();
        if (inv_steps < 1) throw ContractError("config: inv_steps must be >= 1");
        if (!(inv_lr > 0.0)) throw ContractError("config: inv_lr must be positive");
        if (inv_init != "uniform" && inv_init != "encoder") {
            throw ContractError("config: inv_init must be 'uniform' or 'encoder'");
        }
        if (interp_points < 2) throw ContractError("config: interp_points must be >= 2");
        if (synth_identities < 1) throw ContractError("config: synth_identities must be >= 1");
        if (!(synth_pose_min <= synth_pose_max)) {
            throw ContractError("config: synth_pose_min must be <= synth_pose_max");
        }
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    const char* first = value.data();
    const char* last = value.data() + value.size();
    std::from_chars_result r{};
    if constexpr (std::is_floating_point_v<T>) {
        r = std::from_chars(first, last, out);
    } else {
        r = std::from_chars(first, last, out, 10);
    }
    if (r.ec != std::errc{} || r.ptr != last) {
        throw ContractError("config: key '" + std::string(key) + "' has invalid value '" +
                            std::string(value) + "'");
    }
    return out;
}

} // namespace detail

// Applies one key=value setting. Throws ContractError for unknown keys or
// unparsable values.
inline void apply_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
    using detail::parse_number;
    if (key == "latent_dim") cfg.latent_dim = parse_number<int>(key, value);
    else if (key == "base_size") cfg.base_size = parse_number<int>(key, value);
    else if (key == "stages") cfg.stages = parse_number<int>(key, value);
    else if (key == "channels") cfg.channels = parse_number<int>(key, value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "batch_size") cfg.batch_size = parse_number<int>(key, value);
    else if (key == "gamma") cfg.gamma = parse_number<double>(key, value);
    else if (key == "lambda_k") cfg.lambda_k = parse_number<double>(key, value);
    else if (key == "learning_rate") cfg.learning_rate = parse_number<double>(key, value);
    else if (key == "steps") cfg.steps = parse_number<int>(key, value);
    else if (key == "checkpoint_interval") cfg.checkpoint_interval = parse_number<int>(key, value);
    else if (key == "data_manifest") cfg.data_manifest = std::string(value);
    else if (key == "synth_identities") cfg.synth_identities = parse_number<int>(key, value);
    else if (key == "synth_pose_min") cfg.synth_pose_min = parse_number<double>(key, value);
    else if (key == "synth_pose_max") cfg.synth_pose_max = parse_number<double>(key, value);
    else if (key == "inv_steps") cfg.inv_steps = parse_number<int>(key, value);
    else if (key == "inv_lr") cfg.inv_lr = parse_number<double>(key, value);
    else if (key == "inv_init") cfg.inv_init = std::string(value);
    else if (key == "interp_points") cfg.interp_points = parse_number<int>(key, value);
    else throw ContractError("config: unknown key '" + std::string(key) + "'");
}

// Parses `key = value` lines into cfg. Blank lines and '#' comments are
// skipped; inline comments are not supported (values may contain '#').
// When `seen_keys` is given, every key that appeared is recorded there.
inline void apply_config_file(RunConfig& cfg, const std::filesystem::path& path,
                              std::set<std::string>* seen_keys = nullptr) {
    std::ifstream in(path);
    if (!in) throw ContractError("config: cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view sv = detail::trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        const std::size_t eq = sv.find('=');
        if (eq == std::string_view::npos) {
            throw ContractError("config: line " + std::to_string(lineno) +
                                " is not a key = value pair: '" + std::string(sv) + "'");
        }
        const std::string_view key = detail::trim(sv.substr(0, eq));
        const std::string_view value = detail::trim(sv.substr(eq + 1));
        if (key.empty()) {
            throw ContractError("config: line " + std::to_string(lineno) + " has an empty key");
        }
        apply_config_value(cfg, key, value);
        if (seen_keys) seen_keys->insert(std::string(key));
    }
}

// Seed resolution when no flag and no config line set one: FF_SEED, if
// present, replaces the built-in default.
inline void apply_env_seed(RunConfig& cfg, const char* ff_seed) {
    if (ff_seed == nullptr || *ff_seed == '\0') return;
    cfg.seed = detail::parse_number<std::uint64_t>("FF_SEED", ff_seed);
}

} // namespace frontal
