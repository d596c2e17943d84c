// frontal: boundary-equilibrium GAN face frontalization toolkit.
//
// Subcommands: synth (procedural dataset), train (BEGAN run), frontalize
// (inversion + Slerp strip), verify (invariant suites).
//
// Exit codes: 0 success, 1 verification failure, 2 usage or I/O error,
// 3 numeric abort, 4 checkpoint/config incompatibility.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "frontal/checkpoint.hpp"
#include "frontal/config.hpp"
#include "frontal/dataset.hpp"
#include "frontal/pgm.hpp"
#include "frontal/pipeline.hpp"
#include "frontal/training.hpp"
#include "frontal/verify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitCompat = 4;

struct SynthArgs {
    int count = 10;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string sizes = "16";
    std::string angles = "20:60";
    std::string out_dir;
};

struct TrainArgs {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> sets;
};

struct FrontalizeArgs {
    std::string checkpoint;
    std::string input;
    std::string synthetic;
    int n_points = 10;
    bool n_set = false;
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir;
};

struct VerifyArgs {
    std::string suite = "all";
    std::uint64_t seed = 0;
    int trials = 500;
    std::string mutate;
};

std::uint64_t env_seed_or(std::uint64_t fallback) {
    const char* env = std::getenv("FF_SEED");
    if (env == nullptr || *env == '\0') return fallback;
    frontal::RunConfig tmp;
    frontal::apply_env_seed(tmp, env);
    return tmp.seed;
}

// defaults -> FF_SEED -> config file -> --set overrides
frontal::RunConfig resolve_config(const std::string& config_path,
                                  const std::vector<std::string>& sets,
                                  std::set<std::string>* seen_keys) {
    frontal::RunConfig cfg;
    frontal::apply_env_seed(cfg, std::getenv("FF_SEED"));
    if (!config_path.empty()) {
        if (!fs::exists(config_path)) {
            throw frontal::ContractError("config file not found: " + config_path);
        }
        frontal::apply_config_file(cfg, config_path, seen_keys);
    }
    for (const std::string& kv : sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            throw frontal::ContractError("--set expects key=value, got '" + kv + "'");
        }
        const std::string key = kv.substr(0, eq);
        frontal::apply_config_value(cfg, key, kv.substr(eq + 1));
        if (seen_keys) seen_keys->insert(key);
    }
    cfg.validate();
    return cfg;
}

std::vector<int> parse_sizes(const std::string& spec) {
    std::vector<int> sizes;
    std::size_t at = 0;
    while (at <= spec.size()) {
        const std::size_t comma = spec.find(',', at);
        const std::string tok = spec.substr(at, comma == std::string::npos ? spec.size() - at
                                                                           : comma - at);
        if (tok.empty()) throw frontal::ContractError("--sizes: empty entry in '" + spec + "'");
        const int v = std::stoi(tok);
        if (v < 4) throw frontal::ContractError("--sizes: sizes must be >= 4");
        sizes.push_back(v);
        if (comma == std::string::npos) break;
        at = comma + 1;
    }
    if (sizes.empty()) throw frontal::ContractError("--sizes: no sizes given");
    return sizes;
}

std::pair<double, double> parse_angles(const std::string& spec) {
    const std::size_t colon = spec.find(':');
    if (colon == std::string::npos) {
        throw frontal::ContractError("--angles expects min:max, got '" + spec + "'");
    }
    const double lo = std::stod(spec.substr(0, colon));
    const double hi = std::stod(spec.substr(colon + 1));
    if (!(lo <= hi)) throw frontal::ContractError("--angles: min must be <= max");
    return {lo, hi};
}

void require_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw frontal::ContractError("cannot create output directory " + dir.string());
    }
}

int run_synth(const SynthArgs& args) {
    const std::uint64_t seed = args.seed_set ? args.seed : env_seed_or(0);
    const auto sizes = parse_sizes(args.sizes);
    const auto [pose_min, pose_max] = parse_angles(args.angles);
    if (args.count < 1) throw frontal::ContractError("--count must be >= 1");

    const fs::path out_dir(args.out_dir);
    require_out_dir(out_dir);

    std::vector<frontal::ManifestEntry> manifest;
    for (const int size : sizes) {
        const frontal::Dataset ds =
            frontal::make_synth_dataset(args.count, seed, pose_min, pose_max, size);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            char name[64];
            std::snprintf(name, sizeof name, "face_s%d_%03zu.pgm", size, i);
            frontal::save_pgm(ds.images[i], out_dir / name);
            manifest.push_back({name, ds.seeds[i], ds.poses[i]});
        }
    }
    frontal::write_manifest(out_dir / "manifest.csv", manifest);
    std::printf("wrote %zu images + manifest.csv to %s\n", manifest.size(),
                out_dir.string().c_str());
    return kExitOk;
}

int run_train(const TrainArgs& args) {
    if (args.config_path.empty()) throw frontal::ContractError("train: --config is required");
    const frontal::RunConfig cfg = resolve_config(args.config_path, args.sets, nullptr);

    const fs::path out_dir(args.out_dir);
    require_out_dir(out_dir);

    frontal::TrainConfig tc = cfg.train_config();
    tc.checkpoint_path = out_dir / "checkpoint.bin";
    tc.metrics_path = out_dir / "metrics.csv";

    frontal::Dataset data;
    if (!cfg.data_manifest.empty()) {
        data = frontal::load_dataset(cfg.data_manifest);
    } else {
        // dataset stream = split(5) of the run seed (streams 1-4 drive the run)
        data = frontal::make_synth_dataset(cfg.synth_identities,
                                           frontal::SplitMix64(cfg.seed).split(5).state(),
                                           cfg.synth_pose_min, cfg.synth_pose_max,
                                           tc.model.image_size());
    }

    const frontal::TrainOutput out = frontal::train(tc, data);
    const double final_m = out.history.empty() ? 0.0 : out.history.back().m;
    std::printf("trained %zu steps, final M = %.6f, checkpoint %s\n", out.history.size(),
                final_m, tc.checkpoint_path.string().c_str());
    return kExitOk;
}

int run_frontalize(const FrontalizeArgs& args) {
    if (args.checkpoint.empty()) {
        throw frontal::ContractError("frontalize: --checkpoint is required");
    }
    if (args.input.empty() == args.synthetic.empty()) {
        throw frontal::ContractError(
            "frontalize: exactly one of --input or --synthetic is required");
    }
    std::set<std::string> seen;
    frontal::RunConfig cfg = resolve_config(args.config_path, args.sets, &seen);

    const frontal::Checkpoint ck = frontal::load_checkpoint(args.checkpoint);
    // Model-shape keys are validated only when the user pinned them.
    for (const char* key : {"latent_dim", "base_size", "stages", "channels"}) {
        if (seen.count(key) && !(cfg.model_config() == ck.config)) {
            throw frontal::CompatError("frontalize: checkpoint model (latent_dim=" +
                                       std::to_string(ck.config.latent_dim) +
                                       ", base_size=" + std::to_string(ck.config.base_size) +
                                       ", stages=" + std::to_string(ck.config.stages) +
                                       ", channels=" + std::to_string(ck.config.channels) +
                                       ") differs from the configured model");
        }
    }

    const int size = ck.config.image_size();
    frontal::Tensor target;
    std::uint64_t synth_seed = 0;
    bool is_synth = false;
    if (!args.synthetic.empty()) {
        const std::size_t comma = args.synthetic.find(',');
        if (comma == std::string::npos) {
            throw frontal::ContractError("--synthetic expects seed,angle");
        }
        frontal::SynthFaceSpec spec;
        spec.seed = std::stoull(args.synthetic.substr(0, comma));
        spec.pose_deg = std::stod(args.synthetic.substr(comma + 1));
        spec.size = size;
        target = frontal::synth_face(spec);
        synth_seed = spec.seed;
        is_synth = true;
    } else {
        target = frontal::load_pgm(args.input);
        if (target.shape()[2] != size || target.shape()[3] != size) {
            throw frontal::CompatError("frontalize: input image is " +
                                       std::to_string(target.shape()[3]) + "x" +
                                       std::to_string(target.shape()[2]) +
                                       " but the checkpoint expects " + std::to_string(size) +
                                       "x" + std::to_string(size));
        }
    }

    frontal::FrontalizeOptions opts;
    opts.n_points = args.n_set ? args.n_points : cfg.interp_points;
    opts.inversion = cfg.inversion_config();

    const frontal::FrontalizeResult res =
        frontal::frontalize(ck.generator, ck.discriminator, target, opts);

    const fs::path dir(args.out_dir);
    require_out_dir(dir);

    frontal::Tensor frontal_truth;
    if (is_synth) {
        frontal::SynthFaceSpec spec;
        spec.seed = synth_seed;
        spec.pose_deg = 0.0;
        spec.size = size;
        frontal_truth = frontal::synth_face(spec);
    }

    std::ofstream report(dir / "report.csv", std::ios::trunc);
    if (!report) throw frontal::ContractError("frontalize: cannot write report.csv");
    report << "name,index,t,asymmetry,l1_frontal,note\n";
    const auto row = [&](const std::string& name, std::size_t idx, const std::string& note) {
        const frontal::Tensor& img = res.strip[idx];
        char buf[160];
        if (is_synth) {
            std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%.17g,%.17g,%s\n", name.c_str(), idx,
                          res.ts[idx], frontal::asymmetry_score(img),
                          frontal::l1_mean(img, frontal_truth).item(), note.c_str());
        } else {
            std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%.17g,,%s\n", name.c_str(), idx,
                          res.ts[idx], frontal::asymmetry_score(img), note.c_str());
        }
        report << buf;
    };

    for (std::size_t i = 0; i < res.strip.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "strip_%02zu", i);
        frontal::save_pgm(res.strip[i], dir / (std::string(name) + ".pgm"));
        row(name, i, "");
    }
    frontal::save_pgm(res.strip[res.median_a], dir / "median_a.pgm");
    frontal::save_pgm(res.strip[res.median_b], dir / "median_b.pgm");
    const std::string median_note = res.median_degenerate ? "degenerate_median" : "";
    row("median_a", res.median_a, median_note);
    row("median_b", res.median_b, median_note);
    report.flush();
    if (!report) throw frontal::ContractError("frontalize: short write to report.csv");

    std::printf("wrote %zu strip images, medians %zu/%zu, report.csv to %s\n",
                res.strip.size(), res.median_a, res.median_b, dir.string().c_str());
    return kExitOk;
}

int run_verify(const VerifyArgs& args) {
    if (args.suite != "slerp" && args.suite != "grad" && args.suite != "equilibrium" &&
        args.suite != "all") {
        throw frontal::ContractError("--suite must be slerp, grad, equilibrium or all");
    }
    if (!args.mutate.empty() && args.mutate != "slerp") {
        throw frontal::ContractError("--mutate supports only 'slerp'");
    }

    std::vector<frontal::CheckResult> checks;
    if (args.suite == "slerp" || args.suite == "all") {
        frontal::SlerpFn fn;
        if (args.mutate == "slerp") {
            // deliberately wrong interpolant, used to prove the suite fails
            fn = [](const frontal::Embedding& a, const frontal::Embedding& b, double t) {
                frontal::Embedding out = frontal::slerp(a, b, t);
                out[0] += 1e-3 * t * (1.0 - t);
                return out;
            };
        }
        for (auto& c : frontal::verify_slerp(args.seed, args.trials, fn)) {
            checks.push_back(std::move(c));
        }
    }
    if (args.suite == "grad" || args.suite == "all") {
        std::vector<frontal::LayerGradReport> report;
        for (auto& c : frontal::verify_grad(args.seed, 10, 1e-5, &report)) {
            checks.push_back(std::move(c));
        }
    }
    if (args.suite == "equilibrium" || args.suite == "all") {
        for (auto& c : frontal::verify_equilibrium(args.seed, 1000)) {
            checks.push_back(std::move(c));
        }
    }

    bool all_pass = true;
    for (const auto& c : checks) {
        std::printf("%s %s (%s)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
        all_pass = all_pass && c.pass;
    }
    std::printf("%s: %zu checks\n", all_pass ? "OK" : "FAILED", checks.size());
    return all_pass ? kExitOk : kExitVerifyFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Face frontalization with a boundary-equilibrium GAN and spherical latent "
                 "interpolation"};
    app.name("frontal");
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic posed-face dataset");
    synth->add_option("--count", synth_args.count, "Images per size")->capture_default_str();
    synth->add_option("--seed", synth_args.seed, "Dataset seed (default 0 or FF_SEED)")
        ->each([&](const std::string&) { synth_args.seed_set = true; });
    synth->add_option("--sizes", synth_args.sizes, "Comma-separated image sizes")
        ->capture_default_str();
    synth->add_option("--angles", synth_args.angles, "Pose range min:max in degrees")
        ->capture_default_str();
    synth->add_option("--out-dir", synth_args.out_dir, "Output directory")->required();

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train the GAN on a dataset");
    train_cmd->add_option("--config", train_args.config_path, "key = value config file")
        ->required();
    train_cmd->add_option("--out", train_args.out_dir, "Output directory")->required();
    train_cmd->add_option("--set", train_args.sets, "Override a config key (key=value)");

    FrontalizeArgs fr_args;
    auto* fr = app.add_subcommand("frontalize",
                                  "Frontalize one image via inversion and Slerp");
    fr->add_option("--checkpoint", fr_args.checkpoint, "Trained checkpoint file")->required();
    fr->add_option("--input", fr_args.input, "Input PGM image");
    fr->add_option("--synthetic", fr_args.synthetic, "Synthetic input as seed,angle");
    fr->add_option("--n", fr_args.n_points, "Strip length (interpolation points)")
        ->capture_default_str()
        ->each([&](const std::string&) { fr_args.n_set = true; });
    fr->add_option("--config", fr_args.config_path, "key = value config file");
    fr->add_option("--set", fr_args.sets, "Override a config key (key=value)");
    fr->add_option("--out-dir", fr_args.out_dir, "Output directory")->required();

    VerifyArgs verify_args;
    auto* verify = app.add_subcommand("verify", "Run the built-in verification suites");
    verify->add_option("--suite", verify_args.suite, "slerp, grad, equilibrium or all")
        ->capture_default_str();
    verify->add_option("--seed", verify_args.seed, "Suite seed")->capture_default_str();
    verify->add_option("--trials", verify_args.trials, "Randomized trials for the slerp suite")
        ->capture_default_str();
    verify->add_option("--mutate", verify_args.mutate,
                       "Testing hook: perturb a component to prove the suite catches it");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (synth->parsed()) return run_synth(synth_args);
        if (train_cmd->parsed()) return run_train(train_args);
        if (fr->parsed()) return run_frontalize(fr_args);
        if (verify->parsed()) return run_verify(verify_args);
        return kExitUsage;
    } catch (const frontal::CompatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitCompat;
    } catch (const frontal::NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
}
