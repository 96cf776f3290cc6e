// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tfd/analyze.hpp"
#include "tfd/checkpoint.hpp"
#include "tfd/config.hpp"
#include "tfd/degrade.hpp"
#include "tfd/error.hpp"
#include "tfd/gradcheck.hpp"
#include "tfd/image_io.hpp"
#include "tfd/metrics.hpp"
#include "tfd/ops.hpp"
#include "tfd/rng.hpp"
#include "tfd/synth.hpp"
#include "tfd/train.hpp"

namespace fs = std::filesystem;
using namespace tfd;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kData = 3;
constexpr int kNumeric = 4;

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

struct Dataset {
    std::vector<Image8> images;
    std::vector<std::string> names;
};

Dataset load_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    Dataset d;
    for (const auto& p : list_images(dir)) {
        d.images.push_back(load_ppm(p));
        d.names.push_back(p.filename().string());
    }
    if (d.images.empty()) throw DataError("no .ppm/.pgm images in " + dir.string());
    return d;
}

TfdModel load_model(const ExperimentConfig& cfg, const fs::path& checkpoint) {
    if (!fs::exists(checkpoint)) throw ConfigError("checkpoint not found: " + checkpoint.string());
    TfdModel model(cfg.arch, cfg.train.seed);
    restore(model.params(), load_checkpoint(checkpoint));
    return model;
}

// Every option value that steers a run is explicit; nothing reads the clock.

int cmd_synth(const fs::path& out, int count, int size, int channels, std::uint64_t seed) {
    if (count < 1 || size < 1 || (channels != 1 && channels != 3))
        throw ConfigError("synth: need count >= 1, size >= 1 and 1 or 3 channels");
    fs::create_directories(out);
    for (int i = 0; i < count; ++i) {
        std::ostringstream name;
        name << "img_" << std::setw(4) << std::setfill('0') << i << (channels == 1 ? ".pgm" : ".ppm");
        save_ppm(synth_image(size, size, channels, derive_seed(seed, static_cast<std::uint64_t>(i))), out / name.str());
    }
    return kOk;
}

int cmd_degrade(const std::string& preset, std::uint64_t seed, const fs::path& in, const fs::path& out, int scale) {
    if (!is_preset_name(preset)) {
        std::string valid;
        for (const auto& p : preset_names()) valid += (valid.empty() ? "" : ", ") + p;
        throw ConfigError("unknown preset '" + preset + "' (valid: " + valid + ")");
    }
    DegradationConfig cfg = DegradationConfig::preset(preset);
    cfg.scale = scale;
    const Dataset d = load_dir(in);
    fs::create_directories(out);
    std::ofstream manifest = open_out(out / "manifest.csv");
    manifest << "file,preset,seed,label\n";
    for (std::size_t i = 0; i < d.images.size(); ++i) {
        const Image8& img = d.images[i];
        const int w = img.width - img.width % scale;
        const int h = img.height - img.height % scale;
        Rng rng(derive_seed(seed, i));
        DegradeResult r = apply(cfg, crop(img, 0, 0, w, h), rng);
        save_ppm(r.lr, out / d.names[i]);
        manifest << d.names[i] << ',' << preset << ',' << seed << ',' << r.label << '\n';
    }
    return kOk;
}

int cmd_train(const fs::path& config_path, std::size_t sim_every) {
    const ExperimentConfig cfg = load_experiment(config_path);
    const Dataset d = load_dir(cfg.data.hr_dir);
    const auto presets = cfg.train_presets();
    PatchSpec spec{cfg.data.patch, cfg.data.stride, cfg.data.limit};
    const PatchSet set = build_patch_set(d.images, spec, presets, cfg.arch.scale, cfg.train.seed);
    TfdModel model(cfg.arch, cfg.train.seed);

    const fs::path out(cfg.out_dir);
    fs::create_directories(out);
    std::vector<SimilarityRow> trace;
    StepHook hook;
    if (sim_every > 0) {
        const std::vector<Image8> probe(d.images.begin(), d.images.begin() + std::min<std::ptrdiff_t>(8, static_cast<std::ptrdiff_t>(d.images.size())));
        const auto all = cfg.eval_presets();
        auto record = [&, probe, all](std::size_t step, TfdModel& m) {
            for (auto& r : measure_similarity(m, probe, all, cfg.eval.seed, step)) trace.push_back(r);
        };
        record(0, model);
        hook = [&, record](std::size_t step, TfdModel& m) {
            if (step % sim_every == 0) record(step, m);
        };
    }
    const TrainResult res = run_training(set, model, cfg.train, hook);

    save_checkpoint(model.params(), out / "model.tfd1");
    std::ofstream hist = open_out(out / "history.csv");
    write_history_csv(res.history, hist);
    std::ofstream cfg_out = open_out(out / "config.json");
    cfg_out << dump_experiment(cfg);
    if (sim_every > 0) {
        std::ofstream sim = open_out(out / "similarity.csv");
        write_similarity_csv(trace, sim);
    }
    std::cout << "trained " << res.history.size() << " steps on " << set.patches.size() << " patches; "
              << "backbone " << model.backbone_param_count() << " + add-on " << model.addon_param_count()
              << " parameters\n";
    return kOk;
}

int cmd_eval(const fs::path& config_path, const fs::path& checkpoint, const fs::path& hr_dir, const fs::path& out,
             bool y_only) {
    const ExperimentConfig cfg = load_experiment(config_path);
    TfdModel model = load_model(cfg, checkpoint);
    const Dataset d = load_dir(hr_dir);
    EvalOptions opt;
    opt.scale = cfg.arch.scale;
    opt.seed = cfg.eval.seed;
    opt.y_only = y_only;
    const auto presets = cfg.eval_presets();
    const MetricReport rep =
        evaluate([&](const Tensor& lr) { return model.forward(lr, true).sr; }, d.images, d.names, presets, opt);
    std::ofstream f = open_out(out);
    write_report_csv(rep, f);
    const auto avg = rep.averages();
    std::cout << "average psnr " << avg.back().psnr << " ssim " << avg.back().ssim << "\n";
    return kOk;
}

int cmd_gradcheck(const fs::path& config_path, std::uint64_t seed, std::size_t coords) {
    ArchConfig arch;
    if (!config_path.empty()) arch = load_experiment(config_path).arch;
    GradCheckOptions opt;
    opt.seed = seed;
    opt.coords = coords;
    bool ok = true;
    double worst = 0.0;
    std::cout << "check,checked,failed,kinks,max_rel,max_abs\n";
    for (const auto& r : run_gradient_suite(arch, opt)) {
        std::cout << r.name << ',' << r.checked << ',' << r.failed << ',' << r.kinks << ',' << r.max_rel << ','
                  << r.max_abs << '\n';
        ok = ok && r.pass();
        worst = std::max(worst, r.max_rel);
    }
    std::cout << (ok ? "PASS" : "FAIL") << " max relative error " << worst << "\n";
    return ok ? kOk : kNumeric;
}

// Degraded LR next to the clean-preset LR of the same source.
struct LrPairs {
    std::vector<Image8> clean;
    std::vector<Image8> degraded;
};

LrPairs lr_pairs(const Dataset& d, const std::string& preset, std::uint64_t seed, int scale) {
    DegradationConfig clean = DegradationConfig::preset("clean");
    DegradationConfig deg = DegradationConfig::preset(preset);
    clean.scale = deg.scale = scale;
    LrPairs p;
    for (std::size_t i = 0; i < d.images.size(); ++i) {
        const Image8& img = d.images[i];
        const Image8 hr = crop(img, 0, 0, img.width - img.width % scale, img.height - img.height % scale);
        Rng r0(derive_seed(seed, i));
        Rng r1(derive_seed(seed, i));
        p.clean.push_back(apply(clean, hr, r0).lr);
        p.degraded.push_back(apply(deg, hr, r1).lr);
    }
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Targeted feature denoising for super-resolution"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "Write seeded synthetic HR images");
    fs::path synth_out;
    int synth_count = 16, synth_size = 128, synth_channels = 1;
    std::uint64_t synth_seed = 0;
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--count", synth_count, "Number of images");
    synth->add_option("--size", synth_size, "Side length in pixels");
    synth->add_option("--channels", synth_channels, "1 or 3");
    synth->add_option("--seed", synth_seed, "Master seed");

    auto* degrade = app.add_subcommand("degrade", "Degrade an HR directory with one preset");
    std::string preset;
    std::uint64_t deg_seed = 0;
    fs::path deg_in, deg_out;
    int deg_scale = 4;
    degrade->add_option("--preset", preset, "Degradation preset")->required();
    degrade->add_option("--seed", deg_seed, "Master seed")->required();
    degrade->add_option("--in", deg_in, "HR directory")->required();
    degrade->add_option("--out", deg_out, "LR output directory")->required();
    degrade->add_option("--scale", deg_scale, "Downsampling factor");

    auto* train = app.add_subcommand("train", "Train from an experiment config");
    fs::path train_cfg;
    std::size_t sim_every = 0;
    train->add_option("config", train_cfg, "Experiment JSON")->required();
    train->add_option("--sim-every", sim_every, "Record feature similarity every N steps (0: off)");

    auto* eval = app.add_subcommand("eval", "PSNR / SSIM report per preset");
    fs::path eval_cfg, eval_ckpt, eval_hr, eval_out = "report.csv";
    bool y_only = false;
    eval->add_option("--config", eval_cfg, "Experiment JSON")->required();
    eval->add_option("--checkpoint", eval_ckpt, "model.tfd1")->required();
    eval->add_option("--hr", eval_hr, "Held-out HR directory")->required();
    eval->add_option("--out", eval_out, "Report CSV");
    eval->add_flag("--y-only", y_only, "Score BT.601 luma instead of RGB");

    auto* analyze = app.add_subcommand("analyze", "Diagnostics");
    analyze->require_subcommand(1);
    fs::path an_cfg, an_ckpt, an_hr, an_out, an_image;
    std::uint64_t an_seed = 0;
    int an_bins = 16, an_steps = 2000;
    std::string an_preset = "noise", an_weight = "radial";
    double an_sigma = 20.0;

    auto* cossim = analyze->add_subcommand("cossim", "Feature similarity, clean vs each preset");
    cossim->add_option("--config", an_cfg)->required();
    cossim->add_option("--checkpoint", an_ckpt)->required();
    cossim->add_option("--hr", an_hr, "Probe HR directory")->required();
    cossim->add_option("--seed", an_seed);
    cossim->add_option("--out", an_out)->required();

    auto* spectrum = analyze->add_subcommand("spectrum", "Radial profile of the degradation residual");
    spectrum->add_option("--hr", an_hr, "Probe HR directory")->required();
    spectrum->add_option("--preset", an_preset);
    spectrum->add_option("--bins", an_bins);
    spectrum->add_option("--seed", an_seed);
    spectrum->add_option("--out", an_out)->required();

    auto* freqp = analyze->add_subcommand("freqp", "Low vs high band fitting order of a coordinate MLP");
    freqp->add_option("--image", an_image, "Gray power-of-two target (default: built-in probe)");
    freqp->add_option("--steps", an_steps);
    freqp->add_option("--seed", an_seed);
    freqp->add_option("--out", an_out)->required();

    auto* snr = analyze->add_subcommand("snr", "Weighted content / noise energy ratio");
    snr->add_option("--image", an_image, "Content image (default: built-in probe)");
    snr->add_option("--sigma", an_sigma, "Noise sigma on the 0..255 scale");
    snr->add_option("--weight", an_weight, "uniform or radial")->check(CLI::IsMember({"uniform", "radial"}));
    snr->add_option("--steps", an_steps);
    snr->add_option("--seed", an_seed);
    snr->add_option("--out", an_out)->required();

    auto* audit = analyze->add_subcommand("audit", "Detector accuracy before and after denoising");
    audit->add_option("--config", an_cfg)->required();
    audit->add_option("--checkpoint", an_ckpt)->required();
    audit->add_option("--hr", an_hr, "Probe HR directory")->required();
    audit->add_option("--seed", an_seed);
    audit->add_option("--out", an_out)->required();

    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
    fs::path gc_cfg;
    std::uint64_t gc_seed = 0;
    std::size_t gc_coords = 100;
    gradcheck->add_option("--config", gc_cfg, "Take the architecture from this experiment JSON");
    gradcheck->add_option("--seed", gc_seed);
    gradcheck->add_option("--coords", gc_coords, "Coordinates per check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*synth) return cmd_synth(synth_out, synth_count, synth_size, synth_channels, synth_seed);
        if (*degrade) return cmd_degrade(preset, deg_seed, deg_in, deg_out, deg_scale);
        if (*train) return cmd_train(train_cfg, sim_every);
        if (*eval) return cmd_eval(eval_cfg, eval_ckpt, eval_hr, eval_out, y_only);
        if (*gradcheck) return cmd_gradcheck(gc_cfg, gc_seed, gc_coords);
        if (*cossim) {
            const ExperimentConfig cfg = load_experiment(an_cfg);
            TfdModel model = load_model(cfg, an_ckpt);
            const Dataset d = load_dir(an_hr);
            const auto presets = cfg.eval_presets();
            std::ofstream f = open_out(an_out);
            write_similarity_csv(measure_similarity(model, d.images, presets, an_seed, 0), f);
            return kOk;
        }
        if (*spectrum) {
            if (!is_preset_name(an_preset)) throw ConfigError("unknown preset '" + an_preset + "'");
            const LrPairs p = lr_pairs(load_dir(an_hr), an_preset, an_seed, 4);
            std::ofstream f = open_out(an_out);
            write_profile_csv(residual_spectrum(p.clean, p.degraded, an_bins), f);
            return kOk;
        }
        if (*freqp) {
            const Image8 target = an_image.empty() ? standard_probe_image() : load_ppm(an_image);
            FreqProbeConfig fc;
            fc.steps = an_steps;
            fc.seed = an_seed;
            const FreqProbeResult r = freq_principle_probe(target, fc);
            std::ofstream f = open_out(an_out);
            write_freq_csv(r.rows, f);
            std::cout << "low band crosses at " << r.low_cross << ", high band at " << r.high_cross << "\n";
            return kOk;
        }
        if (*snr) {
            const Image8 content = an_image.empty() ? standard_probe_image() : load_ppm(an_image);
            SnrWeight w;
            w.kind = an_weight == "uniform" ? SnrWeightKind::uniform : SnrWeightKind::radial_power;
            std::ofstream f = open_out(an_out);
            write_snr_csv(snr_curve(content, an_sigma, w, an_steps, an_seed), f);
            return kOk;
        }
        if (*audit) {
            const ExperimentConfig cfg = load_experiment(an_cfg);
            TfdModel model = load_model(cfg, an_ckpt);
            const Dataset d = load_dir(an_hr);
            const int S = cfg.arch.feature_size;
            const std::vector<std::string> noise{"noise"};
            const PatchSet set =
                build_patch_set(d.images, PatchSpec{S, S, 64}, noise, cfg.arch.scale, an_seed);
            if (set.patches.empty()) throw DataError("audit: images too small for one patch");
            std::vector<int> idx, labels;
            for (std::size_t i = 0; i < set.patches.size(); ++i) {
                idx.push_back(static_cast<int>(i));
                labels.push_back(set.patches[i].label);
            }
            const AuditResult r = detection_audit(model, batch_lr(set, idx), labels);
            std::ofstream f = open_out(an_out);
            f << "noisy,acc_before,acc_after\n" << r.noisy << ',' << r.acc_before << ',' << r.acc_after << '\n';
            std::cout << "accuracy before " << r.acc_before << ", after " << r.acc_after << "\n";
            return kOk;
        }
    } catch (const DataError& e) {
        std::cerr << "tfd: " << e.what() << "\n";
        return kData;
    } catch (const ParseError& e) {
        std::cerr << "tfd: " << e.what() << "\n";
        return kData;
    } catch (const Error& e) {
        std::cerr << "tfd: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
