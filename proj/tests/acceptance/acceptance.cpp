// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tfd/analyze.hpp"
#include "tfd/degrade.hpp"
#include "tfd/gradcheck.hpp"
#include "tfd/metrics.hpp"
#include "tfd/model.hpp"
#include "tfd/rng.hpp"
#include "tfd/spectral.hpp"
#include "tfd/synth.hpp"
#include "tfd/train.hpp"

namespace fs = std::filesystem;
using namespace tfd;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o, double secs) {
    std::ostringstream line;
    line << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail << " (" << std::fixed
         << std::setprecision(1) << secs << " s)";
    std::cout << line.str() << std::endl;
    if (!o.pass) ++failures;
}

void log(const std::string& msg) { std::cerr << "  " << msg << std::endl; }

std::string fmt(double v, int prec = 4) {
    std::ostringstream s;
    s << std::setprecision(prec) << v;
    return s.str();
}

Tensor random_plane(int H, int W, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(H) * W);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return Tensor(Shape{1, 1, H, W}, std::move(v));
}

// ---------------------------------------------------------------------------

Outcome spectral_oracle() {
    const double pi = std::acos(-1.0);
    Rng rng(1);
    double dft_err = 0, parseval_err = 0, trip_err = 0;
    for (int side : {16, 8})
        for (int t = 0; t < 50; ++t) {
            const Tensor x = random_plane(side, side, rng);
            const Spectrum s = dft2(x);
            double num = 0, den = 0;
            for (int u = 0; u < side; ++u)
                for (int v = 0; v < side; ++v) {
                    std::complex<double> acc = 0;
                    for (int y = 0; y < side; ++y)
                        for (int xx = 0; xx < side; ++xx) {
                            const double a = -2 * pi * (static_cast<double>(u * y) + v * xx) / side;
                            acc += x[static_cast<std::size_t>(y) * side + xx] * std::polar(1.0, a);
                        }
                    const std::size_t k = static_cast<std::size_t>(u) * side + v;
                    num = std::max(num, std::abs(std::complex<double>(s.re[k], s.im[k]) - acc));
                    den = std::max(den, std::abs(acc));
                }
            dft_err = std::max(dft_err, num / den);
            const Energies e = parseval_check(x);
            parseval_err = std::max(parseval_err, std::abs(e.spectral - e.spatial) / e.spatial);
            const Tensor back = idft2(s);
            double d = 0, n = 0;
            for (std::size_t i = 0; i < x.numel(); ++i) {
                d = std::max(d, std::abs(back[i] - x[i]));
                n = std::max(n, std::abs(x[i]));
            }
            trip_err = std::max(trip_err, d / n);
        }
    Outcome o;
    o.pass = dft_err <= 1e-9 && parseval_err <= 1e-9 && trip_err <= 1e-9;
    o.detail = "max rel dft " + fmt(dft_err, 3) + ", parseval " + fmt(parseval_err, 3) + ", round trip " +
               fmt(trip_err, 3) + " (bound 1e-09, 100 tensors)";
    return o;
}

Outcome gradient_suite() {
    GradCheckOptions opt;
    const auto results = run_gradient_suite(ArchConfig{}, opt);
    std::size_t failed = 0, min_checked = static_cast<std::size_t>(-1);
    double max_rel = 0, max_abs = 0;
    std::string first_bad;
    for (const auto& r : results) {
        min_checked = std::min(min_checked, r.checked);
        max_rel = std::max(max_rel, r.max_rel);
        max_abs = std::max(max_abs, r.max_abs);
        if (!r.pass()) {
            ++failed;
            if (first_bad.empty()) first_bad = r.name;
        }
    }
    Outcome o;
    o.pass = failed == 0 && !results.empty();
    o.detail = std::to_string(results.size()) + " checks, " + std::to_string(failed) + " failed" +
               (first_bad.empty() ? "" : " (first: " + first_bad + ")") + ", max abs " + fmt(max_abs, 3) +
               ", max rel beyond abs tol " + fmt(max_rel, 3) + ", min coords " + std::to_string(min_checked);
    return o;
}

Outcome degradation_stats() {
    Rng rng(20);
    const Tensor flat(Shape{1, 1, 250, 400}, 0.5);
    const Tensor noisy = add_gaussian_noise(flat, 20.0, rng);
    double m = 0, s = 0;
    for (std::size_t i = 0; i < noisy.numel(); ++i) m += noisy[i] - 0.5;
    m /= static_cast<double>(noisy.numel());
    for (std::size_t i = 0; i < noisy.numel(); ++i) s += (noisy[i] - 0.5 - m) * (noisy[i] - 0.5 - m);
    const double sd = std::sqrt(s / static_cast<double>(noisy.numel()));
    const double rel = std::abs(sd / (20.0 / 255.0) - 1.0);

    const Image8 tex = synth_image(128, 128, 1, 30);
    std::vector<double> p;
    for (int q : {90, 60, 30, 10}) p.push_back(psnr(tex, from_tensor(jpeg_codec(to_tensor(tex), q))));
    const bool monotone = p[0] > p[1] && p[1] > p[2] && p[2] > p[3];

    const Image8 block(8, 8, 1, 128);
    const bool exact = from_tensor(jpeg_codec(to_tensor(block), 30)) == block;

    Outcome o;
    o.pass = rel <= 0.03 && monotone && exact;
    o.detail = "noise std " + fmt(sd * 255, 5) + "/255 (" + fmt(rel * 100, 3) + "% off, 1e5 samples); jpeg psnr q90..q10 " +
               fmt(p[0]) + " > " + fmt(p[1]) + " > " + fmt(p[2]) + " > " + fmt(p[3]) + "; constant block " +
               (exact ? "exact" : "changed");
    return o;
}

Outcome spectrum_profile() {
    const int bins = 15, top = bins / 3;
    const DegradationConfig clean = DegradationConfig::preset("clean");
    const DegradationConfig noise = DegradationConfig::preset("noise");
    const DegradationConfig blur = DegradationConfig::preset("blur");
    int wins = 0;
    for (int i = 0; i < 10; ++i) {
        const Image8 hr = synth_image(128, 128, 3, 4000 + static_cast<std::uint64_t>(i));
        Rng r0(derive_seed(40, i)), r1(derive_seed(41, i)), r2(derive_seed(42, i));
        const Image8 c = apply(clean, hr, r0).lr;
        const RadialProfile pn = residual_spectrum(c, apply(noise, hr, r1).lr, bins);
        const RadialProfile pb = residual_spectrum(c, apply(blur, hr, r2).lr, bins);
        bool all = true;
        for (int b = bins - top; b < bins; ++b) all = all && pn.bins[b].mean_magnitude > pb.bins[b].mean_magnitude;
        wins += all ? 1 : 0;
    }
    Outcome o;
    o.pass = wins >= 9;
    o.detail = "noise residual above blur residual on every one of the top " + std::to_string(top) + "/" +
               std::to_string(bins) + " bins in " + std::to_string(wins) + "/10 images (need 9)";
    return o;
}

Outcome frequency_principle() {
    const Image8 target = standard_probe_image();
    int ok = 0;
    std::string crossings;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        FreqProbeConfig cfg;
        cfg.seed = seed;
        const FreqProbeResult r = freq_principle_probe(target, cfg);
        ok += r.low_cross < r.high_cross ? 1 : 0;
        crossings += (seed ? ", " : "") + fmt(r.low_cross) + "<" + fmt(r.high_cross);
    }
    Outcome o;
    o.pass = ok >= 4;
    o.detail = "low band crosses 0.5 first in " + std::to_string(ok) + "/5 seeds (need 4); steps " + crossings;
    return o;
}

// ---------------------------------------------------------------------------
// Toy training protocol shared by the similarity, audit and ablation criteria.

struct Toy {
    int train_images = 96;
    int train_side = 128;
    int lr_patch = 16;
    std::size_t patches_per_image = 16;
    int scale = 4;
    int channels = 8;
    int blocks = 4;
    int insert_at = 2;
    int iters = 2000;
    double lr0 = 3e-3;
    int held_out = 16;
    int held_side = 64;
    std::uint64_t eval_seed = 4242;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
};

struct RunResult {
    std::map<std::string, double> psnr;  ///< per preset, plus "AVERAGE"
    std::vector<SimilarityRow> similarity;
    AuditResult audit;
    bool gate = false;
    double seconds = 0;
};

const std::vector<std::string>& all_presets() {
    static const std::vector<std::string> v(preset_names().begin(), preset_names().end());
    return v;
}

ArchConfig toy_arch(const Toy& toy, const std::string& variant) {
    ArchConfig a;
    a.in_channels = 1;
    a.channels = toy.channels;
    a.blocks = toy.blocks;
    a.insert_at = toy.insert_at;
    a.scale = toy.scale;
    a.feature_size = toy.lr_patch;
    if (variant == "off") a.nd = a.sd = a.fd = false;
    if (variant == "no-nd") a.nd = false;
    if (variant == "no-sd") a.sd = false;
    if (variant == "no-fd") a.fd = false;
    if (variant == "addition") a.fusion = Fusion::addition;
    return a;
}

RunResult toy_run(const Toy& toy, const std::string& variant, std::uint64_t seed) {
    const auto t0 = Clock::now();
    std::vector<Image8> train;
    for (int i = 0; i < toy.train_images; ++i)
        train.push_back(synth_image(toy.train_side, toy.train_side, 1, 100 + static_cast<std::uint64_t>(i)));
    const PatchSet set = build_patch_set(train, PatchSpec{toy.lr_patch, toy.lr_patch, toy.patches_per_image},
                                         all_presets(), toy.scale, seed);
    TfdModel model(toy_arch(toy, variant), seed);
    TrainConfig cfg;
    cfg.iters = toy.iters;
    cfg.lr0 = toy.lr0;
    cfg.seed = seed;
    const TrainResult tr = run_training(set, model, cfg);

    RunResult r;
    r.gate = tr.state.gate_active;
    std::vector<Image8> held;
    std::vector<std::string> names;
    for (int i = 0; i < toy.held_out; ++i) {
        held.push_back(synth_image(toy.held_side, toy.held_side, 1, 9000 + static_cast<std::uint64_t>(i)));
        names.push_back("held" + std::to_string(i));
    }
    EvalOptions eo;
    eo.scale = toy.scale;
    eo.seed = toy.eval_seed;
    const MetricReport rep =
        evaluate([&](const Tensor& lr) { return model.forward(lr, true).sr; }, held, names, all_presets(), eo);
    for (const auto& p : all_presets()) r.psnr[p] = rep.mean_psnr(p);
    r.psnr["AVERAGE"] = rep.averages().back().psnr;

    if (variant == "full") {
        std::vector<Image8> probe;
        for (int i = 0; i < 10; ++i) probe.push_back(synth_image(64, 64, 1, 7000 + static_cast<std::uint64_t>(i)));
        r.similarity = measure_similarity(model, probe, all_presets(), 31337, static_cast<std::size_t>(toy.iters));

        std::vector<Image8> audit_src;
        for (int i = 0; i < 8; ++i) audit_src.push_back(synth_image(256, 256, 1, 8000 + static_cast<std::uint64_t>(i)));
        const std::vector<std::string> noise = {"noise"};
        const PatchSet aset = build_patch_set(audit_src, PatchSpec{toy.lr_patch, toy.lr_patch, 64}, noise, toy.scale, 555);
        std::vector<int> idx, labels;
        for (std::size_t i = 0; i < aset.patches.size(); ++i) {
            idx.push_back(static_cast<int>(i));
            labels.push_back(aset.patches[i].label);
        }
        r.audit = detection_audit(model, batch_lr(aset, idx), labels);
    }
    r.seconds = seconds_since(t0);
    std::ostringstream msg;
    msg << variant << " seed " << seed << " gate " << r.gate << " noise " << fmt(r.psnr["noise"], 6) << " avg "
        << fmt(r.psnr["AVERAGE"], 6) << " (" << fmt(r.seconds, 3) << " s)";
    log(msg.str());
    return r;
}

double similarity_of(const RunResult& r, const std::string& preset) {
    for (const auto& s : r.similarity)
        if (s.preset == preset) return s.cossim;
    return NAN;
}

// ---------------------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& stdout_to = {}) {
    std::string cmd = std::string(TFD_CLI_PATH) + " " + args;
    cmd += stdout_to.empty() ? " >/dev/null" : " >" + stdout_to.string();
    cmd += " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "tfd_acceptance_replay";
    const fs::path work = root / "work";
    fs::remove_all(root);

    auto session = [&]() -> std::string {
        fs::create_directories(work);
        const auto w = [&](const char* rel) { return (work / rel).string(); };
        std::ofstream(work / "cfg.json") << R"({"data": {"hr_dir": ")" << w("hr")
                                         << R"(", "patch": 8, "stride": 8, "limit": 8},
  "arch": {"in_channels": 3, "channels": 4, "blocks": 2, "insert_at": 1, "feature_size": 8},
  "train": {"iters": 8, "batch": 4, "seed": 5},
  "eval": {"seed": 6},
  "out_dir": ")" << w("run") << R"("})";
        const std::string ck = " --config " + w("cfg.json") + " --checkpoint " + w("run/model.tfd1") + " --hr " + w("hr");
        const std::vector<std::pair<std::string, std::string>> steps = {
            {"synth --out " + w("hr") + " --count 3 --size 64 --channels 3 --seed 11", ""},
            {"degrade --preset blur+noise+jpeg --seed 7 --in " + w("hr") + " --out " + w("lr"), ""},
            {"train " + w("cfg.json") + " --sim-every 4", ""},
            {"eval" + ck + " --out " + w("report.csv"), ""},
            {"analyze cossim" + ck + " --seed 3 --out " + w("cossim.csv"), ""},
            {"analyze audit" + ck + " --seed 3 --out " + w("audit.csv"), ""},
            {"analyze spectrum --hr " + w("hr") + " --preset noise --bins 8 --seed 3 --out " + w("spectrum.csv"), ""},
            {"analyze freqp --steps 60 --seed 3 --out " + w("freqp.csv"), ""},
            {"analyze snr --sigma 20 --weight radial --steps 8 --seed 3 --out " + w("snr.csv"), ""},
            {"gradcheck --coords 2 --seed 3", w("gradcheck.csv")},
        };
        for (const auto& [args, out] : steps)
            if (run_cli(args, out) != 0) return "command failed: tfd " + args;
        return "";
    };

    Outcome o;
    if (auto err = session(); !err.empty()) return {false, err};
    fs::rename(work, root / "first");
    if (auto err = session(); !err.empty()) return {false, err};

    std::size_t files = 0, differ = 0;
    std::string first_diff;
    for (const auto& e : fs::recursive_directory_iterator(root / "first")) {
        if (!e.is_regular_file()) continue;
        const fs::path rel = fs::relative(e.path(), root / "first");
        ++files;
        if (slurp(e.path()) != slurp(work / rel)) {
            ++differ;
            if (first_diff.empty()) first_diff = rel.string();
        }
    }
    fs::remove_all(root);
    o.pass = files > 0 && differ == 0;
    o.detail = "two sessions of synth/degrade/train/eval/analyze/gradcheck: " + std::to_string(files) + " files, " +
               std::to_string(differ) + " differ" + (first_diff.empty() ? "" : " (" + first_diff + ")");
    return o;
}

Outcome parameter_overhead() {
    const ArchConfig a;
    const ParamBudget b = param_budget(a);
    TfdModel m(a, 0);
    const double ratio = static_cast<double>(m.addon_param_count()) / static_cast<double>(m.backbone_param_count());
    Outcome o;
    o.pass = ratio <= 0.15 && b.addon == m.addon_param_count() && b.backbone == m.backbone_param_count();
    o.detail = "add-on " + std::to_string(m.addon_param_count()) + " / backbone " +
               std::to_string(m.backbone_param_count()) + " = " + fmt(100 * ratio, 4) + "% (bound 15%)";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    // Optional criterion ids restrict the run; no arguments runs everything.
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    const auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

    const auto timed = [&](int id, const std::string& name, double limit, const std::function<Outcome()>& fn) {
        if (!wanted(id)) return;
        const auto t0 = Clock::now();
        Outcome o = fn();
        const double s = seconds_since(t0);
        if (limit > 0 && s > limit) {
            o.pass = false;
            o.detail += "; over the " + fmt(limit) + " s budget";
        }
        report(id, name, o, s);
    };

    timed(1, "spectral oracle", 10, spectral_oracle);
    timed(2, "gradient suite", 120, gradient_suite);
    timed(3, "degradation statistics", 0, degradation_stats);
    timed(4, "residual spectrum, noise over blur", 30, spectrum_profile);
    timed(5, "low frequencies fitted first", 300, frequency_principle);

    const Toy toy;
    if (wanted(6) || wanted(7) || wanted(8) || wanted(9)) {
        std::map<std::string, std::vector<RunResult>> runs;
        const std::vector<std::string> variants = {"full", "off", "no-nd", "no-sd", "no-fd", "addition"};
        double full_secs = 0, total_secs = 0;
        for (const auto& v : variants)
            for (std::uint64_t seed : toy.seeds) {
                runs[v].push_back(toy_run(toy, v, seed));
                total_secs += runs[v].back().seconds;
                if (v == "full") full_secs += runs[v].back().seconds;
            }
        const auto seed_mean = [&](const std::string& v, const std::string& preset) {
            double s = 0;
            for (const auto& r : runs[v]) s += r.psnr.at(preset);
            return s / static_cast<double>(runs[v].size());
        };

        {
            int ok = 0;
            std::string vals;
            for (const auto& r : runs["full"]) {
                const double n = similarity_of(r, "noise"), b = similarity_of(r, "blur"), j = similarity_of(r, "jpeg");
                ok += (n < b && n < j) ? 1 : 0;
                vals += (vals.empty() ? "" : "; ") + std::string("noise ") + fmt(n) + " blur " + fmt(b) + " jpeg " + fmt(j);
            }
            Outcome o{ok >= 2, "noise below blur and jpeg in " + std::to_string(ok) + "/3 seeds (need 2): " + vals};
            if (full_secs > 1200) {
                o.pass = false;
                o.detail += "; over the 1200 s budget";
            }
            report(6, "feature similarity ordering", o, full_secs);
        }
        {
            int ok = 0;
            std::string vals;
            for (const auto& r : runs["full"]) {
                ok += (r.audit.acc_before >= 0.9 && r.audit.acc_after <= 0.2) ? 1 : 0;
                vals += (vals.empty() ? "" : "; ") + fmt(r.audit.acc_before, 3) + " -> " + fmt(r.audit.acc_after, 3) +
                        " (n " + std::to_string(r.audit.noisy) + ")";
            }
            report(7, "detection audit", {ok == 3, "before >= 0.9 and after <= 0.2 in " + std::to_string(ok) + "/3 seeds: " + vals},
                   0);
        }
        {
            const double full = seed_mean("full", "noise"), off = seed_mean("off", "noise");
            int rows = 0;
            std::string abl;
            for (const char* v : {"no-nd", "no-sd", "no-fd"}) {
                const double m = seed_mean(v, "noise");
                rows += full >= m ? 1 : 0;
                abl += std::string(", ") + v + " " + fmt(m, 5);
            }
            Outcome o{full - off >= 0.1 && rows >= 2, "noise psnr full " + fmt(full, 5) + " vs off " + fmt(off, 5) + " (gain " +
                                                           fmt(full - off, 3) + " dB, need 0.1)" + abl + "; full ahead on " +
                                                           std::to_string(rows) + "/3 removals (need 2)"};
            if (total_secs > 7200) {
                o.pass = false;
                o.detail += "; over the 7200 s budget";
            }
            report(8, "TFD benefit and ablation ordering", o, total_secs);
        }
        {
            int ok = 0;
            std::string vals;
            for (std::size_t i = 0; i < toy.seeds.size(); ++i) {
                const double m = runs["full"][i].psnr.at("AVERAGE"), a = runs["addition"][i].psnr.at("AVERAGE");
                ok += m >= a ? 1 : 0;
                vals += (i ? "; " : "") + fmt(m, 5) + " vs " + fmt(a, 5);
            }
            report(9, "multiplication fusion over addition",
                   {ok >= 2, "average psnr multiplication vs addition, ahead in " + std::to_string(ok) + "/3 seeds: " + vals},
                   0);
        }
    }

    timed(10, "determinism", 0, determinism);
    timed(11, "parameter overhead", 0, parameter_overhead);

    std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAIL") << std::endl;
    return failures == 0 ? 0 : 1;
}
