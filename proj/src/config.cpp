// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include "tfd/config.hpp"

#include <fstream>
#include <initializer_list>
#include <type_traits>
#include <sstream>

#include <json.hpp>

#include "tfd/degrade.hpp"
#include "tfd/error.hpp"

namespace tfd {

namespace {

using json = nlohmann::json;

void allow_only(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw ConfigError("config: '" + where + "' must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        if (!known) throw ConfigError("config: unknown key '" + where + "." + it.key() + "'");
    }
}

template <class T>
void read(const json& obj, const std::string& where, const char* key, T& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    const std::string path = where + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("config: '" + path + "' must be a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError("config: '" + path + "' must be a string");
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("config: '" + path + "' must be a number");
    } else if constexpr (std::is_unsigned_v<T>) {
        if (!it->is_number_unsigned()) throw ConfigError("config: '" + path + "' must be a non-negative integer");
    } else {
        if (!it->is_number_integer()) throw ConfigError("config: '" + path + "' must be an integer");
    }
    out = it->get<T>();
}

std::vector<std::string> read_presets(const json& value, const std::string& path) {
    if (!value.is_array()) throw ConfigError("config: '" + path + "' must be a list of preset names");
    std::vector<std::string> out;
    for (const auto& v : value) {
        if (!v.is_string()) throw ConfigError("config: '" + path + "' must be a list of preset names");
        const auto name = v.get<std::string>();
        if (!is_preset_name(name)) {
            std::string valid;
            for (const auto& p : preset_names()) valid += (valid.empty() ? "" : ", ") + p;
            throw ConfigError("config: unknown preset '" + name + "' in '" + path + "' (valid: " + valid + ")");
        }
        out.push_back(name);
    }
    return out;
}

std::vector<std::string> all_presets() { return {preset_names().begin(), preset_names().end()}; }

}  // namespace

std::vector<std::string> ExperimentConfig::train_presets() const {
    return degradations.empty() ? all_presets() : degradations;
}

std::vector<std::string> ExperimentConfig::eval_presets() const {
    return eval.presets.empty() ? all_presets() : eval.presets;
}

void ExperimentConfig::validate() const {
    if (data.patch < 1 || data.stride < 1) throw ConfigError("config: data.patch and data.stride must be positive");
    if (data.limit < 1) throw ConfigError("config: data.limit must be positive");
    if (out_dir.empty()) throw ConfigError("config: out_dir must not be empty");
    arch.validate();
    train.validate();
}

ExperimentConfig parse_experiment(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    allow_only(root, "config", {"data", "degradations", "arch", "train", "eval", "out_dir"});

    ExperimentConfig c;
    if (auto it = root.find("data"); it != root.end()) {
        allow_only(*it, "data", {"hr_dir", "patch", "stride", "limit"});
        read(*it, "data", "hr_dir", c.data.hr_dir);
        read(*it, "data", "patch", c.data.patch);
        read(*it, "data", "stride", c.data.stride);
        read(*it, "data", "limit", c.data.limit);
    }
    if (auto it = root.find("degradations"); it != root.end()) c.degradations = read_presets(*it, "degradations");
    if (auto it = root.find("arch"); it != root.end()) {
        allow_only(*it, "arch",
                   {"blocks", "channels", "insert_at", "nd", "sd", "fd", "fusion", "reduction_ratio", "in_channels",
                    "scale", "feature_size"});
        ArchConfig& a = c.arch;
        read(*it, "arch", "blocks", a.blocks);
        read(*it, "arch", "channels", a.channels);
        read(*it, "arch", "insert_at", a.insert_at);
        read(*it, "arch", "nd", a.nd);
        read(*it, "arch", "sd", a.sd);
        read(*it, "arch", "fd", a.fd);
        std::string fusion = fusion_name(a.fusion);
        read(*it, "arch", "fusion", fusion);
        a.fusion = parse_fusion(fusion);
        read(*it, "arch", "reduction_ratio", a.reduction_ratio);
        read(*it, "arch", "in_channels", a.in_channels);
        read(*it, "arch", "scale", a.scale);
        read(*it, "arch", "feature_size", a.feature_size);
    }
    if (auto it = root.find("train"); it != root.end()) {
        allow_only(*it, "train",
                   {"lambda_cls", "lambda_feat", "lr0", "beta1", "beta2", "eps", "batch", "iters", "gate_threshold",
                    "ema_decay", "seed"});
        TrainConfig& t = c.train;
        read(*it, "train", "lambda_cls", t.lambda_cls);
        read(*it, "train", "lambda_feat", t.lambda_feat);
        read(*it, "train", "lr0", t.lr0);
        read(*it, "train", "beta1", t.beta1);
        read(*it, "train", "beta2", t.beta2);
        read(*it, "train", "eps", t.eps_adam);
        read(*it, "train", "batch", t.batch);
        read(*it, "train", "iters", t.iters);
        read(*it, "train", "gate_threshold", t.gate_threshold);
        read(*it, "train", "ema_decay", t.ema_decay);
        read(*it, "train", "seed", t.seed);
    }
    if (auto it = root.find("eval"); it != root.end()) {
        allow_only(*it, "eval", {"presets", "seed"});
        if (auto p = it->find("presets"); p != it->end()) c.eval.presets = read_presets(*p, "eval.presets");
        read(*it, "eval", "seed", c.eval.seed);
    }
    read(root, "config", "out_dir", c.out_dir);
    c.validate();
    return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("config: cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_experiment(ss.str());
}

std::string dump_experiment(const ExperimentConfig& c) {
    json j;
    j["data"] = {{"hr_dir", c.data.hr_dir}, {"patch", c.data.patch}, {"stride", c.data.stride}, {"limit", c.data.limit}};
    j["degradations"] = c.train_presets();
    const ArchConfig& a = c.arch;
    j["arch"] = {{"blocks", a.blocks},
                 {"channels", a.channels},
                 {"insert_at", a.insert_at},
                 {"nd", a.nd},
                 {"sd", a.sd},
                 {"fd", a.fd},
                 {"fusion", fusion_name(a.fusion)},
                 {"reduction_ratio", a.reduction_ratio},
                 {"in_channels", a.in_channels},
                 {"scale", a.scale},
                 {"feature_size", a.feature_size}};
    const TrainConfig& t = c.train;
    j["train"] = {{"lambda_cls", t.lambda_cls}, {"lambda_feat", t.lambda_feat}, {"lr0", t.lr0},
                  {"beta1", t.beta1},           {"beta2", t.beta2},             {"eps", t.eps_adam},
                  {"batch", t.batch},           {"iters", t.iters},             {"gate_threshold", t.gate_threshold},
                  {"ema_decay", t.ema_decay},   {"seed", t.seed}};
    j["eval"] = {{"presets", c.eval_presets()}, {"seed", c.eval.seed}};
    j["out_dir"] = c.out_dir;
    return j.dump(2) + "\n";
}

}  // namespace tfd
