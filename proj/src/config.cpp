#include "lff/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "lff/error.hpp"

namespace lff {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& group, const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError("config: unknown key '" +
                              (group.empty() ? it.key() : group + "." + it.key()) + "'");
        }
    }
}

std::int64_t get_int(const json& obj, const std::string& group, const std::string& key,
                     std::int64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
        throw ConfigError("config: " + group + "." + key + " must be an integer");
    }
    return v.get<std::int64_t>();
}

double get_num(const json& obj, const std::string& group, const std::string& key,
               double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError("config: " + group + "." + key + " must be a number");
    return v.get<double>();
}

bool get_bool(const json& obj, const std::string& group, const std::string& key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError("config: " + group + "." + key + " must be a boolean");
    return v.get<bool>();
}

std::string get_str(const json& obj, const std::string& group, const std::string& key,
                    const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) throw ConfigError("config: " + group + "." + key + " must be a string");
    return v.get<std::string>();
}

}  // namespace

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    check_keys(j, "", {"model", "adapter", "data", "train", "guidance", "window", "sampler",
                       "ablation", "baseline", "metrics"});
    ExperimentConfig c;

    if (j.contains("model")) {
        const json& m = j.at("model");
        if (!m.is_object()) throw ConfigError("config: model must be an object");
        check_keys(m, "model",
                   {"dim", "blocks", "heads", "patch", "channels", "height", "width",
                    "text_tokens"});
        c.model.dim = get_int(m, "model", "dim", c.model.dim);
        c.model.blocks = get_int(m, "model", "blocks", c.model.blocks);
        c.model.heads = get_int(m, "model", "heads", c.model.heads);
        c.model.patch = get_int(m, "model", "patch", c.model.patch);
        c.model.channels = get_int(m, "model", "channels", c.model.channels);
        c.model.height = get_int(m, "model", "height", c.model.height);
        c.model.width = get_int(m, "model", "width", c.model.width);
        c.model.text_tokens = get_int(m, "model", "text_tokens", c.model.text_tokens);
    }
    if (j.contains("adapter")) {
        const json& a = j.at("adapter");
        if (!a.is_object()) throw ConfigError("config: adapter must be an object");
        check_keys(a, "adapter", {"k", "blocks"});
        c.model.adapter_k = get_int(a, "adapter", "k", c.model.adapter_k);
        c.model.adapter_blocks = get_int(a, "adapter", "blocks", c.model.adapter_blocks);
    }
    if (j.contains("data")) {
        const json& d = j.at("data");
        if (!d.is_object()) throw ConfigError("config: data must be an object");
        check_keys(d, "data", {"frames", "audio_dim", "scenes"});
        c.model.frames = get_int(d, "data", "frames", c.model.frames);
        c.model.audio_dim = get_int(d, "data", "audio_dim", c.model.audio_dim);
        c.scenes = get_int(d, "data", "scenes", c.scenes);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        if (!t.is_object()) throw ConfigError("config: train must be an object");
        check_keys(t, "train", {"steps", "lr", "p_drop", "seed", "val_pairs"});
        c.train_steps = get_int(t, "train", "steps", c.train_steps);
        c.lr = get_num(t, "train", "lr", c.lr);
        c.p_drop = get_num(t, "train", "p_drop", c.p_drop);
        c.seed = static_cast<std::uint64_t>(
            get_int(t, "train", "seed", static_cast<std::int64_t>(c.seed)));
        c.val_pairs = get_int(t, "train", "val_pairs", c.val_pairs);
    }
    if (j.contains("guidance")) {
        const json& g = j.at("guidance");
        if (!g.is_object()) throw ConfigError("config: guidance must be an object");
        check_keys(g, "guidance", {"mode", "alpha", "beta", "cfg_scale"});
        c.guidance.mode =
            parse_guidance_mode(get_str(g, "guidance", "mode", guidance_mode_name(c.guidance.mode)));
        c.guidance.alpha = get_num(g, "guidance", "alpha", c.guidance.alpha);
        c.guidance.beta = get_num(g, "guidance", "beta", c.guidance.beta);
        c.guidance.cfg_scale = get_num(g, "guidance", "cfg_scale", c.guidance.cfg_scale);
    }
    if (j.contains("window")) {
        const json& w = j.at("window");
        if (!w.is_object()) throw ConfigError("config: window must be an object");
        check_keys(w, "window",
                   {"total", "length", "overlap", "scheme", "fuse_first_step", "double_buffer"});
        c.window_total = get_int(w, "window", "total", c.window_total);
        c.window_length = get_int(w, "window", "length", c.window_length);
        c.window_overlap = get_int(w, "window", "overlap", c.window_overlap);
        c.scheme = parse_weight_scheme(get_str(w, "window", "scheme", weight_scheme_name(c.scheme)));
        c.fuse_first_step = get_bool(w, "window", "fuse_first_step", c.fuse_first_step);
        c.double_buffer = get_bool(w, "window", "double_buffer", c.double_buffer);
    }
    if (j.contains("sampler")) {
        const json& s = j.at("sampler");
        if (!s.is_object()) throw ConfigError("config: sampler must be an object");
        check_keys(s, "sampler", {"steps"});
        c.sampler_steps = get_int(s, "sampler", "steps", c.sampler_steps);
    }
    if (j.contains("ablation")) {
        const json& a = j.at("ablation");
        if (!a.is_object()) throw ConfigError("config: ablation must be an object");
        check_keys(a, "ablation", {"adapter_off", "modulation_random", "cattn_off"});
        c.adapter_off = get_bool(a, "ablation", "adapter_off", c.adapter_off);
        c.modulation_random = get_bool(a, "ablation", "modulation_random", c.modulation_random);
        c.cattn_off = get_bool(a, "ablation", "cattn_off", c.cattn_off);
    }
    if (j.contains("baseline")) {
        const json& b = j.at("baseline");
        if (!b.is_string()) throw ConfigError("config: baseline must be a string");
        c.baseline = b.get<std::string>();
    }
    if (j.contains("metrics")) {
        const json& m = j.at("metrics");
        if (!m.is_object()) throw ConfigError("config: metrics must be an object");
        check_keys(m, "metrics", {"clip_len"});
        c.clip_len = get_int(m, "metrics", "clip_len", c.clip_len);
    }

    validate_config(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
    json j;
    j["model"] = {{"dim", c.model.dim},         {"blocks", c.model.blocks},
                  {"heads", c.model.heads},     {"patch", c.model.patch},
                  {"channels", c.model.channels}, {"height", c.model.height},
                  {"width", c.model.width},     {"text_tokens", c.model.text_tokens}};
    j["adapter"] = {{"k", c.model.adapter_k}, {"blocks", c.model.adapter_blocks}};
    j["data"] = {{"frames", c.model.frames},
                 {"audio_dim", c.model.audio_dim},
                 {"scenes", c.scenes}};
    j["train"] = {{"steps", c.train_steps},
                  {"lr", c.lr},
                  {"p_drop", c.p_drop},
                  {"seed", c.seed},
                  {"val_pairs", c.val_pairs}};
    j["guidance"] = {{"mode", guidance_mode_name(c.guidance.mode)},
                     {"alpha", c.guidance.alpha},
                     {"beta", c.guidance.beta},
                     {"cfg_scale", c.guidance.cfg_scale}};
    j["window"] = {{"total", c.window_total},
                   {"length", c.window_length},
                   {"overlap", c.window_overlap},
                   {"scheme", weight_scheme_name(c.scheme)},
                   {"fuse_first_step", c.fuse_first_step},
                   {"double_buffer", c.double_buffer}};
    j["sampler"] = {{"steps", c.sampler_steps}};
    j["ablation"] = {{"adapter_off", c.adapter_off},
                     {"modulation_random", c.modulation_random},
                     {"cattn_off", c.cattn_off}};
    j["baseline"] = c.baseline;
    j["metrics"] = {{"clip_len", c.clip_len}};
    return j;
}

void validate_config(const ExperimentConfig& c) {
    const ModelConfig& m = c.model;
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError("config: " + msg);
    };
    need(m.dim >= 2 && m.dim % 2 == 0, "model.dim must be an even integer >= 2");
    need(m.blocks >= 1, "model.blocks must be >= 1");
    need(m.heads >= 1, "model.heads must be >= 1");
    need(m.dim % m.heads == 0, "model.dim must be divisible by model.heads");
    need(m.patch >= 1, "model.patch must be >= 1");
    need(m.channels >= 1, "model.channels must be >= 1");
    need(m.height >= 8 && m.width >= 8, "model.height and model.width must be >= 8");
    need(m.height % m.patch == 0 && m.width % m.patch == 0,
         "model.height/model.width must be divisible by model.patch");
    need(m.text_tokens >= 1, "model.text_tokens must be >= 1");
    need(m.frames >= 1, "data.frames must be >= 1");
    need(m.audio_dim >= 1, "data.audio_dim must be >= 1");
    need(c.scenes >= 1, "data.scenes must be >= 1");
    need(m.adapter_k >= 0, "adapter.k must be >= 0");
    need(m.adapter_k < m.frames, "adapter.k must be smaller than data.frames");
    need(m.adapter_blocks >= 1, "adapter.blocks must be >= 1");
    need(c.train_steps >= 0, "train.steps must be >= 0");
    need(c.lr >= 0.0, "train.lr must be >= 0");
    need(c.p_drop >= 0.0 && c.p_drop <= 1.0, "train.p_drop must lie in [0, 1]");
    need(c.val_pairs >= 1, "train.val_pairs must be >= 1");
    need(c.window_total >= 1, "window.total must be >= 1");
    need(c.window_length >= 1, "window.length must be >= 1");
    need(c.window_length <= m.frames,
         "window.length must not exceed data.frames (the trained clip length)");
    need(c.window_overlap >= 2, "window.overlap must be >= 2");
    need(c.window_overlap < c.window_length, "window.overlap must be smaller than window.length");
    need(c.sampler_steps >= 1, "sampler.steps must be >= 1");
    need(c.baseline.empty() || c.baseline == "motion_frame" || c.baseline == "plain_window",
         "baseline must be \"\", \"motion_frame\" or \"plain_window\"");
    need(c.clip_len >= 0, "metrics.clip_len must be >= 0");
}

void apply_env_seed(ExperimentConfig& c) {
    const char* s = std::getenv("LFF_SEED");
    if (!s || !*s) return;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (end == s || *end != '\0') {
        throw ConfigError("config: LFF_SEED must be a decimal integer, got '" + std::string(s) +
                          "'");
    }
    c.seed = static_cast<std::uint64_t>(v);
}

void write_run_json(const std::string& dir, const ExperimentConfig& c,
                    const std::string& command) {
    std::filesystem::create_directories(dir);
    json j;
    j["command"] = command;
    j["config"] = config_to_json(c);
    std::ofstream out(std::filesystem::path(dir) / "run.json");
    if (!out) throw Error("run.json: cannot write into '" + dir + "'");
    out << j.dump(2) << "\n";
}

}  // namespace lff
