#pragma once

#include <string>

#include "lff/dit.hpp"
#include "lff/guidance.hpp"
#include "lff/window.hpp"

#include "json.hpp"

namespace lff {

// Everything a run needs, defaults materialized. JSON schema groups:
//   model    {dim, blocks, heads, patch, channels, height, width, text_tokens}
//   adapter  {k, blocks}
//   data     {frames, audio_dim, scenes}
//   train    {steps, lr, p_drop, seed, val_pairs}
//   guidance {mode, alpha, beta, cfg_scale}
//   window   {total, length, overlap, scheme, fuse_first_step, double_buffer}
//   sampler  {steps}
//   ablation {adapter_off, modulation_random, cattn_off}
//   baseline (string: "", "motion_frame", "plain_window")
//   metrics  {clip_len}   0 means "use window.length"
// Unknown keys are rejected so typos surface as config errors.
struct ExperimentConfig {
    ModelConfig model;

    std::int64_t scenes = 4;

    std::int64_t train_steps = 2000;
    double lr = 1e-3;
    double p_drop = 0.1;
    std::uint64_t seed = 42;
    std::int64_t val_pairs = 8;

    GuidanceConfig guidance;

    std::int64_t window_total = 256;
    std::int64_t window_length = 16;
    std::int64_t window_overlap = 8;
    WeightScheme scheme = WeightScheme::logarithmic;
    bool fuse_first_step = false;
    bool double_buffer = false;
    std::int64_t sampler_steps = 50;

    bool adapter_off = false;
    bool modulation_random = false;
    bool cattn_off = false;

    std::string baseline;  // empty = weighted sliding window

    std::int64_t clip_len = 0;

    std::int64_t effective_clip_len() const { return clip_len > 0 ? clip_len : window_length; }
};

ExperimentConfig default_config();
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& c);
void validate_config(const ExperimentConfig& c);

// LFF_SEED (decimal) overrides the configured seed when set.
void apply_env_seed(ExperimentConfig& c);

// run.json: resolved config + the invoking command line.
void write_run_json(const std::string& dir, const ExperimentConfig& c,
                    const std::string& command);

}  // namespace lff
