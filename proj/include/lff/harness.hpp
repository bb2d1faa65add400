#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "lff/config.hpp"
#include "lff/guidance.hpp"
#include "lff/metrics.hpp"
#include "lff/train.hpp"
#include "lff/window.hpp"

namespace lff {

// Deterministic training pool derived from the config seed; gen-data writes
// exactly these scenes, so on-disk and in-memory runs see the same data.
std::vector<SyntheticScene> make_scenes(const ExperimentConfig& cfg);

// Accepts either a checkpoint directory itself or a train output directory
// (where the final checkpoint lives in checkpoint_final/).
std::string resolve_checkpoint(const std::string& dir);

struct RolloutResult {
    Tensor latents;  // [L, C, H, W]
    SyntheticScene scene;
};

// Long-sequence generation: builds an evaluation scene of window.total
// frames, then integrates the flow over the window schedule under the
// configured guidance, ablation switches and baseline strategy.
RolloutResult rollout(Model& model, const ExperimentConfig& cfg, std::uint64_t scene_seed,
                      std::uint64_t noise_seed, std::ostream* progress = nullptr);

struct RolloutMetrics {
    double final_mean_shift = 0.0;
    double final_std_shift = 0.0;
    double final_ciede = 0.0;
    double sync_r = 0.0;
    double drift_score = 0.0;  // final_mean_shift + final_std_shift
};
RolloutMetrics evaluate_rollout(const RolloutResult& r, std::int64_t clip_len);

// Paired-seed comparisons behind the directional claims: each seed gets its
// own evaluation scene and starting noise, shared across the two variants.
struct DirectionResult {
    int wins = 0;
    int total = 0;
    std::vector<std::string> rows;  // per-seed summaries for logs
};
DirectionResult adapter_drift_direction(const ExperimentConfig& cfg, Model& model, int n_seeds,
                                        std::ostream* log = nullptr);
DirectionResult guidance_sync_direction(const ExperimentConfig& cfg, Model& model, int n_seeds,
                                        std::ostream* log = nullptr);

// Seam discontinuity of a weight scheme on a stub denoiser that paints each
// window with its own constant: the max adjacent-frame jump of the fused
// sequence, in units of the between-window gap.
struct SeamStats {
    double max_jump = 0.0;
    double mean_jump = 0.0;
};
SeamStats stub_seam_stats(WeightScheme scheme, std::int64_t total, std::int64_t length,
                          std::int64_t overlap, std::int64_t steps);

// CLI entry points. Each writes run.json plus its artifacts into out_dir.
void cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir,
                  const std::string& command, std::ostream& log);
void cmd_train(const ExperimentConfig& cfg, const std::string& data_dir,
               const std::string& out_dir, const std::string& command, std::ostream& log);
void cmd_sample(const ExperimentConfig& cfg, const std::string& ckpt_dir,
                const std::string& out_dir, const std::string& command, std::ostream& log);
void cmd_ablate(const ExperimentConfig& cfg, const std::string& ckpt_dir,
                const std::string& grid, const std::string& out_dir, const std::string& command,
                std::ostream& log);
void cmd_metrics(const ExperimentConfig& cfg, const std::string& latents_path,
                 const std::string& scene_dir, const std::string& out_dir,
                 const std::string& command, std::ostream& log);

// Named invariant checks spanning every module; returns the failure count.
int selftest_run(std::ostream& out);

}  // namespace lff
