#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "lff/dit.hpp"
#include "lff/optimizer.hpp"

namespace lff {

struct TrainConfig {
    std::int64_t steps = 2000;
    double lr = 1e-3;
    double p_drop = 0.1;  // chance to swap in the silence token per step
    std::uint64_t seed = 42;
    std::int64_t val_pairs = 8;
    std::int64_t log_every = 100;  // progress stream only; CSV logs every step
};

struct TrainResult {
    double initial_val_mse = 0.0;
    double final_val_mse = 0.0;
    std::vector<double> losses;
    std::int64_t steps_run = 0;
};

// One-sample-per-step rectified flow training over a pool of scenes. Each
// step draws a scene, a timestep, fresh noise and the branch variable q,
// optionally drops the audio condition, then takes one Adam step on the
// masked velocity objective. Deterministic for a fixed seed. Writes one CSV
// row per step when csv_path is non-empty. A non-finite or exploding loss
// aborts with the step number in the message.
TrainResult train_loop(Model& m, const std::vector<SyntheticScene>& scenes,
                       const TrainConfig& tc, const std::string& csv_path = "",
                       std::ostream* progress = nullptr);

// Mean squared velocity error over a deterministic batch: timesteps on a
// fixed grid, noise from a seed-derived stream, scenes cycled in order.
double validation_mse(Model& m, const std::vector<SyntheticScene>& scenes, std::uint64_t seed,
                      std::int64_t pairs);

}  // namespace lff
