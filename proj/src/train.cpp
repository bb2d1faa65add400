#include "lff/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "lff/error.hpp"

namespace lff {

namespace {

constexpr std::uint64_t kTrainStream = 0x7472616e;  // step-level draws
constexpr std::uint64_t kValStream = 0x76616c64;    // validation noise

Tensor gauss_like(Rng& rng, const std::vector<std::int64_t>& shape) {
    Tensor out = Tensor::zeros(shape);
    for (auto& x : out.data) x = rng.gauss();
    return out;
}

struct SceneInputs {
    ContextualAudio audio;
    ConditioningPack pack;
};

void check_scene(const Model& m, const SyntheticScene& s, std::size_t idx) {
    const auto& c = m.cfg;
    if (s.video.shape != std::vector<std::int64_t>{c.frames, c.channels, c.height, c.width}) {
        throw ConfigError("train: scene " + std::to_string(idx) + " video shape " +
                          s.video.shape_str() + " does not match the model (" +
                          std::to_string(c.frames) + " frames, " + std::to_string(c.channels) +
                          "x" + std::to_string(c.height) + "x" + std::to_string(c.width) + ")");
    }
    if (s.audio.dim() != c.audio_dim) {
        throw ConfigError("train: scene " + std::to_string(idx) + " audio dim " +
                          std::to_string(s.audio.dim()) + " does not match model audio_dim " +
                          std::to_string(c.audio_dim));
    }
}

}  // namespace

double validation_mse(Model& m, const std::vector<SyntheticScene>& scenes, std::uint64_t seed,
                      std::int64_t pairs) {
    if (scenes.empty()) throw ConfigError("validation: scene pool is empty");
    if (pairs < 1) throw ConfigError("validation: pairs must be >= 1");
    Rng rng(seed, kValStream);
    double acc = 0.0;
    for (std::int64_t j = 0; j < pairs; ++j) {
        const SyntheticScene& s = scenes[static_cast<std::size_t>(j) % scenes.size()];
        const double t = (static_cast<double>(j) + 0.5) / static_cast<double>(pairs);
        Tensor noise = gauss_like(rng, s.video.shape);
        Tensor z_t = flow_forward(s.video, noise, t);
        Tensor target = velocity_target(s.video, noise);
        ContextualAudio audio = build_audio_context(s.audio, m.cfg.adapter_k);
        ConditioningPack pack = assemble_conditioning(s.reference_frame, m.cfg.frames);
        Tensor v = model_velocity(m, z_t, pack, audio, t);
        double se = 0.0;
        for (std::size_t i = 0; i < v.data.size(); ++i) {
            const double d = v.data[i] - target.data[i];
            se += d * d;
        }
        acc += se / static_cast<double>(v.data.size());
    }
    return acc / static_cast<double>(pairs);
}

TrainResult train_loop(Model& m, const std::vector<SyntheticScene>& scenes, const TrainConfig& tc,
                       const std::string& csv_path, std::ostream* progress) {
    if (scenes.empty()) throw ConfigError("train: scene pool is empty");
    if (tc.steps < 0) throw ConfigError("train: steps must be >= 0");
    if (tc.p_drop < 0.0 || tc.p_drop > 1.0) throw ConfigError("train: p_drop must lie in [0, 1]");
    for (std::size_t i = 0; i < scenes.size(); ++i) check_scene(m, scenes[i], i);

    std::vector<SceneInputs> inputs;
    inputs.reserve(scenes.size());
    for (const auto& s : scenes) {
        inputs.push_back({build_audio_context(s.audio, m.cfg.adapter_k),
                          assemble_conditioning(s.reference_frame, m.cfg.frames)});
    }

    std::ofstream csv;
    if (!csv_path.empty()) {
        csv.open(csv_path);
        if (!csv) throw Error("train: cannot open CSV log '" + csv_path + "'");
        csv << "step,loss,branch,q,t\n";
    }

    TrainResult result;
    result.initial_val_mse = validation_mse(m, scenes, tc.seed, tc.val_pairs);

    AdamConfig ac;
    ac.lr = tc.lr;
    Adam opt(m.store, ac);
    Rng rng(tc.seed, kTrainStream);
    Tape tape;
    TapeGuard tape_guard(&tape);

    char row[160];
    for (std::int64_t step = 0; step < tc.steps; ++step) {
        const std::size_t si = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(scenes.size())));
        const double t = rng.uniform();
        const double q = rng.uniform();
        const bool drop = rng.uniform() < tc.p_drop;
        const SyntheticScene& s = scenes[si];
        Tensor noise = gauss_like(rng, s.video.shape);

        tape.clear();
        Tensor z_t = flow_forward(s.video, noise, t);
        Tensor target = velocity_target(s.video, noise);
        ForwardFlags flags;
        flags.use_null_audio = drop;
        TimestepEmbeds te = timestep_embed(t, m.tparams);
        Var v = model_forward(m, z_t, inputs[si].pack, inputs[si].audio, te, flags);
        Var loss = masked_loss(v, target, s.face_mask, s.lip_mask, q);
        const double loss_value = val(loss).data[0];
        if (!std::isfinite(loss_value) || loss_value > 1e6) {
            throw NumericError("train: diverged at step " + std::to_string(step) + " (loss=" +
                               std::to_string(loss_value) + "); aborting before the update");
        }
        tape.backward(loss);
        opt.step();

        result.losses.push_back(loss_value);
        ++result.steps_run;
        if (csv.is_open()) {
            std::snprintf(row, sizeof(row), "%lld,%.17g,%s,%.17g,%.17g\n",
                          static_cast<long long>(step), loss_value,
                          loss_branch_name(loss_branch(q)), q, t);
            csv << row;
        }
        if (progress && tc.log_every > 0 &&
            (step % tc.log_every == 0 || step + 1 == tc.steps)) {
            (*progress) << "step " << step << " loss " << loss_value << "\n";
        }
    }

    result.final_val_mse = validation_mse(m, scenes, tc.seed, tc.val_pairs);
    return result;
}

}  // namespace lff
