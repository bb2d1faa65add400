#pragma once

#include <map>
#include <vector>

#include "lff/adapter.hpp"

namespace lff {

struct ModelConfig {
    std::int64_t dim = 64;
    std::int64_t blocks = 4;
    std::int64_t heads = 1;
    std::int64_t patch = 4;
    std::int64_t channels = 3;
    std::int64_t height = 16;
    std::int64_t width = 16;
    std::int64_t frames = 16;  // training window length
    std::int64_t adapter_k = 2;
    std::int64_t adapter_blocks = 2;
    std::int64_t audio_dim = 4;
    std::int64_t text_tokens = 4;

    std::int64_t ctx_width() const { return (2 * adapter_k + 1) * audio_dim; }
    // channels entering the token projection: noisy + reference + mask
    std::int64_t in_channels() const { return 2 * channels + 1; }
    std::int64_t tokens_per_frame() const { return (height / patch) * (width / patch); }
};

// Data-side conditioning: the reference pathway (frame-0 content plus a
// binary temporal mask) and the raw reference frame the image encoder reads.
// Token-side conditioning (image tokens, text bank, refined audio) is
// produced from parameters during the forward pass.
struct ConditioningPack {
    Tensor reference_latent;  // [F, C, H, W], zeros beyond frame 0
    Tensor temporal_mask;     // [F, 1, H, W], ones at frame 0
    Tensor reference_frame;   // [C, H, W]
};
ConditioningPack assemble_conditioning(const Tensor& reference_frame, std::int64_t frames);

struct DiTBlockP {
    AttnP self_attn;
    AttnP cross_audio;
    AttnP cross_image;
    AttnP cross_text;
    MlpP ff;
    LinearP mod;  // e -> 6 rows: shift/scale/gate for attention and MLP
};

struct DiTP {
    LinearP patch_proj;  // (2C+1)*p^2 -> D
    LinearP img_proj;    // C*p^2 -> D, first stage of the image encoder
    MlpP img_mlp;        // second stage
    Var text;            // [Nt, D] fixed learned bank
    std::vector<DiTBlockP> blocks;
    LinearP final_mod;  // e -> 2 rows
    LinearP out_proj;   // D -> p^2 * C, starts at zero so the net begins silent
};

struct Model {
    ModelConfig cfg;
    ParamStore store;
    TimestepParams tparams;
    AdapterP adapter;
    DiTP dit;
    std::uint64_t init_seed = 0;

    // per-frame-count caches: patch/unpatch permutations and position rows
    std::map<std::int64_t, std::vector<std::int64_t>> patch_idx;
    std::map<std::int64_t, std::vector<std::int64_t>> unpatch_idx;
    std::map<std::int64_t, Tensor> pos;
};
Model build_model(const ModelConfig& cfg, std::uint64_t seed);

struct ForwardFlags {
    bool skip_audio_injection = false;  // remove the refined-audio term of the injection
    bool use_null_audio = false;        // feed the learned silence token to the adapter
    AdapterFlags adapter;
};

// Velocity prediction [F, C, H, W]. F may be shorter than cfg.frames (final
// sliding window); positions are window-local.
Var model_forward(Model& m, const Tensor& z, const ConditioningPack& pack,
                  const ContextualAudio& audio, const TimestepEmbeds& te,
                  const ForwardFlags& flags = {});

// Sampling-side convenience: embeds t itself and runs without a tape.
Tensor model_velocity(Model& m, const Tensor& z, const ConditioningPack& pack,
                      const ContextualAudio& audio, double t, const ForwardFlags& flags = {});

// Straight-line corruption x_t = (1-t) x0 + t noise and its velocity target
// noise - x0.
Tensor flow_forward(const Tensor& x0, const Tensor& noise, double t);
Tensor velocity_target(const Tensor& x0, const Tensor& noise);

// Piecewise masked objective: q in [0.4, 0.5) weights by the face mask,
// q >= 0.5 by the lip mask, otherwise by (1 + face + lip). Mean over all
// elements in every branch.
enum class LossBranch { combined = 0, face = 1, lip = 2 };
LossBranch loss_branch(double q);
const char* loss_branch_name(LossBranch b);
Var masked_loss(const Var& v_pred, const Tensor& v_target, const Tensor& face_mask,
                const Tensor& lip_mask, double q);

}  // namespace lff
