#pragma once

#include <vector>

#include "lff/nn.hpp"
#include "lff/params.hpp"
#include "lff/synth.hpp"

namespace lff {

// Audio rows with their temporal neighborhood concatenated: row i holds
// frames i-k..i+k (edges replicated), width (2k+1) * d.
struct ContextualAudio {
    Tensor values;
    std::int64_t k = 0;
    std::int64_t raw_dim = 0;
    std::int64_t frames() const { return values.shape[0]; }
    std::int64_t width() const { return values.shape[1]; }
};

ContextualAudio build_audio_context(const RawAudioFeatures& a, std::int64_t k);
// Window slice [begin, end) of already-contextualized rows.
ContextualAudio slice_context(const ContextualAudio& ctx, std::int64_t begin, std::int64_t end);

// Timestep pathway: sinusoidal features of t through two successive MLPs
// give the overall embedding e [1 x D]; a linear projection of e gives the
// six modulation rows e0 [6 x D]; r [2 x D] is the learnable shift added to
// the duplicated e.
struct TimestepParams {
    MlpP mlp1, mlp2;
    LinearP proj_e0;
    Var r;
    std::int64_t dim = 0;
};
TimestepParams make_timestep_params(ParamStore& store, std::int64_t d, Rng& rng);

struct TimestepEmbeds {
    Var e;   // [1, D]
    Var e0;  // [6, D]
    Var r;   // [2, D]
};
TimestepEmbeds timestep_embed(double t, const TimestepParams& p);
Tensor timestep_features(double t, std::int64_t dim);

// [2, D]: both rows copy e, then r is added.
Var repeat_shift(const Var& e, const Var& r);

// One refinement block: project + normalize the audio rows, modulate with
// e0, cross-attend into the latent tokens, modulate and gate the MLP branch.
struct AdapterBlockP {
    MlpP mlp_in;
    LayerNormP ln1;  // after the input MLP
    LayerNormP ln2;  // before (and residually around) the cross-attention
    AttnP cattn;     // audio queries, latent keys/values
    LayerNormP ln3;  // before the gated MLP branch
    MlpP mlp_eta;
};

struct AdapterP {
    std::vector<AdapterBlockP> blocks;
    MlpP mlp_out;    // final projection after the e-modulation
    Var null_audio;  // [1, ctx_width] learned silence token
    Var e_static;    // [1, D]  fixed random replacements for the timestep
    Var e0_static;   // [6, D]  embeddings (modulation-ablation variant)
    std::int64_t ctx_width = 0;
    std::int64_t dim = 0;
};
AdapterP make_adapter_params(ParamStore& store, std::int64_t ctx_width, std::int64_t d,
                             std::int64_t n_blocks, std::int64_t heads, Rng& rng);

struct AdapterFlags {
    bool cattn_off = false;          // drop the cross-attention term
    bool modulation_random = false;  // use the static vectors instead of e/e0
};

// emb_aud [F, ctx_width], z_tokens [Nz, D] -> refined audio tokens [F, D].
Var adapter_forward(const Var& emb_aud, const TimestepEmbeds& te, const Var& z_tokens,
                    const AdapterP& p, const AdapterFlags& flags = {});

// The learned null token replicated to F rows (unconditional branches and
// training-time condition dropout).
Var null_audio_rows(const AdapterP& p, std::int64_t frames);

}  // namespace lff
