#include "lff/guidance.hpp"

#include "lff/error.hpp"

namespace lff {

const char* guidance_mode_name(GuidanceMode m) {
    switch (m) {
        case GuidanceMode::native: return "native";
        case GuidanceMode::cfg: return "cfg";
        case GuidanceMode::off: return "off";
    }
    return "?";
}

GuidanceMode parse_guidance_mode(const std::string& name) {
    if (name == "native") return GuidanceMode::native;
    if (name == "cfg") return GuidanceMode::cfg;
    if (name == "off") return GuidanceMode::off;
    throw ConfigError("guidance.mode: unknown value '" + name +
                      "' (expected native, cfg or off)");
}

Tensor guidance_combine(const BranchSet& b, double alpha, double beta) {
    if (alpha == 0.0 && beta == 0.0) return b.d_full;
    if (b.d_no_audio.shape != b.d_full.shape || b.d_no_refined.shape != b.d_full.shape) {
        throw DimensionError("guidance: branch shapes disagree (" + b.d_full.shape_str() + ", " +
                             b.d_no_audio.shape_str() + ", " + b.d_no_refined.shape_str() + ")");
    }
    Tensor out = b.d_full;
    const double w = 1.0 + alpha + beta;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = w * b.d_full.data[i] - alpha * b.d_no_audio.data[i] -
                      beta * b.d_no_refined.data[i];
    }
    return out;
}

Tensor cfg_combine(const Tensor& d_cond, const Tensor& d_uncond, double scale) {
    if (d_cond.shape != d_uncond.shape) {
        throw DimensionError("guidance: cfg branch shapes disagree (" + d_cond.shape_str() +
                             " vs " + d_uncond.shape_str() + ")");
    }
    Tensor out = d_cond;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = d_uncond.data[i] + scale * (d_cond.data[i] - d_uncond.data[i]);
    }
    return out;
}

BranchSet evaluate_branches(Model& m, const Tensor& z, const ConditioningPack& pack,
                            const ContextualAudio& audio, double t, const ForwardFlags& base) {
    BranchSet b;
    b.d_full = model_velocity(m, z, pack, audio, t, base);
    ForwardFlags no_audio = base;
    no_audio.use_null_audio = true;
    b.d_no_audio = model_velocity(m, z, pack, audio, t, no_audio);
    ForwardFlags no_refined = base;
    no_refined.skip_audio_injection = true;
    b.d_no_refined = model_velocity(m, z, pack, audio, t, no_refined);
    return b;
}

Tensor guided_velocity(Model& m, const Tensor& z, const ConditioningPack& pack,
                       const ContextualAudio& audio, double t, const GuidanceConfig& g,
                       const ForwardFlags& base) {
    switch (g.mode) {
        case GuidanceMode::off:
            return model_velocity(m, z, pack, audio, t, base);
        case GuidanceMode::cfg: {
            Tensor cond = model_velocity(m, z, pack, audio, t, base);
            ForwardFlags uncond = base;
            uncond.use_null_audio = true;
            Tensor un = model_velocity(m, z, pack, audio, t, uncond);
            return cfg_combine(cond, un, g.cfg_scale);
        }
        case GuidanceMode::native: {
            if (g.alpha == 0.0 && g.beta == 0.0) return model_velocity(m, z, pack, audio, t, base);
            BranchSet b = evaluate_branches(m, z, pack, audio, t, base);
            return guidance_combine(b, g.alpha, g.beta);
        }
    }
    throw ConfigError("guidance: unknown mode");
}

}  // namespace lff
