#pragma once

#include <string>

#include "lff/dit.hpp"

namespace lff {

enum class GuidanceMode { native, cfg, off };

struct GuidanceConfig {
    GuidanceMode mode = GuidanceMode::native;
    double alpha = 4.5;     // weight on the no-audio branch
    double beta = 3.0;      // weight on the unrefined-audio branch
    double cfg_scale = 5.5; // classifier-free baseline scale
};

const char* guidance_mode_name(GuidanceMode m);
GuidanceMode parse_guidance_mode(const std::string& name);

// The three velocity predictions the native rule combines: full
// conditioning, silence-token audio, and audio injection removed.
struct BranchSet {
    Tensor d_full;
    Tensor d_no_audio;
    Tensor d_no_refined;
};

// (1 + alpha + beta) d_full - alpha d_no_audio - beta d_no_refined.
// alpha == beta == 0 returns d_full untouched.
Tensor guidance_combine(const BranchSet& b, double alpha, double beta);

// d_uncond + scale (d_cond - d_uncond).
Tensor cfg_combine(const Tensor& d_cond, const Tensor& d_uncond, double scale);

BranchSet evaluate_branches(Model& m, const Tensor& z, const ConditioningPack& pack,
                            const ContextualAudio& audio, double t,
                            const ForwardFlags& base = {});

// One guided velocity evaluation at (z, t) under the configured mode. Only
// the branches the mode needs are run.
Tensor guided_velocity(Model& m, const Tensor& z, const ConditioningPack& pack,
                       const ContextualAudio& audio, double t, const GuidanceConfig& g,
                       const ForwardFlags& base = {});

}  // namespace lff
