#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "lff/tensor.hpp"

namespace lff {

enum class WeightScheme { logarithmic, fixed, uniform };

const char* weight_scheme_name(WeightScheme s);
WeightScheme parse_weight_scheme(const std::string& name);

// Blend weights over an overlap of m frames, index 0 nearest the previous
// window. w[i] multiplies the current window's value, 1 - w[i] the previous
// one, so every curve must start low and end high to hand over smoothly.
struct WeightCurve {
    std::vector<double> w;
    WeightScheme scheme = WeightScheme::logarithmic;
    std::int64_t size() const { return static_cast<std::int64_t>(w.size()); }
};

// log1p ramp, min-max normalized to [0, 1]: w_i = log(1 + i) / log(m) after
// scaling the linear ramp by (m - 1). Front-loads the previous window.
WeightCurve log_weights(std::int64_t m);
WeightCurve fixed_weights(std::int64_t m);    // 0.5 everywhere
WeightCurve uniform_weights(std::int64_t m);  // linear 0 .. 1
WeightCurve make_weights(WeightScheme scheme, std::int64_t m);

// Window schedule over L frames: length l, overlap m, stride l - m, last
// window clipped to the sequence end. l >= L collapses to one window.
struct WindowPlan {
    std::int64_t total = 0;
    std::int64_t length = 0;
    std::int64_t overlap = 0;
    std::vector<std::pair<std::int64_t, std::int64_t>> schedule;  // [start, end)
};
WindowPlan make_plan(std::int64_t total, std::int64_t length, std::int64_t overlap);

// One deterministic flow integration step z - (t - t_next) v.
Tensor euler_step(const Tensor& z, const Tensor& v, double t, double t_next);

// The caller-supplied per-window denoiser: takes the window's current
// latents [e-s, ...] and returns them advanced from t to t_next.
using DenoiseWindowFn = std::function<Tensor(const Tensor& window, std::int64_t s, std::int64_t e,
                                             double t, double t_next)>;

struct WindowTraceEntry {
    std::int64_t t_index = 0;  // timestep counter, steps .. 1
    std::int64_t s = 0;
    std::int64_t e = 0;
    bool fused = false;
};

struct SampleOptions {
    bool fuse_first_step = false;  // also blend at the very first timestep
    bool double_buffer = false;    // windows read a per-timestep snapshot
    std::vector<WindowTraceEntry>* trace = nullptr;
};

// Sliding-window denoising over a shared latent buffer. Per timestep every
// window is denoised in order; each window (except the first, and everything
// at the first timestep) then blends its leading overlap with the values the
// previous window just wrote there, weighted by the curve.
Tensor dwsw_sample(const DenoiseWindowFn& denoise, const Tensor& z_init, const WindowPlan& plan,
                   std::int64_t steps, const WeightCurve& curve, const SampleOptions& opts = {});

// Same schedule, hard overwrite of the overlap (w == 1 everywhere).
Tensor plain_window_sample(const DenoiseWindowFn& denoise, const Tensor& z_init,
                           const WindowPlan& plan, std::int64_t steps,
                           const SampleOptions& opts = {});

// Motion-frame baseline: clips are generated one after another to
// completion; each clip after the first receives the previous clip's last
// `overlap` frames and must return fully denoised frames for [s, e). Only
// the non-overlapping tail [s + overlap, e) of later clips lands in the
// output, so conditioning frames are never overwritten.
using DenoiseClipFn = std::function<Tensor(const Tensor& prev_tail, std::int64_t s,
                                           std::int64_t e)>;
Tensor motion_frame_sample(const DenoiseClipFn& generate, const WindowPlan& plan,
                           const std::vector<std::int64_t>& frame_shape);

}  // namespace lff
