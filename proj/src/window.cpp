#include "lff/window.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lff/error.hpp"

namespace lff {

const char* weight_scheme_name(WeightScheme s) {
    switch (s) {
        case WeightScheme::logarithmic: return "logarithmic";
        case WeightScheme::fixed: return "fixed";
        case WeightScheme::uniform: return "uniform";
    }
    return "?";
}

WeightScheme parse_weight_scheme(const std::string& name) {
    if (name == "logarithmic") return WeightScheme::logarithmic;
    if (name == "fixed") return WeightScheme::fixed;
    if (name == "uniform") return WeightScheme::uniform;
    throw ConfigError("window.scheme: unknown value '" + name +
                      "' (expected logarithmic, fixed or uniform)");
}

namespace {

void check_overlap_size(std::int64_t m) {
    if (m < 2) {
        throw ConfigError("overlap weights: need m >= 2 (min-max normalization degenerates), got " +
                          std::to_string(m));
    }
}

}  // namespace

WeightCurve log_weights(std::int64_t m) {
    check_overlap_size(m);
    const double e1 = std::exp(1.0) - 1.0;
    std::vector<double> raw(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(m - 1);
        raw[static_cast<std::size_t>(i)] = std::log1p(u * e1);
    }
    const double lo = raw.front();
    const double hi = raw.back();
    WeightCurve c;
    c.scheme = WeightScheme::logarithmic;
    c.w.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) c.w[i] = (raw[i] - lo) / (hi - lo);
    return c;
}

WeightCurve fixed_weights(std::int64_t m) {
    check_overlap_size(m);
    WeightCurve c;
    c.scheme = WeightScheme::fixed;
    c.w.assign(static_cast<std::size_t>(m), 0.5);
    return c;
}

WeightCurve uniform_weights(std::int64_t m) {
    check_overlap_size(m);
    WeightCurve c;
    c.scheme = WeightScheme::uniform;
    c.w.resize(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i) {
        c.w[static_cast<std::size_t>(i)] =
            static_cast<double>(i) / static_cast<double>(m - 1);
    }
    return c;
}

WeightCurve make_weights(WeightScheme scheme, std::int64_t m) {
    switch (scheme) {
        case WeightScheme::logarithmic: return log_weights(m);
        case WeightScheme::fixed: return fixed_weights(m);
        case WeightScheme::uniform: return uniform_weights(m);
    }
    throw ConfigError("window.scheme: unknown scheme");
}

WindowPlan make_plan(std::int64_t total, std::int64_t length, std::int64_t overlap) {
    if (total < 1) throw ConfigError("window plan: total frame count must be >= 1");
    if (length < 1) throw ConfigError("window plan: window length must be >= 1");
    if (overlap < 2) throw ConfigError("window plan: overlap must be >= 2");
    if (overlap >= length) {
        throw ConfigError("window plan: overlap (" + std::to_string(overlap) +
                          ") must be smaller than window length (" + std::to_string(length) + ")");
    }
    WindowPlan plan;
    plan.total = total;
    plan.length = length;
    plan.overlap = overlap;
    if (length >= total) {
        plan.schedule.emplace_back(0, total);
        return plan;
    }
    std::int64_t s = 0;
    std::int64_t e = length;
    plan.schedule.emplace_back(s, e);
    while (e < total) {
        s += length - overlap;
        e = std::min(s + length, total);
        plan.schedule.emplace_back(s, e);
    }
    return plan;
}

Tensor euler_step(const Tensor& z, const Tensor& v, double t, double t_next) {
    if (z.shape != v.shape) {
        throw DimensionError("euler step: latent shape " + z.shape_str() +
                             " does not match velocity shape " + v.shape_str());
    }
    if (!(t_next < t)) throw DomainError("euler step: t_next must be < t");
    if (t_next < 0.0 || t > 1.0) throw DomainError("euler step: times must lie in [0, 1]");
    Tensor out = z;
    const double dt = t - t_next;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= dt * v.data[i];
    return out;
}

namespace {

// Frame-major latent buffer helpers: shape [L, ...], frames contiguous.
std::int64_t frame_numel(const Tensor& z) {
    std::int64_t n = 1;
    for (std::size_t i = 1; i < z.shape.size(); ++i) n *= z.shape[i];
    return n;
}

Tensor slice_frames(const Tensor& z, std::int64_t s, std::int64_t e) {
    const std::int64_t fn = frame_numel(z);
    std::vector<std::int64_t> shape = z.shape;
    shape[0] = e - s;
    Tensor out = Tensor::zeros(shape, z.dtype);
    std::copy(z.data.begin() + s * fn, z.data.begin() + e * fn, out.data.begin());
    return out;
}

void write_frames(Tensor& z, std::int64_t s, const Tensor& chunk) {
    const std::int64_t fn = frame_numel(z);
    std::copy(chunk.data.begin(), chunk.data.end(), z.data.begin() + s * fn);
}

Tensor run_windows(const DenoiseWindowFn& denoise, const Tensor& z_init, const WindowPlan& plan,
                   std::int64_t steps, const WeightCurve& curve, const SampleOptions& opts) {
    if (z_init.rank() < 1 || z_init.shape[0] != plan.total) {
        throw ConfigError("window sampler: latent buffer has " +
                          std::to_string(z_init.rank() < 1 ? 0 : z_init.shape[0]) +
                          " frames but the plan covers " + std::to_string(plan.total));
    }
    if (steps < 1) throw ConfigError("window sampler: steps must be >= 1");
    const std::int64_t m = plan.overlap;
    if (plan.schedule.size() > 1 && curve.size() != m) {
        throw ConfigError("window sampler: weight curve has " + std::to_string(curve.size()) +
                          " entries but the plan overlap is " + std::to_string(m));
    }
    const std::int64_t fn = frame_numel(z_init);

    Tensor z = z_init;
    for (std::int64_t j = steps; j >= 1; --j) {
        const double t = static_cast<double>(j) / static_cast<double>(steps);
        const double t_next = static_cast<double>(j - 1) / static_cast<double>(steps);
        Tensor snapshot;
        if (opts.double_buffer) snapshot = z;
        for (const auto& [s, e] : plan.schedule) {
            const Tensor& src = opts.double_buffer ? snapshot : z;
            Tensor window = slice_frames(src, s, e);
            Tensor out = denoise(window, s, e, t, t_next);
            if (out.shape != window.shape) {
                throw DimensionError("window sampler: denoiser returned " + out.shape_str() +
                                     " for a window of shape " + window.shape_str());
            }
            const bool fuse = s != 0 && (j != steps || opts.fuse_first_step);
            if (fuse) {
                // The previous window's freshly written values for [s, s+m)
                // still sit in the shared buffer; blend them in before the
                // bulk write below replaces the whole range.
                for (std::int64_t i = 0; i < m; ++i) {
                    const double w = curve.w[static_cast<std::size_t>(i)];
                    double* prev = z.data.data() + (s + i) * fn;
                    double* cur = out.data.data() + i * fn;
                    for (std::int64_t p = 0; p < fn; ++p) {
                        cur[p] = w * cur[p] + (1.0 - w) * prev[p];
                    }
                }
            }
            write_frames(z, s, out);
            if (opts.trace) opts.trace->push_back({j, s, e, fuse});
        }
    }
    return z;
}

}  // namespace

Tensor dwsw_sample(const DenoiseWindowFn& denoise, const Tensor& z_init, const WindowPlan& plan,
                   std::int64_t steps, const WeightCurve& curve, const SampleOptions& opts) {
    return run_windows(denoise, z_init, plan, steps, curve, opts);
}

Tensor plain_window_sample(const DenoiseWindowFn& denoise, const Tensor& z_init,
                           const WindowPlan& plan, std::int64_t steps,
                           const SampleOptions& opts) {
    WeightCurve ones;
    ones.scheme = WeightScheme::fixed;
    ones.w.assign(static_cast<std::size_t>(plan.overlap), 1.0);
    return run_windows(denoise, z_init, plan, steps, ones, opts);
}

Tensor motion_frame_sample(const DenoiseClipFn& generate, const WindowPlan& plan,
                           const std::vector<std::int64_t>& frame_shape) {
    std::vector<std::int64_t> full_shape;
    full_shape.push_back(plan.total);
    full_shape.insert(full_shape.end(), frame_shape.begin(), frame_shape.end());
    Tensor out = Tensor::zeros(full_shape);
    const std::int64_t m = plan.overlap;
    bool first = true;
    for (const auto& [s, e] : plan.schedule) {
        Tensor prev_tail;
        if (!first) prev_tail = slice_frames(out, s, s + m);
        Tensor clip = generate(prev_tail, s, e);
        std::vector<std::int64_t> want = full_shape;
        want[0] = e - s;
        if (clip.shape != want) {
            throw DimensionError("motion-frame sampler: clip generator returned " +
                                 clip.shape_str() + " for a clip of " + std::to_string(e - s) +
                                 " frames");
        }
        if (first) {
            write_frames(out, s, clip);
        } else {
            const std::int64_t fn = frame_numel(out);
            std::copy(clip.data.begin() + m * fn, clip.data.end(),
                      out.data.begin() + (s + m) * fn);
        }
        first = false;
    }
    return out;
}

}  // namespace lff
