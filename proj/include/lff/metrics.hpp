#pragma once

#include <array>
#include <string>
#include <vector>

#include "lff/synth.hpp"

namespace lff {

struct ClipShift {
    std::int64_t clip = 0;
    double mean_shift = 0.0;
    double std_shift = 0.0;
};

// Global first/second moments per clip of `clip_len` frames, reported as
// absolute drift from clip 0. A trailing partial clip is dropped.
std::vector<ClipShift> latent_drift(const Tensor& frames, std::int64_t clip_len);

// CIEDE2000 between two sRGB triples in [0,1]^3: sRGB -> linear -> XYZ (D65)
// -> L*a*b* -> dE00 with the full lightness/chroma/hue and rotation terms.
double ciede2000(const std::array<double, 3>& rgb_a, const std::array<double, 3>& rgb_b);

// Mean dE00 over pixels of two [3, H, W] frames. Values are clamped to
// [0, 1] first so raw rollout latents (slightly out of gamut) stay usable;
// the scalar form above keeps the strict range check.
double frame_ciede(const Tensor& frame_a, const Tensor& frame_b);

// Pearson correlation of the audio amplitude track against the mean frame
// intensity inside the lip mask.
double sync_proxy(const RawAudioFeatures& audio, const Tensor& frames, const Tensor& lip_mask);

struct DriftReportRow {
    std::int64_t clip = 0;
    double mean_shift = 0.0;
    double std_shift = 0.0;
    double ciede = 0.0;   // mean frame_ciede against the same offsets in clip 0
    double sync_r = 0.0;  // sync proxy within the clip
};

std::vector<DriftReportRow> drift_report(const Tensor& frames, const RawAudioFeatures& audio,
                                         const Tensor& lip_mask, std::int64_t clip_len);
void write_drift_csv(const std::string& path, const std::vector<DriftReportRow>& rows);

}  // namespace lff
