#pragma once

#include <string>

#include "lff/rng.hpp"
#include "lff/tensor.hpp"

namespace lff {

// Per-frame audio feature rows; column 0 carries the instantaneous
// amplitude, remaining columns are harmonics of it.
struct RawAudioFeatures {
    Tensor values;  // [F, d]
    std::int64_t frames() const { return values.shape[0]; }
    std::int64_t dim() const { return values.shape[1]; }
};

// The synthetic talking-face stand-in: a static textured background with a
// face rectangle whose mouth region brightens linearly with the audio
// amplitude, plus a slowly moving pattern outside the face so long rollouts
// have temporal structure to track.
struct SyntheticScene {
    Tensor reference_frame;  // [C, H, W]
    Tensor video;            // [F, C, H, W]
    RawAudioFeatures audio;
    Tensor face_mask;        // [H, W] binary
    Tensor lip_mask;         // [H, W] binary
};

// frames >= 1, height/width >= 8 (the face and lip rectangles need room),
// audio_dim >= 1. Deterministic given the rng state. Frame 0 is the
// reference frame; mouth mean intensity is affine in amplitude.
SyntheticScene generate_scene(Rng& rng, std::int64_t frames, std::int64_t height,
                              std::int64_t width, std::int64_t audio_dim);

// Same scene construction but driven by a caller-provided amplitude track
// (one value per frame, in [0, 1]); used for degenerate-audio checks and for
// rendering ground truth against known audio.
SyntheticScene generate_scene(Rng& rng, std::int64_t frames, std::int64_t height,
                              std::int64_t width, std::int64_t audio_dim,
                              const std::vector<double>& amp_track);

// Amplitude track (column 0 of the feature rows).
std::vector<double> amplitude(const RawAudioFeatures& audio);

// Scene directory: one TNSR file per field plus scene.json with dims, seed
// and file names.
void write_scene(const std::string& dir, const SyntheticScene& scene, std::uint64_t seed);
SyntheticScene load_scene(const std::string& dir);

}  // namespace lff
