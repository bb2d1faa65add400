#include "lff/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "lff/error.hpp"
#include "lff/tensor_io.hpp"

namespace lff {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr double kTau = 6.283185307179586;
}

SyntheticScene generate_scene(Rng& rng, std::int64_t frames, std::int64_t height,
                              std::int64_t width, std::int64_t audio_dim) {
    return generate_scene(rng, frames, height, width, audio_dim, {});
}

SyntheticScene generate_scene(Rng& rng, std::int64_t frames, std::int64_t height,
                              std::int64_t width, std::int64_t audio_dim,
                              const std::vector<double>& amp_track) {
    if (frames < 1) throw ConfigError("generate_scene: frames must be >= 1");
    if (height < 8 || width < 8) {
        throw ConfigError("generate_scene: " + std::to_string(height) + "x" +
                          std::to_string(width) +
                          " too small to contain the face and lip rectangles (need >= 8x8)");
    }
    if (audio_dim < 1) throw ConfigError("generate_scene: audio_dim must be >= 1");
    if (!amp_track.empty() && static_cast<std::int64_t>(amp_track.size()) != frames) {
        throw ConfigError("generate_scene: amplitude track length " +
                          std::to_string(amp_track.size()) + " does not match frames " +
                          std::to_string(frames));
    }

    const std::int64_t C = 3;
    const std::int64_t face_r0 = height / 4, face_r1 = 3 * height / 4;
    const std::int64_t face_c0 = width / 4, face_c1 = 3 * width / 4;
    const std::int64_t lip_r0 = height / 2, lip_r1 = lip_r0 + std::max<std::int64_t>(1, height / 8);
    const std::int64_t lip_c0 = width / 2 - std::max<std::int64_t>(1, width / 8);
    const std::int64_t lip_c1 = width / 2 + std::max<std::int64_t>(1, width / 8);

    SyntheticScene scene;
    scene.face_mask = Tensor::zeros({height, width});
    scene.lip_mask = Tensor::zeros({height, width});
    for (std::int64_t r = face_r0; r < face_r1; ++r)
        for (std::int64_t c = face_c0; c < face_c1; ++c) scene.face_mask.at(r, c) = 1.0;
    for (std::int64_t r = lip_r0; r < lip_r1; ++r)
        for (std::int64_t c = lip_c0; c < lip_c1; ++c) scene.lip_mask.at(r, c) = 1.0;

    // identity: static per-seed texture and skin tone
    Tensor texture = Tensor::zeros({C, height, width});
    for (double& v : texture.data) v = 0.35 + 0.25 * rng.uniform();
    const double skin[3] = {0.72 + 0.08 * rng.uniform(), 0.55 + 0.08 * rng.uniform(),
                            0.45 + 0.08 * rng.uniform()};

    // amplitude track and pattern speeds
    const double amp_freq = 0.05 + 0.10 * rng.uniform();
    const double amp_phase = kTau * rng.uniform();
    const double drift_speed = 0.3 + 0.4 * rng.uniform();
    const double drift_phase = kTau * rng.uniform();

    scene.audio.values = Tensor::zeros({frames, audio_dim});
    std::vector<double> amp(static_cast<std::size_t>(frames));
    for (std::int64_t i = 0; i < frames; ++i) {
        double a = amp_track.empty()
                       ? 0.5 + 0.4 * std::sin(kTau * amp_freq * static_cast<double>(i) + amp_phase)
                       : amp_track[static_cast<std::size_t>(i)];
        amp[static_cast<std::size_t>(i)] = a;
        scene.audio.values.at(i, 0) = a;
        for (std::int64_t j = 1; j < audio_dim; ++j) {
            scene.audio.values.at(i, j) =
                0.5 * std::sin(kTau * amp_freq * static_cast<double>(j + 1) *
                                   static_cast<double>(i) +
                               amp_phase * static_cast<double>(j));
        }
    }

    scene.video = Tensor::zeros({frames, C, height, width});
    auto px = [&](std::int64_t f, std::int64_t ch, std::int64_t r, std::int64_t c) -> double& {
        return scene.video.data[static_cast<std::size_t>(((f * C + ch) * height + r) * width + c)];
    };
    for (std::int64_t f = 0; f < frames; ++f) {
        for (std::int64_t ch = 0; ch < C; ++ch) {
            for (std::int64_t r = 0; r < height; ++r) {
                for (std::int64_t c = 0; c < width; ++c) {
                    bool in_face = r >= face_r0 && r < face_r1 && c >= face_c0 && c < face_c1;
                    bool in_lip = r >= lip_r0 && r < lip_r1 && c >= lip_c0 && c < lip_c1;
                    double v;
                    if (in_lip) {
                        v = 0.2 + 0.6 * amp[static_cast<std::size_t>(f)];
                    } else if (in_face) {
                        v = skin[ch];
                    } else {
                        v = texture.data[static_cast<std::size_t>((ch * height + r) * width + c)] +
                            0.1 * std::sin(kTau *
                                               (static_cast<double>(c) +
                                                drift_speed * static_cast<double>(f)) /
                                               static_cast<double>(width) +
                                           drift_phase);
                    }
                    px(f, ch, r, c) = v;
                }
            }
        }
    }

    scene.reference_frame = Tensor::zeros({C, height, width});
    std::copy(scene.video.data.begin(), scene.video.data.begin() + C * height * width,
              scene.reference_frame.data.begin());
    return scene;
}

std::vector<double> amplitude(const RawAudioFeatures& audio) {
    std::vector<double> amp(static_cast<std::size_t>(audio.frames()));
    for (std::int64_t i = 0; i < audio.frames(); ++i) amp[static_cast<std::size_t>(i)] =
        audio.values.at(i, 0);
    return amp;
}

void write_scene(const std::string& dir, const SyntheticScene& scene, std::uint64_t seed) {
    fs::create_directories(dir);
    write_tensor((fs::path(dir) / "reference.tnsr").string(), scene.reference_frame);
    write_tensor((fs::path(dir) / "video.tnsr").string(), scene.video);
    write_tensor((fs::path(dir) / "audio.tnsr").string(), scene.audio.values);
    write_tensor((fs::path(dir) / "face_mask.tnsr").string(), scene.face_mask);
    write_tensor((fs::path(dir) / "lip_mask.tnsr").string(), scene.lip_mask);
    json manifest;
    manifest["seed"] = seed;
    manifest["frames"] = scene.video.shape[0];
    manifest["channels"] = scene.video.shape[1];
    manifest["height"] = scene.video.shape[2];
    manifest["width"] = scene.video.shape[3];
    manifest["audio_dim"] = scene.audio.dim();
    manifest["files"] = {{"reference", "reference.tnsr"},
                         {"video", "video.tnsr"},
                         {"audio", "audio.tnsr"},
                         {"face_mask", "face_mask.tnsr"},
                         {"lip_mask", "lip_mask.tnsr"}};
    std::ofstream out(fs::path(dir) / "scene.json");
    if (!out) throw Error("write_scene: cannot open manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

SyntheticScene load_scene(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "scene.json");
    if (!in) throw Error("load_scene: missing scene.json in " + dir);
    json manifest;
    try {
        in >> manifest;
    } catch (const std::exception& e) {
        throw Error("load_scene: bad scene.json in " + dir + ": " + e.what());
    }
    auto file = [&](const char* key) {
        return (fs::path(dir) / manifest.at("files").at(key).get<std::string>()).string();
    };
    SyntheticScene scene;
    scene.reference_frame = read_tensor(file("reference"));
    scene.video = read_tensor(file("video"));
    scene.audio.values = read_tensor(file("audio"));
    scene.face_mask = read_tensor(file("face_mask"));
    scene.lip_mask = read_tensor(file("lip_mask"));
    return scene;
}

}  // namespace lff
