#include "lff/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "lff/error.hpp"
#include "lff/optimizer.hpp"
#include "lff/tensor_io.hpp"

namespace fs = std::filesystem;

namespace lff {

namespace {

constexpr std::uint64_t kSceneStreamBase = 0x7363656e;  // training pool
constexpr std::uint64_t kEvalSceneStream = 0x6576616c;  // rollout ground truth
constexpr std::uint64_t kRolloutNoise = 0x726f6c6c;

Tensor gauss_tensor(Rng& rng, const std::vector<std::int64_t>& shape) {
    Tensor out = Tensor::zeros(shape);
    for (auto& x : out.data) x = rng.gauss();
    return out;
}

Tensor frame_slice(const Tensor& seq, std::int64_t begin, std::int64_t end) {
    std::int64_t fn = 1;
    for (std::size_t i = 1; i < seq.shape.size(); ++i) fn *= seq.shape[i];
    std::vector<std::int64_t> shape = seq.shape;
    shape[0] = end - begin;
    Tensor out = Tensor::zeros(shape, seq.dtype);
    std::copy(seq.data.begin() + begin * fn, seq.data.begin() + end * fn, out.data.begin());
    return out;
}

std::string pad4(std::int64_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04lld", static_cast<long long>(i));
    return buf;
}

}  // namespace

std::vector<SyntheticScene> make_scenes(const ExperimentConfig& cfg) {
    std::vector<SyntheticScene> scenes;
    scenes.reserve(static_cast<std::size_t>(cfg.scenes));
    for (std::int64_t i = 0; i < cfg.scenes; ++i) {
        Rng rng(cfg.seed, kSceneStreamBase + static_cast<std::uint64_t>(i));
        scenes.push_back(generate_scene(rng, cfg.model.frames, cfg.model.height, cfg.model.width,
                                        cfg.model.audio_dim));
    }
    return scenes;
}

std::string resolve_checkpoint(const std::string& dir) {
    if (fs::exists(fs::path(dir) / "manifest.json")) return dir;
    const fs::path nested = fs::path(dir) / "checkpoint_final";
    if (fs::exists(nested / "manifest.json")) return nested.string();
    throw Error("checkpoint: no manifest.json under '" + dir + "'");
}

RolloutResult rollout(Model& model, const ExperimentConfig& cfg, std::uint64_t scene_seed,
                      std::uint64_t noise_seed, std::ostream* progress) {
    const ModelConfig& mc = model.cfg;
    const std::int64_t total = cfg.window_total;

    RolloutResult result;
    Rng srng(scene_seed, kEvalSceneStream);
    result.scene = generate_scene(srng, total, mc.height, mc.width, mc.audio_dim);

    ContextualAudio ctx = build_audio_context(result.scene.audio, mc.adapter_k);
    WindowPlan plan = make_plan(total, cfg.window_length, cfg.window_overlap);
    if (ctx.frames() != plan.total) {
        throw ConfigError("rollout: audio covers " + std::to_string(ctx.frames()) +
                          " frames but the window plan covers " + std::to_string(plan.total));
    }
    WeightCurve curve = make_weights(cfg.scheme, plan.overlap);

    Rng nrng(noise_seed, kRolloutNoise);
    Tensor z0 = gauss_tensor(nrng, {total, mc.channels, mc.height, mc.width});

    ForwardFlags base;
    base.skip_audio_injection = cfg.adapter_off;
    base.adapter.modulation_random = cfg.modulation_random;
    base.adapter.cattn_off = cfg.cattn_off;

    std::map<std::int64_t, ConditioningPack> packs;
    auto pack_for = [&](std::int64_t frames) -> const ConditioningPack& {
        auto it = packs.find(frames);
        if (it == packs.end()) {
            it = packs.emplace(frames, assemble_conditioning(result.scene.reference_frame, frames))
                     .first;
        }
        return it->second;
    };

    const std::int64_t windows_per_step = static_cast<std::int64_t>(plan.schedule.size());
    std::int64_t calls = 0;
    const std::int64_t report_every = std::max<std::int64_t>(1, cfg.sampler_steps / 10);
    auto denoise = [&](const Tensor& window, std::int64_t s, std::int64_t e, double t,
                       double t_next) {
        ContextualAudio aslice = slice_context(ctx, s, e);
        Tensor v = guided_velocity(model, window, pack_for(e - s), aslice, t, cfg.guidance, base);
        ++calls;
        if (progress && calls % windows_per_step == 0) {
            const std::int64_t done = calls / windows_per_step;
            if (done % report_every == 0) {
                (*progress) << "  denoising step " << done << "/" << cfg.sampler_steps << "\n";
            }
        }
        return euler_step(window, v, t, t_next);
    };

    SampleOptions opts;
    opts.fuse_first_step = cfg.fuse_first_step;
    opts.double_buffer = cfg.double_buffer;

    if (cfg.baseline.empty()) {
        result.latents = dwsw_sample(denoise, z0, plan, cfg.sampler_steps, curve, opts);
    } else if (cfg.baseline == "plain_window") {
        result.latents = plain_window_sample(denoise, z0, plan, cfg.sampler_steps, opts);
    } else if (cfg.baseline == "motion_frame") {
        const std::int64_t m = plan.overlap;
        auto generate = [&](const Tensor& prev_tail, std::int64_t s, std::int64_t e) {
            const std::int64_t frames = e - s;
            Tensor z = frame_slice(z0, s, e);
            ConditioningPack pack = assemble_conditioning(result.scene.reference_frame, frames);
            if (prev_tail.numel() > 0) {
                // Condition on the previous clip's tail through the
                // reference pathway: those frames are known, so their
                // latents and mask rows say "given".
                const std::int64_t fn = mc.channels * mc.height * mc.width;
                std::copy(prev_tail.data.begin(), prev_tail.data.end(),
                          pack.reference_latent.data.begin());
                std::fill(pack.temporal_mask.data.begin(),
                          pack.temporal_mask.data.begin() + m * mc.height * mc.width, 1.0);
                (void)fn;
            }
            ContextualAudio aslice = slice_context(ctx, s, e);
            for (std::int64_t j = cfg.sampler_steps; j >= 1; --j) {
                const double t = static_cast<double>(j) / static_cast<double>(cfg.sampler_steps);
                const double t_next =
                    static_cast<double>(j - 1) / static_cast<double>(cfg.sampler_steps);
                Tensor v = guided_velocity(model, z, pack, aslice, t, cfg.guidance, base);
                z = euler_step(z, v, t, t_next);
            }
            if (progress) (*progress) << "  clip [" << s << ", " << e << ") done\n";
            return z;
        };
        result.latents =
            motion_frame_sample(generate, plan, {mc.channels, mc.height, mc.width});
    } else {
        throw ConfigError("rollout: unknown baseline '" + cfg.baseline + "'");
    }
    return result;
}

RolloutMetrics evaluate_rollout(const RolloutResult& r, std::int64_t clip_len) {
    std::vector<DriftReportRow> rows =
        drift_report(r.latents, r.scene.audio, r.scene.lip_mask, clip_len);
    RolloutMetrics m;
    const DriftReportRow& last = rows.back();
    m.final_mean_shift = last.mean_shift;
    m.final_std_shift = last.std_shift;
    m.final_ciede = last.ciede;
    m.sync_r = sync_proxy(r.scene.audio, r.latents, r.scene.lip_mask);
    m.drift_score = m.final_mean_shift + m.final_std_shift;
    return m;
}

DirectionResult adapter_drift_direction(const ExperimentConfig& cfg, Model& model, int n_seeds,
                                        std::ostream* log) {
    ExperimentConfig on = cfg;
    on.adapter_off = false;
    ExperimentConfig off = cfg;
    off.adapter_off = true;

    DirectionResult res;
    res.total = n_seeds;
    for (int i = 0; i < n_seeds; ++i) {
        const std::uint64_t scene_seed = cfg.seed + 101 + static_cast<std::uint64_t>(i);
        const std::uint64_t noise_seed = cfg.seed + 501 + static_cast<std::uint64_t>(i);
        RolloutMetrics mon =
            evaluate_rollout(rollout(model, on, scene_seed, noise_seed), cfg.effective_clip_len());
        RolloutMetrics moff = evaluate_rollout(rollout(model, off, scene_seed, noise_seed),
                                               cfg.effective_clip_len());
        const bool win = mon.drift_score < moff.drift_score && mon.final_ciede < moff.final_ciede;
        if (win) ++res.wins;
        std::ostringstream row;
        row << "seed " << i << ": adapter-on drift " << mon.drift_score << " ciede "
            << mon.final_ciede << " | adapter-off drift " << moff.drift_score << " ciede "
            << moff.final_ciede << (win ? "  [on wins]" : "  [off wins]");
        res.rows.push_back(row.str());
        if (log) (*log) << res.rows.back() << "\n";
    }
    return res;
}

DirectionResult guidance_sync_direction(const ExperimentConfig& cfg, Model& model, int n_seeds,
                                        std::ostream* log) {
    ExperimentConfig native = cfg;
    native.guidance.mode = GuidanceMode::native;
    ExperimentConfig off = cfg;
    off.guidance.mode = GuidanceMode::off;

    DirectionResult res;
    res.total = n_seeds;
    for (int i = 0; i < n_seeds; ++i) {
        const std::uint64_t scene_seed = cfg.seed + 301 + static_cast<std::uint64_t>(i);
        const std::uint64_t noise_seed = cfg.seed + 701 + static_cast<std::uint64_t>(i);
        RolloutResult rn = rollout(model, native, scene_seed, noise_seed);
        RolloutResult ro = rollout(model, off, scene_seed, noise_seed);
        const double sn = sync_proxy(rn.scene.audio, rn.latents, rn.scene.lip_mask);
        const double so = sync_proxy(ro.scene.audio, ro.latents, ro.scene.lip_mask);
        const bool win = sn > so;
        if (win) ++res.wins;
        std::ostringstream row;
        row << "seed " << i << ": sync native " << sn << " | off " << so
            << (win ? "  [native wins]" : "  [off wins]");
        res.rows.push_back(row.str());
        if (log) (*log) << res.rows.back() << "\n";
    }
    return res;
}

SeamStats stub_seam_stats(WeightScheme scheme, std::int64_t total, std::int64_t length,
                          std::int64_t overlap, std::int64_t steps) {
    WindowPlan plan = make_plan(total, length, overlap);
    WeightCurve curve = make_weights(scheme, overlap);
    const std::int64_t stride = length - overlap;
    auto stub = [&](const Tensor& window, std::int64_t s, std::int64_t, double, double) {
        const double value = static_cast<double>((s / stride) % 2);
        return Tensor::full(window.shape, value);
    };
    Tensor z0 = Tensor::zeros({total, 1});
    Tensor out = dwsw_sample(stub, z0, plan, steps, curve);
    SeamStats stats;
    double acc = 0.0;
    for (std::int64_t f = 0; f + 1 < total; ++f) {
        const double jump = std::fabs(out.data[static_cast<std::size_t>(f + 1)] -
                                      out.data[static_cast<std::size_t>(f)]);
        stats.max_jump = std::max(stats.max_jump, jump);
        acc += jump;
    }
    stats.mean_jump = acc / static_cast<double>(total - 1);
    return stats;
}

void cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir,
                  const std::string& command, std::ostream& log) {
    write_run_json(out_dir, cfg, command);
    std::vector<SyntheticScene> scenes = make_scenes(cfg);
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const std::string dir =
            (fs::path(out_dir) / ("scene_" + pad4(static_cast<std::int64_t>(i)))).string();
        write_scene(dir, scenes[i], cfg.seed);
    }
    log << "wrote " << scenes.size() << " scenes under " << out_dir << "\n";
}

namespace {

std::vector<SyntheticScene> load_scene_dir(const std::string& data_dir) {
    std::vector<std::string> dirs;
    for (const auto& entry : fs::directory_iterator(data_dir)) {
        if (entry.is_directory() && entry.path().filename().string().rfind("scene_", 0) == 0) {
            dirs.push_back(entry.path().string());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw Error("train: no scene_* directories under '" + data_dir + "'");
    std::vector<SyntheticScene> scenes;
    scenes.reserve(dirs.size());
    for (const auto& d : dirs) scenes.push_back(load_scene(d));
    return scenes;
}

}  // namespace

void cmd_train(const ExperimentConfig& cfg, const std::string& data_dir,
               const std::string& out_dir, const std::string& command, std::ostream& log) {
    write_run_json(out_dir, cfg, command);
    std::vector<SyntheticScene> scenes =
        data_dir.empty() ? make_scenes(cfg) : load_scene_dir(data_dir);

    Model model = build_model(cfg.model, cfg.seed);
    log << "model parameters: " << model.store.total_scalars() << "\n";
    model.store.save((fs::path(out_dir) / "checkpoint_init").string(), 0);

    TrainConfig tc;
    tc.steps = cfg.train_steps;
    tc.lr = cfg.lr;
    tc.p_drop = cfg.p_drop;
    tc.seed = cfg.seed;
    tc.val_pairs = cfg.val_pairs;
    TrainResult result =
        train_loop(model, scenes, tc, (fs::path(out_dir) / "loss.csv").string(), &log);

    model.store.save((fs::path(out_dir) / "checkpoint_final").string(), result.steps_run);

    nlohmann::json summary;
    summary["steps"] = result.steps_run;
    summary["initial_val_mse"] = result.initial_val_mse;
    summary["final_val_mse"] = result.final_val_mse;
    summary["val_mse_ratio"] = result.initial_val_mse > 0.0
                                   ? result.final_val_mse / result.initial_val_mse
                                   : 0.0;
    std::ofstream sfile(fs::path(out_dir) / "train_summary.json");
    sfile << summary.dump(2) << "\n";
    log << "val MSE " << result.initial_val_mse << " -> " << result.final_val_mse << "\n";
}

void cmd_sample(const ExperimentConfig& cfg, const std::string& ckpt_dir,
                const std::string& out_dir, const std::string& command, std::ostream& log) {
    write_run_json(out_dir, cfg, command);
    Model model = build_model(cfg.model, cfg.seed);
    model.store.load(resolve_checkpoint(ckpt_dir));

    RolloutResult r = rollout(model, cfg, cfg.seed, cfg.seed, &log);
    write_tensor((fs::path(out_dir) / "latents.tnsr").string(), r.latents);

    const fs::path frames_dir = fs::path(out_dir) / "frames";
    fs::create_directories(frames_dir);
    const char* ext = model.cfg.channels == 3 ? ".ppm" : ".pgm";
    for (std::int64_t f = 0; f < r.latents.shape[0]; ++f) {
        Tensor frame = frame_slice(r.latents, f, f + 1);
        frame.shape = {model.cfg.channels, model.cfg.height, model.cfg.width};
        write_frame_image((frames_dir / ("frame_" + pad4(f) + ext)).string(), frame);
    }

    std::vector<DriftReportRow> rows =
        drift_report(r.latents, r.scene.audio, r.scene.lip_mask, cfg.effective_clip_len());
    write_drift_csv((fs::path(out_dir) / "drift.csv").string(), rows);

    RolloutMetrics m = evaluate_rollout(r, cfg.effective_clip_len());
    nlohmann::json summary;
    summary["final_mean_shift"] = m.final_mean_shift;
    summary["final_std_shift"] = m.final_std_shift;
    summary["final_ciede"] = m.final_ciede;
    summary["sync_r"] = m.sync_r;
    std::ofstream sfile(fs::path(out_dir) / "summary.json");
    sfile << summary.dump(2) << "\n";
    log << "rollout sync_r " << m.sync_r << ", final-clip drift " << m.drift_score << "\n";
}

void cmd_ablate(const ExperimentConfig& cfg, const std::string& ckpt_dir,
                const std::string& grid, const std::string& out_dir, const std::string& command,
                std::ostream& log) {
    write_run_json(out_dir, cfg, command);
    if (grid == "weights") {
        const WeightScheme schemes[] = {WeightScheme::logarithmic, WeightScheme::fixed,
                                        WeightScheme::uniform};
        std::ofstream csv(fs::path(out_dir) / "ablate_weights.csv");
        csv << "scheme,seam_jump_max,seam_jump_mean\n";
        char buf[128];
        for (WeightScheme s : schemes) {
            SeamStats stats = stub_seam_stats(s, 64, 16, 8, 4);
            std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", weight_scheme_name(s),
                          stats.max_jump, stats.mean_jump);
            csv << buf;
            log << weight_scheme_name(s) << ": max seam jump " << stats.max_jump << "\n";
        }
        return;
    }
    if (grid != "conditioning") {
        throw ConfigError("ablate: unknown grid '" + grid +
                          "' (expected conditioning or weights)");
    }

    struct Variant {
        const char* name;
        bool adapter_off;
        GuidanceMode mode;
    };
    const Variant variants[] = {
        {"adapter_on/guidance_native", false, GuidanceMode::native},
        {"adapter_on/guidance_cfg", false, GuidanceMode::cfg},
        {"adapter_on/guidance_off", false, GuidanceMode::off},
        {"adapter_off/guidance_native", true, GuidanceMode::native},
        {"adapter_off/guidance_cfg", true, GuidanceMode::cfg},
        {"adapter_off/guidance_off", true, GuidanceMode::off},
    };

    Model model = build_model(cfg.model, cfg.seed);
    bool loaded = false;
    std::ofstream csv(fs::path(out_dir) / "ablate_conditioning.csv");
    csv << "variant,adapter,guidance,mean_shift,std_shift,ciede,sync_r\n";
    char buf[256];
    for (const Variant& v : variants) {
        if (!loaded) {
            try {
                model.store.load(resolve_checkpoint(ckpt_dir));
            } catch (const Error& e) {
                throw Error("ablate: missing checkpoint for variant '" + std::string(v.name) +
                            "': " + e.what());
            }
            loaded = true;
        }
        ExperimentConfig vc = cfg;
        vc.adapter_off = v.adapter_off;
        vc.guidance.mode = v.mode;
        RolloutMetrics m =
            evaluate_rollout(rollout(model, vc, cfg.seed, cfg.seed), cfg.effective_clip_len());
        std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.17g,%.17g,%.17g,%.17g\n", v.name,
                      v.adapter_off ? "off" : "on", guidance_mode_name(v.mode), m.final_mean_shift,
                      m.final_std_shift, m.final_ciede, m.sync_r);
        csv << buf;
        log << v.name << ": drift " << m.drift_score << " ciede " << m.final_ciede << " sync "
            << m.sync_r << "\n";
    }
}

void cmd_metrics(const ExperimentConfig& cfg, const std::string& latents_path,
                 const std::string& scene_dir, const std::string& out_dir,
                 const std::string& command, std::ostream& log) {
    write_run_json(out_dir, cfg, command);
    Tensor latents = read_tensor(latents_path);
    if (latents.rank() != 4) {
        throw ValidationError("metrics: latents must be [F, C, H, W], got " +
                              latents.shape_str());
    }
    SyntheticScene scene = load_scene(scene_dir);
    std::vector<DriftReportRow> rows =
        drift_report(latents, scene.audio, scene.lip_mask, cfg.effective_clip_len());
    write_drift_csv((fs::path(out_dir) / "drift.csv").string(), rows);
    log << "wrote drift report with " << rows.size() << " clips\n";
}

}  // namespace lff
