#include "lff/dit.hpp"

#include <cmath>

namespace lff {

namespace {

// Geometric-frequency sin/cos features of an integer position.
void write_sinusoid(double pos, double* out, std::int64_t dim) {
    const std::int64_t half = dim / 2;
    for (std::int64_t i = 0; i < half; ++i) {
        double omega =
            1.0 / std::pow(10000.0, static_cast<double>(i) / std::max<std::int64_t>(1, half));
        out[2 * i] = std::sin(pos * omega);
        out[2 * i + 1] = std::cos(pos * omega);
    }
    if (dim % 2 == 1) out[dim - 1] = 0.0;
}

void check_latent_shape(const ModelConfig& c, const Tensor& z, const char* what) {
    if (z.rank() != 4 || z.shape[1] != c.channels || z.shape[2] != c.height ||
        z.shape[3] != c.width || z.shape[0] < 1) {
        throw DimensionError(std::string(what) + ": expected [F, " +
                             std::to_string(c.channels) + ", " + std::to_string(c.height) +
                             ", " + std::to_string(c.width) + "], got " + z.shape_str());
    }
}

}  // namespace

ConditioningPack assemble_conditioning(const Tensor& reference_frame, std::int64_t frames) {
    if (reference_frame.rank() != 3) {
        throw ConfigError("conditioning: reference frame must be [C, H, W], got " +
                          reference_frame.shape_str());
    }
    if (frames < 1) throw ConfigError("conditioning: frames must be >= 1");
    const std::int64_t c = reference_frame.shape[0];
    const std::int64_t h = reference_frame.shape[1];
    const std::int64_t w = reference_frame.shape[2];
    ConditioningPack pack;
    pack.reference_frame = reference_frame;
    pack.reference_latent = Tensor::zeros({frames, c, h, w});
    std::copy(reference_frame.data.begin(), reference_frame.data.end(),
              pack.reference_latent.data.begin());
    pack.temporal_mask = Tensor::zeros({frames, 1, h, w});
    std::fill(pack.temporal_mask.data.begin(), pack.temporal_mask.data.begin() + h * w, 1.0);
    return pack;
}

Model build_model(const ModelConfig& cfg, std::uint64_t seed) {
    if (cfg.dim < 2 || cfg.blocks < 1 || cfg.patch < 1) {
        throw ConfigError("model: dim/blocks/patch out of range");
    }
    if (cfg.height % cfg.patch != 0 || cfg.width % cfg.patch != 0) {
        throw ConfigError("model: patch size must divide height and width");
    }
    if (cfg.heads < 1 || cfg.dim % cfg.heads != 0) {
        throw ConfigError("model: head count must divide dim");
    }
    Model m;
    m.cfg = cfg;
    m.init_seed = seed;
    Rng rng(seed, 0x70617261);

    m.tparams = make_timestep_params(m.store, cfg.dim, rng);
    m.adapter = make_adapter_params(m.store, cfg.ctx_width(), cfg.dim, cfg.adapter_blocks,
                                    cfg.heads, rng);

    const std::int64_t pp = cfg.patch * cfg.patch;
    m.dit.patch_proj = make_linear(m.store, "dit.patch_proj", cfg.in_channels() * pp, cfg.dim, rng);
    m.dit.img_proj = make_linear(m.store, "dit.img_proj", cfg.channels * pp, cfg.dim, rng);
    m.dit.img_mlp = make_mlp(m.store, "dit.img_mlp", cfg.dim, cfg.dim, cfg.dim, rng);
    m.dit.text = m.store.add("dit.text", randn(rng, {cfg.text_tokens, cfg.dim}, 0.02));
    for (std::int64_t b = 0; b < cfg.blocks; ++b) {
        std::string prefix = "dit.block" + std::to_string(b);
        DiTBlockP blk;
        blk.self_attn = make_attention(m.store, prefix + ".self_attn", cfg.dim, cfg.heads, rng);
        blk.cross_audio =
            make_attention(m.store, prefix + ".cross_audio", cfg.dim, cfg.heads, rng, true);
        blk.cross_image =
            make_attention(m.store, prefix + ".cross_image", cfg.dim, cfg.heads, rng, true);
        blk.cross_text =
            make_attention(m.store, prefix + ".cross_text", cfg.dim, cfg.heads, rng, true);
        blk.ff = make_mlp(m.store, prefix + ".ff", cfg.dim, 4 * cfg.dim, cfg.dim, rng);
        blk.mod = make_linear(m.store, prefix + ".mod", cfg.dim, 6 * cfg.dim, rng, true, true);
        m.dit.blocks.push_back(std::move(blk));
    }
    m.dit.final_mod = make_linear(m.store, "dit.final_mod", cfg.dim, 2 * cfg.dim, rng, true, true);
    m.dit.out_proj = make_linear(m.store, "dit.out_proj", cfg.dim, pp * cfg.channels, rng, true,
                                 true);
    return m;
}

namespace {

const std::vector<std::int64_t>& patch_indices(Model& m, std::int64_t frames) {
    auto it = m.patch_idx.find(frames);
    if (it != m.patch_idx.end()) return it->second;
    const auto& c = m.cfg;
    const std::int64_t hp = c.height / c.patch, wp = c.width / c.patch;
    const std::int64_t cin = c.in_channels();
    std::vector<std::int64_t> idx;
    idx.reserve(static_cast<std::size_t>(frames * cin * c.height * c.width));
    for (std::int64_t f = 0; f < frames; ++f)
        for (std::int64_t br = 0; br < hp; ++br)
            for (std::int64_t bc = 0; bc < wp; ++bc)
                for (std::int64_t ch = 0; ch < cin; ++ch)
                    for (std::int64_t pr = 0; pr < c.patch; ++pr)
                        for (std::int64_t pc = 0; pc < c.patch; ++pc)
                            idx.push_back(((f * cin + ch) * c.height + br * c.patch + pr) *
                                              c.width +
                                          bc * c.patch + pc);
    return m.patch_idx.emplace(frames, std::move(idx)).first->second;
}

const std::vector<std::int64_t>& unpatch_indices(Model& m, std::int64_t frames) {
    auto it = m.unpatch_idx.find(frames);
    if (it != m.unpatch_idx.end()) return it->second;
    const auto& c = m.cfg;
    const std::int64_t hp = c.height / c.patch, wp = c.width / c.patch;
    const std::int64_t pp = c.patch * c.patch;
    // destination order [F, C, H, W]; source is token-major [N, C*p^2]
    std::vector<std::int64_t> idx;
    idx.reserve(static_cast<std::size_t>(frames * c.channels * c.height * c.width));
    for (std::int64_t f = 0; f < frames; ++f)
        for (std::int64_t ch = 0; ch < c.channels; ++ch)
            for (std::int64_t r = 0; r < c.height; ++r)
                for (std::int64_t col = 0; col < c.width; ++col) {
                    std::int64_t token = (f * hp + r / c.patch) * wp + col / c.patch;
                    std::int64_t inner = (ch * c.patch + r % c.patch) * c.patch + col % c.patch;
                    idx.push_back(token * (c.channels * pp) + inner);
                }
    return m.unpatch_idx.emplace(frames, std::move(idx)).first->second;
}

const Tensor& pos_table(Model& m, std::int64_t frames) {
    auto it = m.pos.find(frames);
    if (it != m.pos.end()) return it->second;
    const auto& c = m.cfg;
    const std::int64_t hp = c.height / c.patch, wp = c.width / c.patch;
    const std::int64_t df = c.dim / 2;
    const std::int64_t dr = c.dim / 4;
    const std::int64_t dc = c.dim - df - dr;
    Tensor pos = Tensor::zeros({frames * hp * wp, c.dim});
    for (std::int64_t f = 0; f < frames; ++f)
        for (std::int64_t br = 0; br < hp; ++br)
            for (std::int64_t bc = 0; bc < wp; ++bc) {
                double* row = pos.data.data() + ((f * hp + br) * wp + bc) * c.dim;
                write_sinusoid(static_cast<double>(f), row, df);
                write_sinusoid(static_cast<double>(br), row + df, dr);
                write_sinusoid(static_cast<double>(bc), row + df + dr, dc);
            }
    return m.pos.emplace(frames, std::move(pos)).first->second;
}

}  // namespace

Var model_forward(Model& m, const Tensor& z, const ConditioningPack& pack,
                  const ContextualAudio& audio, const TimestepEmbeds& te,
                  const ForwardFlags& flags) {
    const auto& c = m.cfg;
    check_latent_shape(c, z, "model forward (latents)");
    check_latent_shape(c, pack.reference_latent, "model forward (reference latent)");
    const std::int64_t frames = z.shape[0];
    if (pack.reference_latent.shape[0] != frames ||
        pack.temporal_mask.shape != std::vector<std::int64_t>({frames, 1, c.height, c.width})) {
        throw DimensionError("model forward: conditioning frames disagree with latents");
    }
    if (audio.values.shape[0] != frames) {
        throw DimensionError("model forward: audio rows " +
                             std::to_string(audio.values.shape[0]) + " vs frames " +
                             std::to_string(frames));
    }

    // channel-concatenated input [F, 2C+1, H, W]
    const std::int64_t plane = c.height * c.width;
    Tensor input = Tensor::zeros({frames, c.in_channels(), c.height, c.width});
    for (std::int64_t f = 0; f < frames; ++f) {
        double* dst = input.data.data() + f * c.in_channels() * plane;
        const double* zf = z.data.data() + f * c.channels * plane;
        const double* rf = pack.reference_latent.data.data() + f * c.channels * plane;
        const double* mf = pack.temporal_mask.data.data() + f * plane;
        std::copy(zf, zf + c.channels * plane, dst);
        std::copy(rf, rf + c.channels * plane, dst + c.channels * plane);
        std::copy(mf, mf + plane, dst + 2 * c.channels * plane);
    }

    const std::int64_t n = frames * c.tokens_per_frame();
    const std::int64_t pp = c.patch * c.patch;
    Var tokens = permute_elements(constant(input), patch_indices(m, frames),
                                  {n, c.in_channels() * pp});
    Var x = add(linear(tokens, m.dit.patch_proj), constant(pos_table(m, frames)));

    // image tokens from the reference frame
    Tensor ref = pack.reference_frame;
    if (ref.shape != std::vector<std::int64_t>({c.channels, c.height, c.width})) {
        throw DimensionError("model forward: reference frame is " + ref.shape_str());
    }
    Tensor ref4 = reshape(ref, {1, c.channels, c.height, c.width});
    // reuse the latent patch order for a single frame of C channels
    std::vector<std::int64_t> img_idx;
    {
        const std::int64_t hp = c.height / c.patch, wp = c.width / c.patch;
        img_idx.reserve(static_cast<std::size_t>(c.channels * plane));
        for (std::int64_t br = 0; br < hp; ++br)
            for (std::int64_t bc = 0; bc < wp; ++bc)
                for (std::int64_t ch = 0; ch < c.channels; ++ch)
                    for (std::int64_t pr = 0; pr < c.patch; ++pr)
                        for (std::int64_t pc = 0; pc < c.patch; ++pc)
                            img_idx.push_back((ch * c.height + br * c.patch + pr) * c.width +
                                              bc * c.patch + pc);
    }
    Var img_patches = permute_elements(constant(reshape(ref4, {c.channels, c.height, c.width})),
                                       std::move(img_idx),
                                       {c.tokens_per_frame(), c.channels * pp});
    Var img = mlp(linear(img_patches, m.dit.img_proj), m.dit.img_mlp);

    Var emb_aud =
        flags.use_null_audio ? null_audio_rows(m.adapter, frames) : constant(audio.values);
    Var abar = adapter_forward(emb_aud, te, x, m.adapter, flags.adapter);

    constexpr double ln_eps = 1e-6;
    for (std::size_t b = 0; b < m.dit.blocks.size(); ++b) {
        const DiTBlockP& blk = m.dit.blocks[b];
        Var mod = reshape(linear(te.e, blk.mod), {6, c.dim});
        auto mrow = [&](std::int64_t i) { return slice_rows(mod, i, i + 1); };
        Var h = add_rowwise(mul_rowwise(layer_norm(x, ln_eps), add_scalar(mrow(1), 1.0)),
                            mrow(0));
        x = add(x, mul_rowwise(self_attention(h, blk.self_attn), mrow(2)));
        Var inj = cross_attention(x, img, blk.cross_image);
        if (!flags.skip_audio_injection) {
            inj = add(cross_attention(x, abar, blk.cross_audio), inj);
        }
        x = add(x, inj);
        x = add(x, cross_attention(x, m.dit.text, blk.cross_text));
        Var h2 = add_rowwise(mul_rowwise(layer_norm(x, ln_eps), add_scalar(mrow(4), 1.0)),
                             mrow(3));
        x = add(x, mul_rowwise(mlp(h2, blk.ff), mrow(5)));
        if (!all_finite(val(x))) {
            throw NumericError("dit forward: non-finite values after block " +
                               std::to_string(b));
        }
    }

    Var fmod = reshape(linear(te.e, m.dit.final_mod), {2, c.dim});
    Var h = add_rowwise(
        mul_rowwise(layer_norm(x, ln_eps), add_scalar(slice_rows(fmod, 1, 2), 1.0)),
        slice_rows(fmod, 0, 1));
    Var out_tokens = linear(h, m.dit.out_proj);
    return permute_elements(out_tokens, unpatch_indices(m, frames),
                            {frames, c.channels, c.height, c.width});
}

Tensor model_velocity(Model& m, const Tensor& z, const ConditioningPack& pack,
                      const ContextualAudio& audio, double t, const ForwardFlags& flags) {
    NoGradGuard ng;
    TimestepEmbeds te = timestep_embed(t, m.tparams);
    return val(model_forward(m, z, pack, audio, te, flags));
}

Tensor flow_forward(const Tensor& x0, const Tensor& noise, double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw DomainError("flow forward: t must lie in [0, 1]");
    }
    if (!x0.same_shape(noise)) {
        throw DimensionError("flow forward: shape mismatch " + x0.shape_str() + " vs " +
                             noise.shape_str());
    }
    Tensor out = x0;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = (1.0 - t) * x0.data[i] + t * noise.data[i];
    }
    return out;
}

Tensor velocity_target(const Tensor& x0, const Tensor& noise) {
    if (!x0.same_shape(noise)) {
        throw DimensionError("velocity target: shape mismatch " + x0.shape_str() + " vs " +
                             noise.shape_str());
    }
    return sub(noise, x0);
}

LossBranch loss_branch(double q) {
    if (q >= 0.4 && q < 0.5) return LossBranch::face;
    if (q >= 0.5) return LossBranch::lip;
    return LossBranch::combined;
}

const char* loss_branch_name(LossBranch b) {
    switch (b) {
        case LossBranch::face: return "face";
        case LossBranch::lip: return "lip";
        default: return "combined";
    }
}

Var masked_loss(const Var& v_pred, const Tensor& v_target, const Tensor& face_mask,
                const Tensor& lip_mask, double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("masked loss: q must lie in [0, 1]");
    const Tensor& pred = val(v_pred);
    if (!pred.same_shape(v_target)) {
        throw DimensionError("masked loss: prediction " + pred.shape_str() + " vs target " +
                             v_target.shape_str());
    }
    if (pred.rank() != 4) throw DimensionError("masked loss: expected [F, C, H, W]");
    const std::int64_t h = pred.shape[2], w = pred.shape[3];
    for (const Tensor* mask : {&face_mask, &lip_mask}) {
        if (mask->shape != std::vector<std::int64_t>({h, w})) {
            throw DimensionError("masked loss: mask " + mask->shape_str() +
                                 " does not match spatial dims");
        }
        for (double v : mask->data) {
            if (v != 0.0 && v != 1.0) {
                throw ValidationError("masked loss: masks must be binary, found " +
                                      std::to_string(v));
            }
        }
    }

    LossBranch branch = loss_branch(q);
    Tensor weights = Tensor::zeros(pred.shape);
    const std::int64_t plane = h * w;
    for (std::int64_t fc = 0; fc < pred.shape[0] * pred.shape[1]; ++fc) {
        double* wp = weights.data.data() + fc * plane;
        for (std::int64_t i = 0; i < plane; ++i) {
            switch (branch) {
                case LossBranch::face: wp[i] = face_mask.data[static_cast<std::size_t>(i)]; break;
                case LossBranch::lip: wp[i] = lip_mask.data[static_cast<std::size_t>(i)]; break;
                case LossBranch::combined:
                    wp[i] = 1.0 + face_mask.data[static_cast<std::size_t>(i)] +
                            lip_mask.data[static_cast<std::size_t>(i)];
                    break;
            }
        }
    }
    Var diff = sub(v_pred, constant(v_target));
    return mean(mul(mul(diff, diff), constant(weights)));
}

}  // namespace lff
