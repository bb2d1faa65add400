#include "lff/adapter.hpp"

#include <cmath>

namespace lff {

ContextualAudio build_audio_context(const RawAudioFeatures& a, std::int64_t k) {
    if (k < 0) throw ConfigError("audio context: k must be >= 0");
    const std::int64_t f = a.frames();
    const std::int64_t d = a.dim();
    if (k >= f) {
        throw ConfigError("audio context: k=" + std::to_string(k) +
                          " window exceeds sequence of " + std::to_string(f) + " frames");
    }
    ContextualAudio ctx;
    ctx.k = k;
    ctx.raw_dim = d;
    ctx.values = Tensor::zeros({f, (2 * k + 1) * d});
    for (std::int64_t i = 0; i < f; ++i) {
        for (std::int64_t o = -k; o <= k; ++o) {
            std::int64_t src = std::min(f - 1, std::max<std::int64_t>(0, i + o));
            std::copy(a.values.data.begin() + src * d, a.values.data.begin() + (src + 1) * d,
                      ctx.values.data.begin() + i * ctx.values.shape[1] + (o + k) * d);
        }
    }
    return ctx;
}

ContextualAudio slice_context(const ContextualAudio& ctx, std::int64_t begin, std::int64_t end) {
    ContextualAudio out;
    out.k = ctx.k;
    out.raw_dim = ctx.raw_dim;
    out.values = slice_rows(ctx.values, begin, end);
    return out;
}

Tensor timestep_features(double t, std::int64_t dim) {
    if (!std::isfinite(t)) throw DomainError("timestep features: t must be finite");
    if (dim < 2) throw ConfigError("timestep features: dim must be >= 2");
    Tensor f = Tensor::zeros({1, dim});
    const std::int64_t half = dim / 2;
    for (std::int64_t i = 0; i < half; ++i) {
        double omega = std::pow(10000.0, static_cast<double>(i) / static_cast<double>(half));
        f.data[static_cast<std::size_t>(2 * i)] = std::sin(omega * t);
        f.data[static_cast<std::size_t>(2 * i + 1)] = std::cos(omega * t);
    }
    if (dim % 2 == 1) f.data[static_cast<std::size_t>(dim - 1)] = t;
    return f;
}

TimestepParams make_timestep_params(ParamStore& store, std::int64_t d, Rng& rng) {
    TimestepParams p;
    p.dim = d;
    p.mlp1 = make_mlp(store, "timestep.mlp1", d, d, d, rng);
    p.mlp2 = make_mlp(store, "timestep.mlp2", d, d, d, rng);
    p.proj_e0 = make_linear(store, "timestep.proj_e0", d, 6 * d, rng);
    p.r = store.add("timestep.r", Tensor::zeros({2, d}));
    return p;
}

TimestepEmbeds timestep_embed(double t, const TimestepParams& p) {
    TimestepEmbeds te;
    Var feats = constant(timestep_features(t, p.dim));
    te.e = mlp(mlp(feats, p.mlp1), p.mlp2);
    te.e0 = reshape(linear(te.e, p.proj_e0), {6, p.dim});
    te.r = p.r;
    return te;
}

Var repeat_shift(const Var& e, const Var& r) {
    if (val(e).rank() != 2 || val(e).shape[0] != 1) {
        throw DimensionError("repeat_shift: e must be [1, D], got " + val(e).shape_str());
    }
    if (val(r).shape != std::vector<std::int64_t>({2, val(e).shape[1]})) {
        throw DimensionError("repeat_shift: r must be [2, D] matching e, got " +
                             val(r).shape_str());
    }
    return add(concat_rows(e, e), r);
}

AdapterP make_adapter_params(ParamStore& store, std::int64_t ctx_width, std::int64_t d,
                             std::int64_t n_blocks, std::int64_t heads, Rng& rng) {
    if (n_blocks < 1) throw ConfigError("adapter params: need at least one block");
    AdapterP p;
    p.ctx_width = ctx_width;
    p.dim = d;
    for (std::int64_t b = 0; b < n_blocks; ++b) {
        std::string prefix = "adapter.block" + std::to_string(b);
        AdapterBlockP blk;
        std::int64_t din = b == 0 ? ctx_width : d;
        blk.mlp_in = make_mlp(store, prefix + ".mlp_in", din, d, d, rng);
        blk.ln1 = make_layer_norm(store, prefix + ".ln1", d);
        blk.ln2 = make_layer_norm(store, prefix + ".ln2", d);
        blk.cattn = make_attention(store, prefix + ".cattn", d, heads, rng);
        blk.ln3 = make_layer_norm(store, prefix + ".ln3", d);
        blk.mlp_eta = make_mlp(store, prefix + ".mlp_eta", d, d, d, rng);
        p.blocks.push_back(std::move(blk));
    }
    p.mlp_out = make_mlp(store, "adapter.mlp_out", d, d, d, rng);
    p.null_audio = store.add("adapter.null_audio", Tensor::zeros({1, ctx_width}));
    p.e_static = store.add("adapter.e_static", randn(rng, {1, d}, 0.02));
    p.e0_static = store.add("adapter.e0_static", randn(rng, {6, d}, 0.02));
    return p;
}

Var adapter_forward(const Var& emb_aud, const TimestepEmbeds& te, const Var& z_tokens,
                    const AdapterP& p, const AdapterFlags& flags) {
    if (val(emb_aud).shape[1] != p.ctx_width) {
        throw DimensionError("adapter: audio rows have width " +
                             std::to_string(val(emb_aud).shape[1]) + ", params expect " +
                             std::to_string(p.ctx_width));
    }
    if (val(z_tokens).shape[1] != p.dim) {
        throw DimensionError("adapter: latent tokens have width " +
                             std::to_string(val(z_tokens).shape[1]) + ", params expect " +
                             std::to_string(p.dim));
    }
    Var e0 = flags.modulation_random ? p.e0_static : te.e0;
    Var e = flags.modulation_random ? p.e_static : te.e;
    auto row = [&](std::int64_t i) { return slice_rows(e0, i, i + 1); };

    Var x = emb_aud;
    for (const AdapterBlockP& blk : p.blocks) {
        Var lam = layer_norm(mlp(x, blk.mlp_in), blk.ln1);
        Var modulated = add_rowwise(mul_rowwise(lam, add_scalar(row(1), 1.0)), row(0));
        Var gam = add(mul_rowwise(modulated, row(2)), lam);
        Var u = layer_norm(gam, blk.ln2);
        Var emb_p = flags.cattn_off ? u : add(cross_attention(u, z_tokens, blk.cattn), u);
        Var h = add_rowwise(mul_rowwise(layer_norm(emb_p, blk.ln3), add_scalar(row(4), 1.0)),
                            row(3));
        Var eta = mlp(h, blk.mlp_eta);
        x = add(emb_p, mul_rowwise(eta, row(5)));
    }

    Var ebar = repeat_shift(e, te.r);
    Var shift = slice_rows(ebar, 0, 1);
    Var sc = slice_rows(ebar, 1, 2);
    return mlp(add_rowwise(mul_rowwise(x, add_scalar(sc, 1.0)), shift), p.mlp_out);
}

Var null_audio_rows(const AdapterP& p, std::int64_t frames) {
    return gather_rows(p.null_audio, std::vector<std::int64_t>(static_cast<std::size_t>(frames), 0));
}

}  // namespace lff
