#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <vector>

#include "lff/error.hpp"
#include "lff/harness.hpp"
#include "lff/optimizer.hpp"
#include "lff/tensor_io.hpp"

namespace lff {

namespace {

void expect(bool ok, const std::string& msg) {
    if (!ok) throw Error(msg);
}

void expect_near(double a, double b, double tol, const std::string& msg) {
    if (!(std::fabs(a - b) <= tol)) {
        std::ostringstream os;
        os << msg << " (" << a << " vs " << b << ", tol " << tol << ")";
        throw Error(os.str());
    }
}

Tensor random_tensor(Rng& rng, std::vector<std::int64_t> shape) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& x : t.data) x = rng.gauss();
    return t;
}

// --- tensor core -----------------------------------------------------------

void check_rng_determinism() {
    Rng a(7, 3), b(7, 3), c(7, 4);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const std::uint64_t va = a.next_u64();
        expect(va == b.next_u64(), "same-seed streams diverged");
        if (va != c.next_u64()) differs = true;
    }
    expect(differs, "different stream keys produced identical draws");
}

void check_gauss_moments() {
    Rng rng(11);
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.gauss();
        s += x;
        s2 += x * x;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    expect_near(mean, 0.0, 0.02, "gauss mean off");
    expect_near(var, 1.0, 0.03, "gauss variance off");
}

void check_layer_norm_rows() {
    Rng rng(3);
    Tensor x = random_tensor(rng, {4, 8});
    Tensor y = layer_norm(x, 0.0);
    for (std::int64_t r = 0; r < 4; ++r) {
        double m = 0.0, v = 0.0;
        for (std::int64_t c = 0; c < 8; ++c) m += y.at(r, c);
        m /= 8.0;
        for (std::int64_t c = 0; c < 8; ++c) v += (y.at(r, c) - m) * (y.at(r, c) - m);
        v /= 8.0;
        expect_near(m, 0.0, 1e-9, "normalized row mean not 0");
        expect_near(v, 1.0, 1e-9, "normalized row variance not 1");
    }
}

void check_softmax_rows() {
    Rng rng(5);
    Tensor x = random_tensor(rng, {3, 6});
    Tensor y = softmax_rows(x);
    for (std::int64_t r = 0; r < 3; ++r) {
        double s = 0.0;
        for (std::int64_t c = 0; c < 6; ++c) s += y.at(r, c);
        expect_near(s, 1.0, 1e-12, "softmax row does not sum to 1");
    }
    Tensor shifted = softmax_rows(add_scalar(x, 3.5));
    expect(max_abs(sub(shifted, y)) <= 1e-12, "softmax not shift invariant");
}

void check_matmul_identity() {
    Rng rng(9);
    Tensor a = random_tensor(rng, {3, 5});
    Tensor eye = Tensor::zeros({5, 5});
    for (std::int64_t i = 0; i < 5; ++i) eye.at(i, i) = 1.0;
    expect(max_abs(sub(matmul(a, eye), a)) == 0.0, "A * I != A");
}

void check_mlp_gradcheck() {
    ParamStore store;
    Rng rng(17);
    MlpP p = make_mlp(store, "st", 3, 4, 2, rng);
    Tensor xv = random_tensor(rng, {2, 3});

    auto loss_value = [&]() {
        NoGradGuard off;
        Var y = mlp(constant(xv), p);
        Var l = mean(mul(y, y));
        return val(l).data[0];
    };

    Tape tape;
    TapeGuard guard(&tape);
    store.zero_grads();
    Var y = mlp(constant(xv), p);
    Var l = mean(mul(y, y));
    tape.backward(l);

    const double h = 1e-6;
    int checked = 0;
    for (const auto& entry : store.entries()) {
        Tensor& value = entry.second->value;
        entry.second->ensure_grad();
        for (std::size_t i = 0; i < value.data.size(); ++i) {
            const double keep = value.data[i];
            value.data[i] = keep + h;
            const double fp = loss_value();
            value.data[i] = keep - h;
            const double fm = loss_value();
            value.data[i] = keep;
            const double num = (fp - fm) / (2.0 * h);
            const double ana = entry.second->grad.data[i];
            const double denom = std::max({1.0, std::fabs(num), std::fabs(ana)});
            expect(std::fabs(num - ana) / denom <= 1e-4,
                   "gradient mismatch at " + entry.first);
            ++checked;
        }
    }
    expect(checked > 10, "gradcheck sampled too few parameters");
}

void check_tensor_round_trip() {
    Rng rng(23);
    Tensor t = random_tensor(rng, {2, 3, 4});
    Tensor back = decode_tensor(encode_tensor(t));
    expect(back.shape == t.shape && back.data == t.data, "f64 round trip changed values");
    Tensor tf = t;
    tf.dtype = Dtype::f32;
    Tensor backf = decode_tensor(encode_tensor(tf));
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        expect(backf.data[i] == static_cast<double>(static_cast<float>(t.data[i])),
               "f32 round trip is not float-exact");
    }
}

void check_adam_zero_grad() {
    ParamStore store;
    Rng rng(29);
    make_mlp(store, "st", 3, 4, 2, rng);
    std::vector<double> before;
    for (const auto& e : store.entries()) {
        before.insert(before.end(), e.second->value.data.begin(), e.second->value.data.end());
    }
    Adam opt(store, {});
    store.zero_grads();
    opt.step();
    std::vector<double> after;
    for (const auto& e : store.entries()) {
        after.insert(after.end(), e.second->value.data.begin(), e.second->value.data.end());
    }
    expect(before == after, "zero gradients changed parameters");
}

// --- synthetic data --------------------------------------------------------

void check_synth_deterministic() {
    Rng a(31), b(31);
    SyntheticScene s1 = generate_scene(a, 8, 16, 16, 4);
    SyntheticScene s2 = generate_scene(b, 8, 16, 16, 4);
    expect(s1.video.data == s2.video.data && s1.audio.values.data == s2.audio.values.data,
           "same-seed scenes differ");
}

void check_synth_reference_frame() {
    Rng rng(37);
    SyntheticScene s = generate_scene(rng, 6, 16, 16, 4);
    Tensor frame0 = Tensor::zeros(s.reference_frame.shape);
    std::copy(s.video.data.begin(), s.video.data.begin() + frame0.numel(), frame0.data.begin());
    expect(frame0.data == s.reference_frame.data, "reference frame is not frame 0");
}

void check_synth_mouth_correlation() {
    Rng rng(41);
    SyntheticScene s = generate_scene(rng, 200, 16, 16, 4);
    const double r = sync_proxy(s.audio, s.video, s.lip_mask);
    expect(r >= 0.99, "mouth intensity does not track amplitude (r=" + std::to_string(r) + ")");
}

void check_synth_amplitude_column() {
    Rng rng(43);
    SyntheticScene s = generate_scene(rng, 12, 16, 16, 4);
    std::vector<double> amp = amplitude(s.audio);
    for (std::int64_t i = 0; i < 12; ++i) {
        expect(amp[static_cast<std::size_t>(i)] == s.audio.values.at(i, 0),
               "amplitude() is not column 0");
    }
}

// --- audio adapter ---------------------------------------------------------

void check_context_rows() {
    Rng rng(47);
    SyntheticScene s = generate_scene(rng, 10, 16, 16, 3);
    ContextualAudio ctx = build_audio_context(s.audio, 2);
    expect(ctx.width() == 5 * 3, "context width != (2k+1) d");
    for (std::int64_t off = -2; off <= 2; ++off) {
        for (std::int64_t c = 0; c < 3; ++c) {
            const double got = ctx.values.at(5, (off + 2) * 3 + c);
            expect(got == s.audio.values.at(5 + off, c), "interior context row wrong");
        }
    }
    bool threw = false;
    try {
        build_audio_context(s.audio, 10);
    } catch (const ConfigError&) {
        threw = true;
    }
    expect(threw, "k >= F accepted");
}

void check_repeat_shift() {
    Var e = constant(Tensor::from_rows(1, 2, {1.0, 2.0}));
    Var r = constant(Tensor::from_rows(2, 2, {0.5, 0.0, 0.0, -1.0}));
    Tensor got = val(repeat_shift(e, r));
    Tensor want = Tensor::from_rows(2, 2, {1.5, 2.0, 1.0, 1.0});
    expect(got.data == want.data, "repeat+shift oracle mismatch");
}

void check_adapter_time_invariance() {
    ParamStore store;
    Rng rng(53);
    const std::int64_t d = 16, ctxw = 12;
    TimestepParams tp = make_timestep_params(store, d, rng);
    AdapterP ap = make_adapter_params(store, ctxw, d, 2, 1, rng);
    // Silence the timestep pathway entirely: e == 0 for every t, the six
    // modulation rows come out as the (zeroed) bias, and r == 0.
    auto zero_var = [](const Var& v) {
        if (v) std::fill(v->value.data.begin(), v->value.data.end(), 0.0);
    };
    zero_var(tp.mlp2.fc2.w);
    zero_var(tp.mlp2.fc2.b);
    zero_var(tp.proj_e0.w);
    zero_var(tp.proj_e0.b);
    zero_var(tp.r);

    Tensor aud = random_tensor(rng, {6, ctxw});
    Tensor z = random_tensor(rng, {10, d});
    NoGradGuard off;
    Tensor y1 = val(adapter_forward(constant(aud), timestep_embed(0.1, tp), constant(z), ap));
    Tensor y2 = val(adapter_forward(constant(aud), timestep_embed(0.9, tp), constant(z), ap));
    expect(max_abs(sub(y1, y2)) <= 1e-12, "zeroed modulation still depends on t");
}

// --- flow / dit ------------------------------------------------------------

void check_flow_algebra() {
    Rng rng(59);
    for (int i = 0; i < 100; ++i) {
        Tensor x0 = random_tensor(rng, {2, 5});
        Tensor noise = random_tensor(rng, {2, 5});
        const double t = rng.uniform();
        Tensor zt = flow_forward(x0, noise, t);
        Tensor v = velocity_target(x0, noise);
        Tensor rec = sub(zt, scale(v, t));
        expect(max_abs(sub(rec, x0)) <= 1e-12, "x0 recovery identity failed");
    }
}

ModelConfig tiny_model_config() {
    ModelConfig mc;
    mc.dim = 8;
    mc.blocks = 1;
    mc.heads = 1;
    mc.patch = 2;
    mc.channels = 3;  // scenes are RGB, so the model must match
    mc.height = 8;
    mc.width = 8;
    mc.frames = 2;
    mc.adapter_k = 1;
    mc.adapter_blocks = 1;
    mc.audio_dim = 2;
    mc.text_tokens = 2;
    return mc;
}

void check_dit_constant_bias() {
    ModelConfig mc = tiny_model_config();
    Model m = build_model(mc, 3);
    for (const auto& e : m.store.entries()) {
        std::fill(e.second->value.data.begin(), e.second->value.data.end(), 0.0);
    }
    Var bias = m.dit.out_proj.b;
    std::fill(bias->value.data.begin(), bias->value.data.end(), 0.37);

    Rng rng(61);
    SyntheticScene s = generate_scene(rng, mc.frames, mc.height, mc.width, mc.audio_dim);
    Tensor z = random_tensor(rng, {mc.frames, mc.channels, mc.height, mc.width});
    ContextualAudio ctx = build_audio_context(s.audio, mc.adapter_k);
    ConditioningPack pack = assemble_conditioning(s.reference_frame, mc.frames);
    Tensor v = model_velocity(m, z, pack, ctx, 0.5);
    for (double x : v.data) expect(x == 0.37, "zeroed model is not the output bias constant");
}

void check_audio_injection_additivity() {
    ModelConfig mc = tiny_model_config();
    Model m = build_model(mc, 5);
    Rng rng(67);
    SyntheticScene s = generate_scene(rng, mc.frames, mc.height, mc.width, mc.audio_dim);
    Tensor z = random_tensor(rng, {mc.frames, mc.channels, mc.height, mc.width});
    ContextualAudio ctx = build_audio_context(s.audio, mc.adapter_k);
    ConditioningPack pack = assemble_conditioning(s.reference_frame, mc.frames);

    ForwardFlags skip;
    skip.skip_audio_injection = true;
    Tensor v_skip = model_velocity(m, z, pack, ctx, 0.3, skip);
    for (auto& b : m.dit.blocks) {
        std::fill(b.cross_audio.wo.w->value.data.begin(), b.cross_audio.wo.w->value.data.end(),
                  0.0);
    }
    Tensor v_zeroed = model_velocity(m, z, pack, ctx, 0.3);
    expect(v_skip.data == v_zeroed.data,
           "dropping the audio term differs from zeroing its projection");
}

void check_branch_statistics() {
    Rng rng(71);
    const int n = 100000;
    int counts[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) ++counts[static_cast<int>(loss_branch(rng.uniform()))];
    expect_near(counts[0] / static_cast<double>(n), 0.4, 0.01, "combined branch frequency");
    expect_near(counts[1] / static_cast<double>(n), 0.1, 0.01, "face branch frequency");
    expect_near(counts[2] / static_cast<double>(n), 0.5, 0.01, "lip branch frequency");
}

void check_masked_loss_branches() {
    Tensor pred = Tensor::full({2, 1, 2, 2}, 1.0);
    Tensor target = Tensor::zeros({2, 1, 2, 2});
    Tensor face = Tensor::from_rows(2, 2, {1.0, 1.0, 0.0, 0.0});
    Tensor lip = Tensor::from_rows(2, 2, {1.0, 0.0, 0.0, 0.0});
    NoGradGuard off;
    // err^2 == 1 everywhere, so each branch's loss is the mean of its weight.
    const double combined = val(masked_loss(constant(pred), target, face, lip, 0.1)).data[0];
    expect_near(combined, (4.0 * 1.0 + 2.0 + 1.0) / 4.0, 1e-12, "combined branch weighting");
    const double face_loss = val(masked_loss(constant(pred), target, face, lip, 0.45)).data[0];
    expect_near(face_loss, 2.0 / 4.0, 1e-12, "face branch weighting");
    const double lip_loss = val(masked_loss(constant(pred), target, face, lip, 0.8)).data[0];
    expect_near(lip_loss, 1.0 / 4.0, 1e-12, "lip branch weighting");
}

// --- guidance --------------------------------------------------------------

void check_guidance_identity() {
    Rng rng(73);
    BranchSet b;
    b.d_full = random_tensor(rng, {2, 3});
    b.d_no_audio = random_tensor(rng, {2, 3});
    b.d_no_refined = random_tensor(rng, {2, 3});
    Tensor out = guidance_combine(b, 0.0, 0.0);
    expect(out.data == b.d_full.data, "alpha=beta=0 is not the identity");
}

void check_guidance_equal_branches() {
    Rng rng(79);
    Tensor v = random_tensor(rng, {3, 4});
    BranchSet b{v, v, v};
    Tensor out = guidance_combine(b, 4.5, 3.0);
    for (std::size_t i = 0; i < v.data.size(); ++i) {
        expect(std::fabs(out.data[i] - v.data[i]) <=
                   1e-12 * std::max(1.0, std::fabs(v.data[i])),
               "equal branches did not collapse to v");
    }
}

void check_guidance_affine_shift() {
    Rng rng(83);
    BranchSet b;
    b.d_full = random_tensor(rng, {2, 3});
    b.d_no_audio = random_tensor(rng, {2, 3});
    b.d_no_refined = random_tensor(rng, {2, 3});
    Tensor base = guidance_combine(b, 4.5, 3.0);
    const double c = 0.75;
    BranchSet shifted{add_scalar(b.d_full, c), add_scalar(b.d_no_audio, c),
                      add_scalar(b.d_no_refined, c)};
    Tensor out = guidance_combine(shifted, 4.5, 3.0);
    expect(max_abs(sub(out, add_scalar(base, c))) <= 1e-9,
           "combination weights do not sum to 1");
}

void check_cfg_scale_one() {
    Rng rng(89);
    Tensor c = random_tensor(rng, {2, 2});
    Tensor u = random_tensor(rng, {2, 2});
    Tensor out = cfg_combine(c, u, 1.0);
    expect(max_abs(sub(out, c)) <= 1e-12, "cfg with scale 1 is not the conditional branch");
}

// --- windowing -------------------------------------------------------------

void check_plan_coverage() {
    Rng rng(97);
    for (int trial = 0; trial < 100; ++trial) {
        const std::int64_t l = 3 + rng.uniform_int(14);
        const std::int64_t m = 2 + rng.uniform_int(l - 2);
        const std::int64_t total = 1 + rng.uniform_int(120);
        WindowPlan plan = make_plan(total, l, m);
        expect(plan.schedule.front().first == 0, "plan does not start at 0");
        expect(plan.schedule.back().second == total, "plan does not end at total");
        std::vector<bool> covered(static_cast<std::size_t>(total), false);
        std::int64_t prev_s = -1;
        for (const auto& [s, e] : plan.schedule) {
            expect(s > prev_s, "window starts not increasing");
            expect(s >= 0 && s < e && e <= total, "window out of range");
            for (std::int64_t f = s; f < e; ++f) covered[static_cast<std::size_t>(f)] = true;
            prev_s = s;
        }
        for (bool c : covered) expect(c, "frame not covered by any window");
    }
}

void check_log_curve_shape() {
    for (std::int64_t m = 2; m <= 64; ++m) {
        WeightCurve c = log_weights(m);
        expect(c.w.front() == 0.0 && c.w.back() == 1.0, "log curve endpoints");
        for (std::size_t i = 1; i < c.w.size(); ++i) {
            expect(c.w[i] > c.w[i - 1], "log curve not strictly increasing");
        }
        for (std::size_t i = 2; i < c.w.size(); ++i) {
            const double d1 = c.w[i - 1] - c.w[i - 2];
            const double d2 = c.w[i] - c.w[i - 1];
            expect(d2 <= d1 + 1e-12, "log curve not concave");
        }
    }
}

void check_fusion_convexity() {
    Rng rng(101);
    Tensor payload = random_tensor(rng, {8, 3});
    auto stub = [&](const Tensor& window, std::int64_t s, std::int64_t e, double, double) {
        Tensor out = Tensor::zeros(window.shape);
        std::copy(payload.data.begin() + s * 3, payload.data.begin() + e * 3, out.data.begin());
        return out;
    };
    Tensor z0 = Tensor::zeros({8, 3});
    WindowPlan plan = make_plan(8, 4, 2);
    Tensor fused = dwsw_sample(stub, z0, plan, 3, log_weights(2));
    WindowPlan single = make_plan(8, 8, 2);
    Tensor direct = dwsw_sample(stub, z0, single, 3, log_weights(2));
    expect(max_abs(sub(fused, direct)) <= 1e-12, "equal stub outputs were changed by fusion");
}

void check_fusion_skip_and_order() {
    auto stub = [](const Tensor& window, std::int64_t, std::int64_t, double, double) {
        return window;
    };
    WindowPlan plan = make_plan(8, 4, 2);
    std::vector<WindowTraceEntry> trace;
    SampleOptions opts;
    opts.trace = &trace;
    dwsw_sample(stub, Tensor::zeros({8, 1}), plan, 3, log_weights(2), opts);
    const auto& sched = plan.schedule;
    expect(trace.size() == 3 * sched.size(), "trace is missing window visits");
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const std::int64_t tj = 3 - static_cast<std::int64_t>(i / sched.size());
        const auto& [s, e] = sched[i % sched.size()];
        expect(trace[i].t_index == tj && trace[i].s == s && trace[i].e == e,
               "windows not visited in schedule order within descending timesteps");
        expect(trace[i].fused == (s != 0 && tj != 3), "fusion skip rule violated");
    }
}

// --- metrics ---------------------------------------------------------------

void check_drift_stationary() {
    Rng rng(103);
    Tensor frame = random_tensor(rng, {1, 2, 3, 3});
    Tensor seq = Tensor::zeros({6, 2, 3, 3});
    for (int i = 0; i < 6; ++i) {
        std::copy(frame.data.begin(), frame.data.end(), seq.data.begin() + i * frame.numel());
    }
    for (const auto& row : latent_drift(seq, 2)) {
        expect(row.mean_shift == 0.0 && row.std_shift == 0.0, "stationary sequence drifted");
    }
}

void check_drift_ramp_and_translation() {
    Rng rng(107);
    Tensor base = random_tensor(rng, {2, 1, 4, 4});
    Tensor seq = Tensor::zeros({8, 1, 4, 4});
    for (int clip = 0; clip < 4; ++clip) {
        for (std::size_t i = 0; i < base.data.size(); ++i) {
            seq.data[clip * base.data.size() + i] = base.data[i] + 0.1 * clip;
        }
    }
    auto rows = latent_drift(seq, 2);
    for (int clip = 0; clip < 4; ++clip) {
        expect_near(rows[static_cast<std::size_t>(clip)].mean_shift, 0.1 * clip, 1e-9,
                    "mean ramp drift");
        expect(rows[static_cast<std::size_t>(clip)].std_shift <= 1e-12,
               "translation changed the std");
    }
}

void check_drift_channel_permutation() {
    Rng rng(109);
    Tensor seq = random_tensor(rng, {4, 2, 3, 3});
    Tensor swapped = seq;
    const std::int64_t hw = 9;
    for (std::int64_t f = 0; f < 4; ++f) {
        for (std::int64_t i = 0; i < hw; ++i) {
            std::swap(swapped.data[static_cast<std::size_t>((f * 2 + 0) * hw + i)],
                      swapped.data[static_cast<std::size_t>((f * 2 + 1) * hw + i)]);
        }
    }
    auto a = latent_drift(seq, 2);
    auto b = latent_drift(swapped, 2);
    for (std::size_t i = 0; i < a.size(); ++i) {
        // Summation order changes under the swap, so allow rounding noise.
        expect(std::fabs(a[i].mean_shift - b[i].mean_shift) <= 1e-12 &&
                   std::fabs(a[i].std_shift - b[i].std_shift) <= 1e-12,
               "drift changed under channel permutation");
    }
}

void check_ciede_basics() {
    Rng rng(113);
    for (int i = 0; i < 20; ++i) {
        std::array<double, 3> a{rng.uniform(), rng.uniform(), rng.uniform()};
        std::array<double, 3> b{rng.uniform(), rng.uniform(), rng.uniform()};
        expect(ciede2000(a, a) == 0.0, "identical colors have nonzero distance");
        expect_near(ciede2000(a, b), ciede2000(b, a), 1e-12, "distance not symmetric");
    }
    bool threw = false;
    try {
        ciede2000({1.2, 0.0, 0.0}, {0.0, 0.0, 0.0});
    } catch (const DomainError&) {
        threw = true;
    }
    expect(threw, "out-of-range channel accepted");
}

void check_sync_proxy_paths() {
    Rng rng(127);
    SyntheticScene s = generate_scene(rng, 64, 16, 16, 4);
    expect(sync_proxy(s.audio, s.video, s.lip_mask) >= 0.99, "generated scene sync too low");
    Tensor constant_frames = Tensor::full(s.video.shape, 0.5);
    bool threw = false;
    try {
        sync_proxy(s.audio, constant_frames, s.lip_mask);
    } catch (const UndefinedCorrelationError&) {
        threw = true;
    }
    expect(threw, "zero-variance intensity did not raise");
}

// --- config ----------------------------------------------------------------

void check_config_round_trip() {
    ExperimentConfig c = default_config();
    nlohmann::json j1 = config_to_json(c);
    ExperimentConfig c2 = config_from_json(j1);
    expect(config_to_json(c2) == j1, "config JSON round trip drifted");
}

void check_config_unknown_key() {
    bool threw = false;
    try {
        config_from_json(nlohmann::json{{"modle", nlohmann::json::object()}});
    } catch (const ConfigError& e) {
        threw = std::string(e.what()).find("modle") != std::string::npos;
    }
    expect(threw, "unknown key not rejected by name");
}

void check_env_seed() {
    setenv("LFF_SEED", "777", 1);
    ExperimentConfig c = default_config();
    apply_env_seed(c);
    expect(c.seed == 777, "LFF_SEED not applied");
    setenv("LFF_SEED", "x7", 1);
    bool threw = false;
    try {
        apply_env_seed(c);
    } catch (const ConfigError&) {
        threw = true;
    }
    unsetenv("LFF_SEED");
    expect(threw, "malformed LFF_SEED accepted");
}

}  // namespace

int selftest_run(std::ostream& out) {
    using Check = std::pair<const char*, std::function<void()>>;
    const std::vector<Check> checks = {
        {"tensor/rng-determinism", check_rng_determinism},
        {"tensor/gauss-moments", check_gauss_moments},
        {"tensor/layer-norm-rows", check_layer_norm_rows},
        {"tensor/softmax-rows", check_softmax_rows},
        {"tensor/matmul-identity", check_matmul_identity},
        {"tensor/mlp-gradcheck", check_mlp_gradcheck},
        {"tensor/file-round-trip", check_tensor_round_trip},
        {"tensor/adam-zero-grad", check_adam_zero_grad},
        {"synth/deterministic", check_synth_deterministic},
        {"synth/reference-is-frame0", check_synth_reference_frame},
        {"synth/mouth-amplitude-corr", check_synth_mouth_correlation},
        {"synth/amplitude-column", check_synth_amplitude_column},
        {"adapter/context-rows", check_context_rows},
        {"adapter/repeat-shift", check_repeat_shift},
        {"adapter/zero-modulation-time-invariant", check_adapter_time_invariance},
        {"flow/recover-x0", check_flow_algebra},
        {"dit/zero-params-constant-bias", check_dit_constant_bias},
        {"dit/audio-injection-additivity", check_audio_injection_additivity},
        {"dit/branch-statistics", check_branch_statistics},
        {"dit/masked-loss-branches", check_masked_loss_branches},
        {"guidance/identity-at-zero", check_guidance_identity},
        {"guidance/equal-branches", check_guidance_equal_branches},
        {"guidance/affine-shift", check_guidance_affine_shift},
        {"guidance/cfg-scale-one", check_cfg_scale_one},
        {"window/plan-coverage", check_plan_coverage},
        {"window/log-curve-shape", check_log_curve_shape},
        {"window/fusion-convexity", check_fusion_convexity},
        {"window/fusion-skip-and-order", check_fusion_skip_and_order},
        {"metrics/drift-stationary", check_drift_stationary},
        {"metrics/drift-ramp-translation", check_drift_ramp_and_translation},
        {"metrics/drift-channel-permutation", check_drift_channel_permutation},
        {"metrics/ciede-basics", check_ciede_basics},
        {"metrics/sync-proxy-paths", check_sync_proxy_paths},
        {"config/json-round-trip", check_config_round_trip},
        {"config/unknown-key", check_config_unknown_key},
        {"config/env-seed", check_env_seed},
    };

    int failures = 0;
    for (const auto& [name, fn] : checks) {
        try {
            fn();
            out << "PASS " << name << "\n";
        } catch (const std::exception& e) {
            ++failures;
            out << "FAIL " << name << ": " << e.what() << "\n";
        }
    }
    out << (failures == 0 ? "all " : "") << checks.size() - failures << "/" << checks.size()
        << " selftests passed\n";
    return failures;
}

}  // namespace lff
