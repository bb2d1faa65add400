// Acceptance harness: one checkable criterion per entry, each printing a
// single [PASS]/[FAIL] line. Run all with no arguments (or --criterion 0),
// or a single one with --criterion N. Exit code 1 when anything fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "ciede_oracle.hpp"
#include "gradcheck.hpp"
#include "lff/adapter.hpp"
#include "lff/config.hpp"
#include "lff/dit.hpp"
#include "lff/guidance.hpp"
#include "lff/harness.hpp"
#include "lff/metrics.hpp"
#include "lff/nn.hpp"
#include "lff/train.hpp"
#include "lff/window.hpp"

namespace fs = std::filesystem;
using lff::Tensor;
using lff::Var;

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

struct Check {
    std::vector<std::string> fails;
    void ok(bool cond, const std::string& what) {
        if (!cond) fails.push_back(what);
    }
    void close(double a, double b, double tol, const std::string& what) {
        if (!(std::fabs(a - b) <= tol)) {
            std::ostringstream ss;
            ss << what << " (got " << a << ", want " << b << " +/- " << tol << ")";
            fails.push_back(ss.str());
        }
    }
    static void info(const std::string& msg) { std::cout << "  [info] " << msg << "\n"; }
};

Tensor rand_tensor(lff::Rng& rng, std::vector<std::int64_t> shape, double s = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.data) v = s * rng.gauss();
    return t;
}

void wake_model(lff::Model& m, std::uint64_t seed) {
    // Zero-initialized gates and output layers make a fresh model exactly
    // silent; fill them with small noise so gradients flow everywhere.
    lff::Rng rng(seed, 0xaaaa);
    for (const auto& [name, var] : m.store.entries()) {
        bool all_zero = true;
        for (double v : var->value.data) {
            if (v != 0.0) {
                all_zero = false;
                break;
            }
        }
        if (all_zero) {
            for (auto& v : var->value.data) v = 0.05 * rng.gauss();
        }
    }
}

lff::ModelConfig tiny_model_config() {
    lff::ModelConfig c;
    c.dim = 8;
    c.blocks = 1;
    c.heads = 2;
    c.patch = 2;
    c.channels = 1;
    c.height = 4;
    c.width = 4;
    c.frames = 2;
    c.adapter_k = 1;
    c.adapter_blocks = 1;
    c.audio_dim = 2;
    c.text_tokens = 2;
    return c;
}

lff::ContextualAudio tiny_audio(lff::Rng& rng, std::int64_t frames, std::int64_t dim,
                                std::int64_t k) {
    lff::RawAudioFeatures raw;
    raw.values = rand_tensor(rng, {frames, dim}, 0.5);
    return lff::build_audio_context(raw, k);
}

// ---------------------------------------------------------------------------
// criterion 1: guidance combination identities

void crit_guidance_identity(Check& ck) {
    const double t0 = now_seconds();
    lff::Rng rng(9001);
    lff::BranchSet b;
    b.d_full = rand_tensor(rng, {5, 4});
    b.d_no_audio = rand_tensor(rng, {5, 4});
    b.d_no_refined = rand_tensor(rng, {5, 4});

    Tensor passthrough = lff::guidance_combine(b, 0.0, 0.0);
    ck.ok(passthrough.data == b.d_full.data,
          "zero weights must return the full branch bit-identically");

    lff::BranchSet eq;
    eq.d_full = rand_tensor(rng, {3, 7});
    eq.d_no_audio = eq.d_full;
    eq.d_no_refined = eq.d_full;
    Tensor combined = lff::guidance_combine(eq, 4.5, 3.0);
    ck.ok(lff::max_abs(lff::sub(combined, eq.d_full)) <= 1e-12,
          "equal branches must combine to themselves within 1e-12");
    ck.ok(now_seconds() - t0 < 1.0, "identity checks must finish within 1 s");
}

// criterion 2: guidance arithmetic on scalar branches

void crit_guidance_arithmetic(Check& ck) {
    lff::BranchSet b;
    b.d_full = Tensor::full({1, 1}, 1.0);
    b.d_no_audio = Tensor::full({1, 1}, 0.0);
    b.d_no_refined = Tensor::full({1, 1}, 0.0);
    Tensor out = lff::guidance_combine(b, 4.5, 3.0);
    ck.ok(out.data.size() == 1 && out.data[0] == 8.5,
          "branches (1, 0, 0) with weights 4.5 / 3.0 must give exactly 8.5");
}

// criterion 3: logarithmic overlap weights

void crit_log_weights(Check& ck) {
    auto c3 = lff::log_weights(3);
    const double direct =
        std::log(1.0 + 0.5 * (std::exp(1.0) - 1.0)) / std::log(std::exp(1.0));
    ck.ok(c3.w.size() == 3, "m=3 curve must have 3 entries");
    ck.close(c3.w[0], 0.0, 0.0, "m=3 first weight must be exactly 0");
    ck.close(c3.w[2], 1.0, 0.0, "m=3 last weight must be exactly 1");
    ck.close(c3.w[1], direct, 1e-9, "m=3 midpoint must match direct evaluation");
    ck.close(c3.w[1], 0.620114507, 1e-9, "m=3 midpoint reference value");

    for (std::int64_t m = 2; m <= 64; ++m) {
        auto c = lff::log_weights(m);
        bool increasing = true;
        for (std::int64_t i = 1; i < m; ++i) {
            if (!(c.w[static_cast<std::size_t>(i)] > c.w[static_cast<std::size_t>(i - 1)])) {
                increasing = false;
            }
        }
        ck.ok(increasing, "curve must be strictly increasing at m=" + std::to_string(m));
        ck.ok(c.w.front() == 0.0 && c.w.back() == 1.0,
              "endpoints must be exact at m=" + std::to_string(m));
    }
}

// criterion 4: window schedule construction

void crit_window_schedule(Check& ck) {
    auto plan = lff::make_plan(8, 4, 2);
    const std::vector<std::pair<std::int64_t, std::int64_t>> want = {{0, 4}, {2, 6}, {4, 8}};
    ck.ok(plan.schedule == want, "schedule for (8, 4, 2) must be [(0,4), (2,6), (4,8)]");

    lff::Rng rng(9004);
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::int64_t length = 3 + rng.uniform_int(32);
        const std::int64_t overlap = 2 + rng.uniform_int(length - 2);
        const std::int64_t total = 1 + rng.uniform_int(300);
        auto p = lff::make_plan(total, length, overlap);
        ++checked;
        if (p.schedule.empty() || p.schedule.front().first != 0 ||
            p.schedule.back().second != total) {
            ck.ok(false, "plan must start at 0 and end at the total frame count");
            return;
        }
        for (std::size_t i = 0; i < p.schedule.size(); ++i) {
            auto [s, e] = p.schedule[i];
            if (e <= s || e > total) {
                ck.ok(false, "window bounds out of range");
                return;
            }
            if (i > 0) {
                if (s != p.schedule[i - 1].first + (length - overlap)) {
                    ck.ok(false, "consecutive starts must differ by length - overlap");
                    return;
                }
                if (s > p.schedule[i - 1].second) {
                    ck.ok(false, "windows must leave no gap");
                    return;
                }
            }
        }
    }
    ck.ok(checked == 1000, "expected 1000 randomized plans");
}

// criterion 5: overlap fusion consistency

void crit_fusion(Check& ck) {
    lff::Rng rng(9005);
    Tensor payload = rand_tensor(rng, {8, 3});
    // A denoiser that depends only on absolute frame positions gives every
    // window identical values on the overlap, so fusion must be invisible.
    auto stub = [&](const Tensor& window, std::int64_t s, std::int64_t e, double, double) {
        Tensor out = Tensor::zeros(window.shape);
        std::copy(payload.data.begin() + s * 3, payload.data.begin() + e * 3,
                  out.data.begin());
        return out;
    };
    Tensor z0 = Tensor::zeros({8, 3});
    Tensor fused =
        lff::dwsw_sample(stub, z0, lff::make_plan(8, 4, 2), 3, lff::log_weights(2));
    Tensor single =
        lff::dwsw_sample(stub, z0, lff::make_plan(8, 8, 2), 3, lff::log_weights(2));
    ck.ok(lff::max_abs(lff::sub(fused, single)) <= 1e-12,
          "sliding output must equal the single-window output within 1e-12");

    std::vector<lff::WindowTraceEntry> trace;
    lff::SampleOptions opts;
    opts.trace = &trace;
    (void)lff::dwsw_sample(stub, z0, lff::make_plan(8, 4, 2), 3, lff::log_weights(2), opts);
    ck.ok(trace.size() == 9, "expected 3 windows x 3 timesteps in the trace");
    for (const auto& entry : trace) {
        const bool want_fused = entry.s != 0 && entry.t_index != 3;
        ck.ok(entry.fused == want_fused,
              "fusion must be skipped exactly at the first window and the first timestep");
    }
}

// criterion 6: flow interpolation algebra

void crit_flow_algebra(Check& ck) {
    lff::Rng rng(9006);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        Tensor x0 = rand_tensor(rng, {2, 3});
        Tensor noise = rand_tensor(rng, {2, 3});
        const double t = rng.uniform();
        Tensor zt = lff::flow_forward(x0, noise, t);
        Tensor v = lff::velocity_target(x0, noise);
        for (std::size_t i = 0; i < x0.data.size(); ++i) {
            worst = std::max(worst, std::fabs(zt.data[i] - t * v.data[i] - x0.data[i]));
        }

        double ts[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
        std::sort(ts, ts + 3);
        if (ts[0] == ts[1] || ts[1] == ts[2]) continue;
        Tensor one = lff::euler_step(zt, v, ts[2], ts[0]);
        Tensor two = lff::euler_step(lff::euler_step(zt, v, ts[2], ts[1]), v, ts[1], ts[0]);
        for (std::size_t i = 0; i < one.data.size(); ++i) {
            worst = std::max(worst, std::fabs(one.data[i] - two.data[i]));
        }
    }
    Check::info("flow algebra worst residual " + std::to_string(worst));
    ck.ok(worst <= 1e-12, "interpolation recovery and split steps must agree within 1e-12");
}

// criterion 7: gradient checks across ops and models

lfftest::GradReport op_gradcheck(const std::string& name,
                                 const std::function<lfftest::GradReport()>& run, Check& ck) {
    lfftest::GradReport rep = run();
    ck.ok(rep.worst_rel <= 1e-5,
          "op '" + name + "' worst rel err " + std::to_string(rep.worst_rel) + " at " +
              rep.worst_site);
    return rep;
}

void crit_gradients(Check& ck) {
    const double t0 = now_seconds();
    lff::Rng rng(9007);
    using lfftest::gradcheck;

    auto L = [&](std::vector<std::int64_t> shape) {
        return lff::leaf(rand_tensor(rng, std::move(shape), 0.7));
    };

    {
        Var a = L({3, 4}), b = L({4, 2});
        op_gradcheck("matmul", [&] {
            return gradcheck({{"a", a}, {"b", b}},
                             [&] { return lff::sum(lff::gelu(lff::matmul(a, b))); });
        }, ck);
    }
    {
        Var a = L({3, 4});
        op_gradcheck("transpose", [&] {
            return gradcheck({{"a", a}},
                             [&] { return lff::sum(lff::gelu(lff::transpose(a))); });
        }, ck);
    }
    {
        Var a = L({3, 4}), b = L({3, 4});
        op_gradcheck("add/sub/mul", [&] {
            return gradcheck({{"a", a}, {"b", b}}, [&] {
                return lff::mean(lff::mul(lff::add(a, b), lff::sub(a, b)));
            });
        }, ck);
    }
    {
        Var a = L({3, 4}), r = L({1, 4});
        op_gradcheck("rowwise broadcast", [&] {
            return gradcheck({{"a", a}, {"r", r}}, [&] {
                return lff::mean(lff::mul_rowwise(lff::add_rowwise(a, r), r));
            });
        }, ck);
    }
    {
        Var a = L({2, 5});
        op_gradcheck("scale/add_scalar", [&] {
            return gradcheck({{"a", a}}, [&] {
                return lff::sum(lff::gelu(lff::scale(lff::add_scalar(a, 0.3), 1.7)));
            });
        }, ck);
    }
    {
        Var a = L({3, 6}), g = L({1, 6});
        op_gradcheck("layer_norm", [&] {
            return gradcheck({{"a", a}, {"g", g}}, [&] {
                return lff::mean(lff::mul_rowwise(lff::layer_norm(a, 1e-6), g));
            });
        }, ck);
    }
    {
        Var a = L({3, 5});
        op_gradcheck("softmax_rows", [&] {
            return gradcheck({{"a", a}}, [&] {
                return lff::mean(lff::mul(lff::softmax_rows(a), a));
            });
        }, ck);
    }
    {
        Var a = L({4, 3});
        op_gradcheck("gelu", [&] {
            return gradcheck({{"a", a}}, [&] { return lff::sum(lff::gelu(a)); });
        }, ck);
    }
    {
        Var a = L({3, 4});
        op_gradcheck("reshape", [&] {
            return gradcheck({{"a", a}}, [&] {
                return lff::mean(lff::gelu(lff::reshape(a, {2, 6})));
            });
        }, ck);
    }
    {
        Var a = L({5, 6});
        op_gradcheck("slice rows/cols", [&] {
            return gradcheck({{"a", a}}, [&] {
                return lff::sum(lff::gelu(lff::slice_cols(lff::slice_rows(a, 1, 4), 2, 5)));
            });
        }, ck);
    }
    {
        Var a = L({2, 3}), b = L({3, 3}), c = L({5, 2});
        op_gradcheck("concat rows/cols", [&] {
            return gradcheck({{"a", a}, {"b", b}, {"c", c}}, [&] {
                return lff::mean(lff::gelu(lff::concat_cols(lff::concat_rows(a, b), c)));
            });
        }, ck);
    }
    {
        Var a = L({3, 4});
        op_gradcheck("gather_rows", [&] {
            return gradcheck({{"a", a}}, [&] {
                return lff::mean(lff::gelu(lff::gather_rows(a, {0, 2, 0, 1})));
            });
        }, ck);
    }
    {
        Var a = L({3, 3});
        op_gradcheck("sum/mean", [&] {
            return gradcheck({{"a", a}}, [&] {
                return lff::add(lff::sum(lff::mul(a, a)), lff::mean(a));
            });
        }, ck);
    }
    {
        Var q = L({3, 4}), k = L({5, 4}), v = L({5, 4});
        op_gradcheck("attention", [&] {
            return gradcheck({{"q", q}, {"k", k}, {"v", v}}, [&] {
                return lff::mean(lff::attention(q, k, v, 2, 0.5));
            });
        }, ck);
    }
    {
        Var a = L({2, 3});
        op_gradcheck("permute_elements", [&] {
            return gradcheck({{"a", a}}, [&] {
                return lff::mean(lff::gelu(lff::permute_elements(a, {0, 0, 1, 2, 3, 4}, {2, 3})));
            });
        }, ck);
    }

    {
        // Full audio-refinement path: timestep pathway + refinement blocks,
        // differentiating through every parameter and both inputs.
        lff::ParamStore store;
        lff::Rng prng(9107);
        lff::TimestepParams tp = lff::make_timestep_params(store, 8, prng);
        lff::AdapterP ad = lff::make_adapter_params(store, 6, 8, 1, 2, prng);
        Var aud = lff::leaf(rand_tensor(rng, {4, 6}, 0.5));
        Var z = lff::leaf(rand_tensor(rng, {3, 8}, 0.5));
        std::vector<std::pair<std::string, Var>> leaves = store.entries();
        leaves.push_back({"input.aud", aud});
        leaves.push_back({"input.z", z});
        lfftest::GradReport rep = lfftest::gradcheck(leaves, [&] {
            lff::TimestepEmbeds te = lff::timestep_embed(0.37, tp);
            Var out = lff::adapter_forward(aud, te, z, ad);
            return lff::mean(lff::mul(out, out));
        });
        Check::info("adapter gradcheck: " + std::to_string(rep.checked) + " scalars, worst " +
                    std::to_string(rep.worst_rel) + " at " + rep.worst_site);
        ck.ok(rep.worst_rel <= 1e-5, "adapter forward gradients must match finite differences");
    }

    {
        lff::ModelConfig cfg = tiny_model_config();
        lff::Model m = lff::build_model(cfg, 9207);
        wake_model(m, 9207);
        lff::Rng drng(9307);
        Tensor z = rand_tensor(drng, {2, 1, 4, 4}, 0.5);
        Tensor ref = rand_tensor(drng, {1, 4, 4}, 0.5);
        lff::ConditioningPack pack = lff::assemble_conditioning(ref, 2);
        lff::ContextualAudio audio = tiny_audio(drng, 2, 2, 1);
        Tensor target = rand_tensor(drng, {2, 1, 4, 4}, 0.5);
        Tensor face = Tensor::zeros({4, 4});
        Tensor lip = Tensor::zeros({4, 4});
        for (std::int64_t i = 5; i < 11; ++i) face.data[static_cast<std::size_t>(i)] = 1.0;
        for (std::int64_t i = 9; i < 11; ++i) lip.data[static_cast<std::size_t>(i)] = 1.0;

        lfftest::GradReport rep = lfftest::gradcheck(m.store.entries(), [&] {
            lff::TimestepEmbeds te = lff::timestep_embed(0.41, m.tparams);
            Var v = lff::model_forward(m, z, pack, audio, te);
            return lff::masked_loss(v, target, face, lip, 0.2);
        });
        Check::info("model gradcheck: " + std::to_string(rep.checked) + " scalars, worst " +
                    std::to_string(rep.worst_rel) + " at " + rep.worst_site);
        ck.ok(rep.worst_rel <= 1e-5, "model forward gradients must match finite differences");
        ck.ok(rep.checked > 500, "model gradcheck must cover the parameter set");
    }

    const double elapsed = now_seconds() - t0;
    Check::info("gradient suite took " + std::to_string(elapsed) + " s");
    ck.ok(elapsed < 120.0, "gradient suite must finish within 120 s");
}

// criterion 8: loss branch selection statistics

void crit_branch_stats(Check& ck) {
    lff::Rng rng(9008);
    std::int64_t counts[3] = {0, 0, 0};
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        counts[static_cast<int>(lff::loss_branch(rng.uniform()))]++;
    }
    const double fc = static_cast<double>(counts[0]) / n;
    const double ff = static_cast<double>(counts[1]) / n;
    const double fl = static_cast<double>(counts[2]) / n;
    Check::info("branch frequencies: combined " + std::to_string(fc) + ", face " +
                std::to_string(ff) + ", lip " + std::to_string(fl));
    ck.close(fc, 0.4, 0.01, "combined-branch frequency");
    ck.close(ff, 0.1, 0.01, "face-branch frequency");
    ck.close(fl, 0.5, 0.01, "lip-branch frequency");
}

// criterion 9: adapter timestep invariance when modulation is zeroed

void crit_adapter_collapse(Check& ck) {
    lff::ParamStore store;
    lff::Rng rng(9009);
    lff::TimestepParams tp = lff::make_timestep_params(store, 8, rng);
    lff::AdapterP ad = lff::make_adapter_params(store, 6, 8, 2, 2, rng);
    lff::Rng irng(9109);
    Var aud = lff::constant(rand_tensor(irng, {4, 6}, 0.5));
    Var z = lff::constant(rand_tensor(irng, {3, 8}, 0.5));
    lff::NoGradGuard ng;

    auto run = [&](double t) {
        lff::TimestepEmbeds te = lff::timestep_embed(t, tp);
        return lff::adapter_forward(aud, te, z, ad)->value;
    };

    const double live_diff = lff::max_abs(lff::sub(run(0.1), run(0.9)));
    ck.ok(live_diff > 1e-8, "an intact adapter must depend on the timestep");

    // Zero the embedding heads and the learned shift so both modulation
    // tensors vanish for every t.
    for (Var v : {tp.mlp2.fc2.w, tp.mlp2.fc2.b, tp.proj_e0.w, tp.proj_e0.b, tp.r}) {
        std::fill(v->value.data.begin(), v->value.data.end(), 0.0);
    }
    const double dead_diff = lff::max_abs(lff::sub(run(0.1), run(0.9)));
    Check::info("timestep sensitivity: intact " + std::to_string(live_diff) + ", zeroed " +
                std::to_string(dead_diff));
    ck.ok(dead_diff <= 1e-12, "zeroed modulation must make the output timestep-invariant");
}

// criterion 10: default-config training smoke

void crit_training_smoke(Check& ck) {
    lff::ExperimentConfig cfg = lff::default_config();
    std::vector<lff::SyntheticScene> pool = lff::make_scenes(cfg);

    lff::TrainConfig tc;
    tc.steps = cfg.train_steps;
    tc.lr = cfg.lr;
    tc.p_drop = cfg.p_drop;
    tc.seed = cfg.seed;
    tc.val_pairs = cfg.val_pairs;

    const double t0 = now_seconds();
    lff::Model m1 = lff::build_model(cfg.model, cfg.seed);
    lff::TrainResult r1 = lff::train_loop(m1, pool, tc);
    const double elapsed = now_seconds() - t0;
    Check::info("run 1: " + std::to_string(elapsed) + " s, val MSE " +
                std::to_string(r1.initial_val_mse) + " -> " + std::to_string(r1.final_val_mse));
    ck.ok(elapsed < 600.0, "2000 training steps must finish within 10 minutes");
    ck.ok(r1.steps_run == cfg.train_steps, "run must complete every step");
    ck.ok(r1.final_val_mse <= 0.5 * r1.initial_val_mse,
          "validation MSE must at least halve over training");

    lff::Model m2 = lff::build_model(cfg.model, cfg.seed);
    lff::TrainResult r2 = lff::train_loop(m2, pool, tc);
    ck.ok(r1.losses == r2.losses, "same-seed loss curves must be bit-identical");
    ck.ok(r1.initial_val_mse == r2.initial_val_mse && r1.final_val_mse == r2.final_val_mse,
          "same-seed validation numbers must be bit-identical");
}

// criteria 11 and 12 share one trained mid-size model

struct SmallRun {
    lff::ExperimentConfig cfg;
    lff::Model model;
};

SmallRun& small_trained() {
    static std::unique_ptr<SmallRun> cached;
    if (!cached) {
        lff::ExperimentConfig cfg;
        cfg.model.dim = 32;
        cfg.model.blocks = 2;
        cfg.model.heads = 4;
        cfg.model.patch = 4;
        cfg.model.channels = 3;
        cfg.model.height = 8;
        cfg.model.width = 8;
        cfg.model.frames = 16;
        cfg.model.adapter_k = 1;
        cfg.model.adapter_blocks = 2;
        cfg.model.audio_dim = 4;
        cfg.model.text_tokens = 2;
        cfg.scenes = 6;
        cfg.train_steps = 8000;
        cfg.lr = 1e-3;
        cfg.p_drop = 0.15;
        cfg.seed = 7;
        cfg.val_pairs = 4;
        cfg.window_total = 256;
        cfg.window_length = 16;
        cfg.window_overlap = 8;
        cfg.sampler_steps = 8;
        lff::validate_config(cfg);

        Check::info("training shared rollout model (" + std::to_string(cfg.train_steps) +
                    " steps)");
        const double t0 = now_seconds();
        lff::Model model = lff::build_model(cfg.model, cfg.seed);
        std::vector<lff::SyntheticScene> pool = lff::make_scenes(cfg);
        lff::TrainConfig tc;
        tc.steps = cfg.train_steps;
        tc.lr = cfg.lr;
        tc.p_drop = cfg.p_drop;
        tc.seed = cfg.seed;
        tc.val_pairs = cfg.val_pairs;
        lff::TrainResult r = lff::train_loop(model, pool, tc);
        Check::info("shared model trained in " + std::to_string(now_seconds() - t0) +
                    " s, val MSE " + std::to_string(r.initial_val_mse) + " -> " +
                    std::to_string(r.final_val_mse));
        cached = std::make_unique<SmallRun>(SmallRun{cfg, std::move(model)});
    }
    return *cached;
}

// criterion 11: adapter reduces long-rollout drift

void crit_drift_direction(Check& ck) {
    const double t0 = now_seconds();
    SmallRun& run = small_trained();
    lff::ExperimentConfig cfg = run.cfg;
    cfg.guidance.mode = lff::GuidanceMode::off;
    lff::DirectionResult d = lff::adapter_drift_direction(cfg, run.model, 10);
    for (const auto& row : d.rows) Check::info(row);
    ck.ok(d.total == 10, "expected 10 paired seeds");
    ck.ok(d.wins >= 8, "adapter-on must win drift and color stability in >= 8/10 seeds (got " +
                           std::to_string(d.wins) + ")");
    const double elapsed = now_seconds() - t0;
    Check::info("drift direction took " + std::to_string(elapsed) + " s");
    ck.ok(elapsed < 1800.0, "drift direction must finish within 30 minutes");
}

// criterion 12: audio guidance improves sync

void crit_sync_direction(Check& ck) {
    const double t0 = now_seconds();
    SmallRun& run = small_trained();
    lff::ExperimentConfig cfg = run.cfg;
    cfg.guidance.alpha = 4.5;
    cfg.guidance.beta = 3.0;
    lff::DirectionResult d = lff::guidance_sync_direction(cfg, run.model, 10);
    for (const auto& row : d.rows) Check::info(row);
    ck.ok(d.total == 10, "expected 10 paired seeds");
    ck.ok(d.wins >= 7, "guided sampling must win the sync proxy in >= 7/10 seeds (got " +
                           std::to_string(d.wins) + ")");
    const double elapsed = now_seconds() - t0;
    Check::info("sync direction took " + std::to_string(elapsed) + " s");
    ck.ok(elapsed < 1800.0, "sync direction must finish within 30 minutes");
}

// criterion 13: color difference oracle agreement

void crit_ciede(Check& ck) {
    ck.ok(lff::ciede2000({0.3, 0.7, 0.2}, {0.3, 0.7, 0.2}) == 0.0,
          "identical colors must give exactly 0");
    ck.close(lff::ciede2000({0, 0, 0}, {1, 1, 1}), 100.0, 1e-4, "black vs white");

    lff::Rng rng(9013);
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        std::array<double, 3> a{rng.uniform(), rng.uniform(), rng.uniform()};
        std::array<double, 3> b{rng.uniform(), rng.uniform(), rng.uniform()};
        const double mine = lff::ciede2000(a, b);
        const double ref = lfftest::oracle_ciede2000(a, b);
        worst = std::max(worst, std::fabs(mine - ref));
        ck.ok(mine == lff::ciede2000(b, a), "color difference must be symmetric");
    }
    Check::info("worst oracle deviation " + std::to_string(worst));
    ck.ok(worst <= 1e-9, "random pairs must match the independent oracle within 1e-9");
}

// criterion 14: overlap weight ablation ordering

void crit_weight_ablation(Check& ck) {
    const fs::path dir = fs::temp_directory_path() / "lff_acceptance" / "ablate_weights";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ostringstream log;
    lff::cmd_ablate(lff::default_config(), "", "weights", dir.string(), "acceptance ablate",
                    log);

    std::ifstream in(dir / "ablate_weights.csv");
    ck.ok(in.good(), "ablation must write ablate_weights.csv");
    std::string line;
    std::getline(in, line);
    ck.ok(line == "scheme,seam_jump_max,seam_jump_mean", "csv header");
    std::map<std::string, double> max_jump;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string scheme, cell;
        std::getline(ss, scheme, ',');
        std::getline(ss, cell, ',');
        max_jump[scheme] = std::stod(cell);
    }
    ck.ok(max_jump.size() == 3, "expected one row per scheme");
    ck.ok(max_jump.count("logarithmic") == 1 && max_jump.count("fixed") == 1 &&
              max_jump.count("uniform") == 1,
          "expected logarithmic, fixed and uniform rows");
    if (max_jump.count("logarithmic") && max_jump.count("fixed")) {
        Check::info("seam jumps: logarithmic " + std::to_string(max_jump["logarithmic"]) +
                    ", fixed " + std::to_string(max_jump["fixed"]) + ", uniform " +
                    std::to_string(max_jump["uniform"]));
        ck.ok(max_jump["logarithmic"] <= max_jump["fixed"],
              "logarithmic weights must not exceed the fixed-weight seam jump");
    }
}

struct Criterion {
    int id;
    const char* title;
    std::function<void(Check&)> fn;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all = {
        {1, "guidance combination identities", crit_guidance_identity},
        {2, "guidance arithmetic on scalar branches", crit_guidance_arithmetic},
        {3, "logarithmic overlap weights", crit_log_weights},
        {4, "window schedule construction", crit_window_schedule},
        {5, "overlap fusion consistency", crit_fusion},
        {6, "flow interpolation algebra", crit_flow_algebra},
        {7, "gradient checks across ops and models", crit_gradients},
        {8, "loss branch selection statistics", crit_branch_stats},
        {9, "adapter timestep invariance when modulation is zeroed", crit_adapter_collapse},
        {10, "default-config training smoke", crit_training_smoke},
        {11, "adapter reduces long-rollout drift", crit_drift_direction},
        {12, "audio guidance improves sync", crit_sync_direction},
        {13, "color difference oracle agreement", crit_ciede},
        {14, "overlap weight ablation ordering", crit_weight_ablation},
    };
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    int selected = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            selected = std::atoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: %s [--criterion N]  (N = 0 runs everything)\n",
                         argv[0]);
            return 2;
        }
    }

    int failures = 0;
    bool ran_any = false;
    for (const Criterion& c : criteria()) {
        if (selected != 0 && c.id != selected) continue;
        ran_any = true;
        Check ck;
        try {
            c.fn(ck);
        } catch (const std::exception& e) {
            ck.fails.push_back(std::string("unexpected exception: ") + e.what());
        }
        if (ck.fails.empty()) {
            std::printf("[PASS] criterion %d: %s\n", c.id, c.title);
        } else {
            ++failures;
            std::printf("[FAIL] criterion %d: %s\n", c.id, c.title);
            for (const auto& f : ck.fails) std::printf("       - %s\n", f.c_str());
        }
        std::fflush(stdout);
    }
    if (!ran_any) {
        std::fprintf(stderr, "no such criterion: %d\n", selected);
        return 2;
    }
    return failures > 0 ? 1 : 0;
}
