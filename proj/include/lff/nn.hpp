#pragma once

#include <string>

#include "lff/autograd.hpp"
#include "lff/rng.hpp"

namespace lff {

class ParamStore;

// Affine map along the last axis. b may be empty (bias-free layer); the
// attention projections below are all bias-free so a zero token stream maps
// to an exactly zero output, which the conditioning algebra relies on.
struct LinearP {
    Var w;  // [Din, Dout]
    Var b;  // [1, Dout] or null
};
Var linear(const Var& x, const LinearP& p);

// Activation hook: identity mode exists purely so tests can see through the
// nonlinearity.
enum class Act { gelu, identity };

struct MlpP {
    LinearP fc1;
    LinearP fc2;
    Act act = Act::gelu;
};
Var mlp(const Var& x, const MlpP& p);

struct LayerNormP {
    Var gain;  // [1, D]
    Var bias;  // [1, D]
    double eps = 1e-6;
};
Var layer_norm(const Var& x, const LayerNormP& p);

// Projected attention block: out = (attention over projected q/k/v) Wo.
// Per-head dot products are scaled by 1/sqrt(head width).
struct AttnP {
    LinearP wq, wk, wv, wo;
    std::int64_t heads = 1;
};
Var cross_attention(const Var& queries, const Var& context, const AttnP& p);
Var self_attention(const Var& x, const AttnP& p);

// Bare attention without projections, scale = 1/sqrt(width).
Var softmax_attention(const Var& q, const Var& k, const Var& v);
Tensor softmax_attention(const Tensor& q, const Tensor& k, const Tensor& v);

// Element permutation: out.data[i] = x.data[src[i]]. Backward scatter-adds,
// so indices may repeat. Patchify/unpatchify are instances of this.
Var permute_elements(const Var& x, std::vector<std::int64_t> src,
                     std::vector<std::int64_t> out_shape);

// Parameter construction. Weight std defaults to 1/sqrt(Din); zero_init
// makes the layer start silent (value and bias all zero).
LinearP make_linear(ParamStore& store, const std::string& prefix, std::int64_t din,
                    std::int64_t dout, Rng& rng, bool bias = true, bool zero_init = false);
MlpP make_mlp(ParamStore& store, const std::string& prefix, std::int64_t din,
              std::int64_t hidden, std::int64_t dout, Rng& rng, Act act = Act::gelu);
LayerNormP make_layer_norm(ParamStore& store, const std::string& prefix, std::int64_t d,
                           double eps = 1e-6);
AttnP make_attention(ParamStore& store, const std::string& prefix, std::int64_t d,
                     std::int64_t heads, Rng& rng, bool zero_out = false);

Tensor randn(Rng& rng, std::vector<std::int64_t> shape, double stddev);

}  // namespace lff
