#include "lff/nn.hpp"

#include <cmath>

#include "lff/params.hpp"

namespace lff {

Var linear(const Var& x, const LinearP& p) {
    Var y = matmul(x, p.w);
    if (p.b) y = add_rowwise(y, p.b);
    return y;
}

Var mlp(const Var& x, const MlpP& p) {
    Var h = linear(x, p.fc1);
    if (p.act == Act::gelu) h = gelu(h);
    return linear(h, p.fc2);
}

Var layer_norm(const Var& x, const LayerNormP& p) {
    return add_rowwise(mul_rowwise(layer_norm(x, p.eps), p.gain), p.bias);
}

Var cross_attention(const Var& queries, const Var& context, const AttnP& p) {
    Var q = linear(queries, p.wq);
    Var k = linear(context, p.wk);
    Var v = linear(context, p.wv);
    const std::int64_t d = val(q).shape[1];
    double sc = 1.0 / std::sqrt(static_cast<double>(d / p.heads));
    return linear(attention(q, k, v, p.heads, sc), p.wo);
}

Var self_attention(const Var& x, const AttnP& p) { return cross_attention(x, x, p); }

Var softmax_attention(const Var& q, const Var& k, const Var& v) {
    const std::int64_t d = val(q).shape[1];
    return attention(q, k, v, 1, 1.0 / std::sqrt(static_cast<double>(d)));
}

Tensor softmax_attention(const Tensor& q, const Tensor& k, const Tensor& v) {
    NoGradGuard ng;
    return val(softmax_attention(constant(q), constant(k), constant(v)));
}

Var permute_elements(const Var& x, std::vector<std::int64_t> src,
                     std::vector<std::int64_t> out_shape) {
    Tensor out = Tensor::zeros(out_shape, x->value.dtype);
    if (static_cast<std::int64_t>(src.size()) != out.numel()) {
        throw DimensionError("permute_elements: index count " + std::to_string(src.size()) +
                             " does not fill output " + out.shape_str());
    }
    const std::int64_t n = x->value.numel();
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (src[i] < 0 || src[i] >= n) {
            throw DimensionError("permute_elements: source index " + std::to_string(src[i]) +
                                 " outside input of " + std::to_string(n) + " elements");
        }
        out.data[i] = x->value.data[static_cast<std::size_t>(src[i])];
    }

    struct Backward {
        std::vector<std::int64_t> src;
        void operator()(Node& self) const {
            const Var& x = self.parents[0];
            if (!x->requires_grad) return;
            x->ensure_grad();
            for (std::size_t i = 0; i < src.size(); ++i) {
                x->grad.data[static_cast<std::size_t>(src[i])] += self.grad.data[i];
            }
        }
    };

    auto node = std::make_shared<Node>();
    node->value = std::move(out);
    if (grad_enabled() && active_tape() != nullptr && x->requires_grad) {
        node->requires_grad = true;
        node->parents = {x};
        node->backward_fn = Backward{std::move(src)};
        node->ensure_grad();
        active_tape()->record(node);
    }
    return node;
}

Tensor randn(Rng& rng, std::vector<std::int64_t> shape, double stddev) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = rng.gauss() * stddev;
    return t;
}

LinearP make_linear(ParamStore& store, const std::string& prefix, std::int64_t din,
                    std::int64_t dout, Rng& rng, bool bias, bool zero_init) {
    LinearP p;
    double stddev = zero_init ? 0.0 : 1.0 / std::sqrt(static_cast<double>(din));
    p.w = store.add(prefix + ".w", randn(rng, {din, dout}, stddev));
    if (bias) p.b = store.add(prefix + ".b", Tensor::zeros({1, dout}));
    return p;
}

MlpP make_mlp(ParamStore& store, const std::string& prefix, std::int64_t din,
              std::int64_t hidden, std::int64_t dout, Rng& rng, Act act) {
    MlpP p;
    p.fc1 = make_linear(store, prefix + ".fc1", din, hidden, rng);
    p.fc2 = make_linear(store, prefix + ".fc2", hidden, dout, rng);
    p.act = act;
    return p;
}

LayerNormP make_layer_norm(ParamStore& store, const std::string& prefix, std::int64_t d,
                           double eps) {
    LayerNormP p;
    p.gain = store.add(prefix + ".gain", Tensor::full({1, d}, 1.0));
    p.bias = store.add(prefix + ".bias", Tensor::zeros({1, d}));
    p.eps = eps;
    return p;
}

AttnP make_attention(ParamStore& store, const std::string& prefix, std::int64_t d,
                     std::int64_t heads, Rng& rng, bool zero_out) {
    if (heads <= 0 || d % heads != 0) {
        throw ConfigError("attention params: width " + std::to_string(d) +
                          " not divisible into " + std::to_string(heads) + " heads");
    }
    AttnP p;
    p.wq = make_linear(store, prefix + ".wq", d, d, rng, false);
    p.wk = make_linear(store, prefix + ".wk", d, d, rng, false);
    p.wv = make_linear(store, prefix + ".wv", d, d, rng, false);
    p.wo = make_linear(store, prefix + ".wo", d, d, rng, false, zero_out);
    p.heads = heads;
    return p;
}

}  // namespace lff
