#include "lff/autograd.hpp"

#include <cmath>
#include <utility>

namespace lff {

namespace {

Tape* g_tape = nullptr;
bool g_grad = true;

bool any_requires(const std::vector<Var>& parents) {
    for (const auto& p : parents) {
        if (p->requires_grad) return true;
    }
    return false;
}

// Adds g into p's gradient buffer when p participates in the sweep.
void acc(const Var& p, const Tensor& g) {
    if (!p->requires_grad) return;
    p->ensure_grad();
    for (std::size_t i = 0; i < g.data.size(); ++i) p->grad.data[i] += g.data[i];
}

Tensor colsum(const Tensor& g) {
    Tensor out = Tensor::zeros({1, g.shape[1]}, g.dtype);
    for (std::int64_t r = 0; r < g.shape[0]; ++r) {
        for (std::int64_t c = 0; c < g.shape[1]; ++c) out.data[c] += g.at(r, c);
    }
    return out;
}

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> bw) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    if (g_grad && g_tape != nullptr && any_requires(parents)) {
        n->requires_grad = true;
        n->parents = std::move(parents);
        n->backward_fn = std::move(bw);
        n->ensure_grad();
        g_tape->record(n);
    }
    return n;
}

}  // namespace

Tape* active_tape() { return g_tape; }
void set_active_tape(Tape* tape) { g_tape = tape; }
bool grad_enabled() { return g_grad; }
void set_grad_enabled(bool enabled) { g_grad = enabled; }

void Tape::backward(const Var& loss) {
    if (loss->value.numel() != 1) {
        throw DimensionError("backward: loss must be a single element, got shape " +
                             loss->value.shape_str());
    }
    if (!loss->requires_grad) {
        throw ValidationError("backward: loss does not depend on any tracked parameter");
    }
    loss->ensure_grad();
    loss->grad.data[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        Node& n = **it;
        if (n.backward_fn) n.backward_fn(n);
    }
}

Var leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    if (requires_grad) n->ensure_grad();
    return n;
}

Var constant(Tensor value) { return leaf(std::move(value), false); }

const Tensor& val(const Var& v) { return v->value; }

Var matmul(const Var& a, const Var& b) {
    return make_op(matmul(a->value, b->value), {a, b}, [](Node& self) {
        const Var& a = self.parents[0];
        const Var& b = self.parents[1];
        if (a->requires_grad) acc(a, matmul(self.grad, transpose(b->value)));
        if (b->requires_grad) acc(b, matmul(transpose(a->value), self.grad));
    });
}

Var transpose(const Var& a) {
    return make_op(transpose(a->value), {a},
                   [](Node& self) { acc(self.parents[0], transpose(self.grad)); });
}

Var add(const Var& a, const Var& b) {
    return make_op(add(a->value, b->value), {a, b}, [](Node& self) {
        acc(self.parents[0], self.grad);
        acc(self.parents[1], self.grad);
    });
}

Var sub(const Var& a, const Var& b) {
    return make_op(sub(a->value, b->value), {a, b}, [](Node& self) {
        acc(self.parents[0], self.grad);
        acc(self.parents[1], scale(self.grad, -1.0));
    });
}

Var mul(const Var& a, const Var& b) {
    return make_op(mul(a->value, b->value), {a, b}, [](Node& self) {
        acc(self.parents[0], mul(self.grad, self.parents[1]->value));
        acc(self.parents[1], mul(self.grad, self.parents[0]->value));
    });
}

Var add_rowwise(const Var& a, const Var& row) {
    return make_op(add_rowwise(a->value, row->value), {a, row}, [](Node& self) {
        acc(self.parents[0], self.grad);
        if (self.parents[1]->requires_grad) acc(self.parents[1], colsum(self.grad));
    });
}

Var mul_rowwise(const Var& a, const Var& row) {
    return make_op(mul_rowwise(a->value, row->value), {a, row}, [](Node& self) {
        const Var& a = self.parents[0];
        const Var& row = self.parents[1];
        if (a->requires_grad) acc(a, mul_rowwise(self.grad, row->value));
        if (row->requires_grad) acc(row, colsum(mul(self.grad, a->value)));
    });
}

Var scale(const Var& a, double s) {
    return make_op(scale(a->value, s), {a},
                   [s](Node& self) { acc(self.parents[0], scale(self.grad, s)); });
}

Var add_scalar(const Var& a, double s) {
    return make_op(add_scalar(a->value, s), {a},
                   [](Node& self) { acc(self.parents[0], self.grad); });
}

Var layer_norm(const Var& x, double eps) {
    Tensor y = layer_norm(x->value, eps);
    const std::int64_t rows = y.shape[0];
    const std::int64_t n = y.shape[1];
    std::vector<double> inv_std(static_cast<std::size_t>(rows));
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* xr = x->value.data.data() + r * n;
        double m = 0.0;
        for (std::int64_t c = 0; c < n; ++c) m += xr[c];
        m /= static_cast<double>(n);
        double var = 0.0;
        for (std::int64_t c = 0; c < n; ++c) {
            double d = xr[c] - m;
            var += d * d;
        }
        inv_std[static_cast<std::size_t>(r)] = 1.0 / std::sqrt(var / static_cast<double>(n) + eps);
    }
    return make_op(std::move(y), {x}, [inv = std::move(inv_std)](Node& self) {
        const Var& x = self.parents[0];
        if (!x->requires_grad) return;
        const std::int64_t rows = self.value.shape[0];
        const std::int64_t n = self.value.shape[1];
        Tensor dx = Tensor::zeros(x->value.shape, x->value.dtype);
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* yr = self.value.data.data() + r * n;
            const double* gr = self.grad.data.data() + r * n;
            double gm = 0.0, gym = 0.0;
            for (std::int64_t c = 0; c < n; ++c) {
                gm += gr[c];
                gym += gr[c] * yr[c];
            }
            gm /= static_cast<double>(n);
            gym /= static_cast<double>(n);
            double s = inv[static_cast<std::size_t>(r)];
            double* dr = dx.data.data() + r * n;
            for (std::int64_t c = 0; c < n; ++c) dr[c] = s * (gr[c] - gm - yr[c] * gym);
        }
        acc(x, dx);
    });
}

Var softmax_rows(const Var& x) {
    return make_op(softmax_rows(x->value), {x}, [](Node& self) {
        const Var& x = self.parents[0];
        if (!x->requires_grad) return;
        const std::int64_t rows = self.value.shape[0];
        const std::int64_t n = self.value.shape[1];
        Tensor dx = Tensor::zeros(x->value.shape, x->value.dtype);
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* yr = self.value.data.data() + r * n;
            const double* gr = self.grad.data.data() + r * n;
            double dot = 0.0;
            for (std::int64_t c = 0; c < n; ++c) dot += gr[c] * yr[c];
            double* dr = dx.data.data() + r * n;
            for (std::int64_t c = 0; c < n; ++c) dr[c] = yr[c] * (gr[c] - dot);
        }
        acc(x, dx);
    });
}

Var gelu(const Var& x) {
    return make_op(gelu(x->value), {x}, [](Node& self) {
        const Var& x = self.parents[0];
        if (!x->requires_grad) return;
        Tensor dx = self.grad;
        constexpr double inv_sqrt2 = 0.7071067811865475;
        constexpr double inv_sqrt2pi = 0.3989422804014327;
        for (std::size_t i = 0; i < dx.data.size(); ++i) {
            double v = x->value.data[i];
            double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
            double pdf = inv_sqrt2pi * std::exp(-0.5 * v * v);
            dx.data[i] *= cdf + v * pdf;
        }
        acc(x, dx);
    });
}

Var reshape(const Var& a, std::vector<std::int64_t> shape) {
    return make_op(reshape(a->value, std::move(shape)), {a}, [](Node& self) {
        const Var& a = self.parents[0];
        acc(a, reshape(self.grad, a->value.shape));
    });
}

Var slice_rows(const Var& a, std::int64_t begin, std::int64_t end) {
    return make_op(slice_rows(a->value, begin, end), {a}, [begin](Node& self) {
        const Var& a = self.parents[0];
        if (!a->requires_grad) return;
        a->ensure_grad();
        const std::int64_t n = a->value.shape[1];
        for (std::size_t i = 0; i < self.grad.data.size(); ++i) {
            a->grad.data[static_cast<std::size_t>(begin * n) + i] += self.grad.data[i];
        }
    });
}

Var slice_cols(const Var& a, std::int64_t begin, std::int64_t end) {
    return make_op(slice_cols(a->value, begin, end), {a}, [begin, end](Node& self) {
        const Var& a = self.parents[0];
        if (!a->requires_grad) return;
        a->ensure_grad();
        const std::int64_t n = a->value.shape[1];
        const std::int64_t w = end - begin;
        for (std::int64_t r = 0; r < self.value.shape[0]; ++r) {
            for (std::int64_t c = 0; c < w; ++c) {
                a->grad.data[static_cast<std::size_t>(r * n + begin + c)] +=
                    self.grad.data[static_cast<std::size_t>(r * w + c)];
            }
        }
    });
}

Var concat_rows(const Var& a, const Var& b) {
    return make_op(concat_rows(a->value, b->value), {a, b}, [](Node& self) {
        const std::int64_t ra = self.parents[0]->value.shape[0];
        acc(self.parents[0], slice_rows(self.grad, 0, ra));
        acc(self.parents[1], slice_rows(self.grad, ra, self.value.shape[0]));
    });
}

Var concat_cols(const Var& a, const Var& b) {
    return make_op(concat_cols(a->value, b->value), {a, b}, [](Node& self) {
        const std::int64_t ca = self.parents[0]->value.shape[1];
        acc(self.parents[0], slice_cols(self.grad, 0, ca));
        acc(self.parents[1], slice_cols(self.grad, ca, self.value.shape[1]));
    });
}

Var gather_rows(const Var& a, std::vector<std::int64_t> indices) {
    // Evaluate the forward pass before the capture below moves `indices`;
    // argument evaluation order would otherwise be unspecified.
    Tensor picked = gather_rows(a->value, indices);
    return make_op(std::move(picked), {a},
                   [idx = std::move(indices)](Node& self) {
        const Var& a = self.parents[0];
        if (!a->requires_grad) return;
        a->ensure_grad();
        const std::int64_t n = a->value.shape[1];
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const double* g = self.grad.data.data() + static_cast<std::int64_t>(i) * n;
            double* dst = a->grad.data.data() + idx[i] * n;
            for (std::int64_t c = 0; c < n; ++c) dst[c] += g[c];
        }
    });
}

Var sum(const Var& a) {
    return make_op(Tensor::scalar(sum(a->value)), {a}, [](Node& self) {
        const Var& a = self.parents[0];
        if (!a->requires_grad) return;
        a->ensure_grad();
        double g = self.grad.data[0];
        for (double& v : a->grad.data) v += g;
    });
}

Var mean(const Var& a) {
    return make_op(Tensor::scalar(mean(a->value)), {a}, [](Node& self) {
        const Var& a = self.parents[0];
        if (!a->requires_grad) return;
        a->ensure_grad();
        double g = self.grad.data[0] / static_cast<double>(a->value.numel());
        for (double& v : a->grad.data) v += g;
    });
}

Var attention(const Var& q, const Var& k, const Var& v, std::int64_t n_heads, double sc) {
    const Tensor& qv = q->value;
    const Tensor& kv = k->value;
    const Tensor& vv = v->value;
    if (qv.rank() != 2 || kv.rank() != 2 || vv.rank() != 2) {
        throw DimensionError("attention: q, k, v must be rank-2");
    }
    const std::int64_t d = qv.shape[1];
    if (kv.shape[1] != d || vv.shape[1] != d) {
        throw DimensionError("attention: feature widths disagree, q " + qv.shape_str() +
                             " k " + kv.shape_str() + " v " + vv.shape_str());
    }
    if (kv.shape[0] != vv.shape[0]) {
        throw DimensionError("attention: key and value row counts disagree");
    }
    if (kv.shape[0] == 0) throw DimensionError("attention: empty key set");
    if (n_heads <= 0 || d % n_heads != 0) {
        throw DimensionError("attention: feature width " + std::to_string(d) +
                             " not divisible into " + std::to_string(n_heads) + " heads");
    }
    const std::int64_t dh = d / n_heads;

    Tensor out = Tensor::zeros({qv.shape[0], d}, qv.dtype);
    std::vector<Tensor> probs;
    probs.reserve(static_cast<std::size_t>(n_heads));
    for (std::int64_t h = 0; h < n_heads; ++h) {
        Tensor qh = slice_cols(qv, h * dh, (h + 1) * dh);
        Tensor kh = slice_cols(kv, h * dh, (h + 1) * dh);
        Tensor vh = slice_cols(vv, h * dh, (h + 1) * dh);
        Tensor p = softmax_rows(scale(matmul(qh, transpose(kh)), sc));
        Tensor oh = matmul(p, vh);
        for (std::int64_t r = 0; r < out.shape[0]; ++r) {
            std::copy(oh.data.begin() + r * dh, oh.data.begin() + (r + 1) * dh,
                      out.data.begin() + r * d + h * dh);
        }
        probs.push_back(std::move(p));
    }

    return make_op(std::move(out), {q, k, v},
                   [probs = std::move(probs), n_heads, dh, sc](Node& self) {
        const Var& q = self.parents[0];
        const Var& k = self.parents[1];
        const Var& v = self.parents[2];
        const std::int64_t d = n_heads * dh;
        Tensor dq = Tensor::zeros(q->value.shape, q->value.dtype);
        Tensor dk = Tensor::zeros(k->value.shape, k->value.dtype);
        Tensor dv = Tensor::zeros(v->value.shape, v->value.dtype);
        for (std::int64_t h = 0; h < n_heads; ++h) {
            const Tensor& p = probs[static_cast<std::size_t>(h)];
            Tensor go = slice_cols(self.grad, h * dh, (h + 1) * dh);
            Tensor qh = slice_cols(q->value, h * dh, (h + 1) * dh);
            Tensor kh = slice_cols(k->value, h * dh, (h + 1) * dh);
            Tensor vh = slice_cols(v->value, h * dh, (h + 1) * dh);

            Tensor dvh = matmul(transpose(p), go);
            Tensor dp = matmul(go, transpose(vh));
            // softmax backward per attention row
            Tensor ds = dp;
            for (std::int64_t r = 0; r < p.shape[0]; ++r) {
                const double* pr = p.data.data() + r * p.shape[1];
                double* dr = ds.data.data() + r * p.shape[1];
                double dot = 0.0;
                for (std::int64_t c = 0; c < p.shape[1]; ++c) dot += dr[c] * pr[c];
                for (std::int64_t c = 0; c < p.shape[1]; ++c) dr[c] = pr[c] * (dr[c] - dot);
            }
            Tensor dqh = scale(matmul(ds, kh), sc);
            Tensor dkh = scale(matmul(transpose(ds), qh), sc);
            for (std::int64_t r = 0; r < dq.shape[0]; ++r) {
                for (std::int64_t c = 0; c < dh; ++c) {
                    dq.data[static_cast<std::size_t>(r * d + h * dh + c)] +=
                        dqh.data[static_cast<std::size_t>(r * dh + c)];
                }
            }
            for (std::int64_t r = 0; r < dk.shape[0]; ++r) {
                for (std::int64_t c = 0; c < dh; ++c) {
                    dk.data[static_cast<std::size_t>(r * d + h * dh + c)] +=
                        dkh.data[static_cast<std::size_t>(r * dh + c)];
                    dv.data[static_cast<std::size_t>(r * d + h * dh + c)] +=
                        dvh.data[static_cast<std::size_t>(r * dh + c)];
                }
            }
        }
        acc(q, dq);
        acc(k, dk);
        acc(v, dv);
    });
}

}  // namespace lff
