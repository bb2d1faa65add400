#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "lff/tensor.hpp"

namespace lff {

// Reverse-mode autodiff over Tensor values. Ops build a graph of Nodes; a
// Tape records them in execution order, which is already a valid topological
// order, so backward() is a single reverse sweep.
struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;  // accumulates into parents' grads

    void ensure_grad() {
        if (grad.shape != value.shape) grad = Tensor::zeros(value.shape, value.dtype);
    }
};

using Var = std::shared_ptr<Node>;

class Tape {
public:
    void record(const Var& v) { nodes_.push_back(v); }
    void clear() { nodes_.clear(); }
    std::size_t size() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss) = 1 and sweeps the recorded ops in reverse.
    // `loss` must be a single-element tensor.
    void backward(const Var& loss);

private:
    std::vector<Var> nodes_;
};

// The active tape and the global grad switch. Ops record onto the active
// tape only when recording is enabled and some input needs gradients.
Tape* active_tape();
void set_active_tape(Tape* tape);
bool grad_enabled();
void set_grad_enabled(bool enabled);

struct NoGradGuard {
    NoGradGuard() : prev_(grad_enabled()) { set_grad_enabled(false); }
    ~NoGradGuard() { set_grad_enabled(prev_); }

private:
    bool prev_;
};

struct TapeGuard {
    explicit TapeGuard(Tape* tape) : prev_(active_tape()) { set_active_tape(tape); }
    ~TapeGuard() { set_active_tape(prev_); }

private:
    Tape* prev_;
};

// Leaves. Parameters are leaves with requires_grad = true and live across
// steps; inputs are constants.
Var leaf(Tensor value, bool requires_grad = true);
Var constant(Tensor value);

const Tensor& val(const Var& v);

// Differentiable ops. Each mirrors the Tensor function of the same name.
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_rowwise(const Var& a, const Var& row);
Var mul_rowwise(const Var& a, const Var& row);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var layer_norm(const Var& x, double eps);
Var softmax_rows(const Var& x);
Var gelu(const Var& x);
Var reshape(const Var& a, std::vector<std::int64_t> shape);
Var slice_rows(const Var& a, std::int64_t begin, std::int64_t end);
Var slice_cols(const Var& a, std::int64_t begin, std::int64_t end);
Var concat_rows(const Var& a, const Var& b);
Var concat_cols(const Var& a, const Var& b);
Var gather_rows(const Var& a, std::vector<std::int64_t> indices);
Var sum(const Var& a);    // [1, 1]
Var mean(const Var& a);   // [1, 1]

// Multi-head scaled dot-product attention fused into one node. Splits the
// feature axis into n_heads equal slices; per head computes
// softmax(q k^T * scale) v and concatenates the results. Fusing keeps only
// the per-head softmax outputs alive instead of every intermediate.
Var attention(const Var& q, const Var& k, const Var& v, std::int64_t n_heads, double scale);

}  // namespace lff
