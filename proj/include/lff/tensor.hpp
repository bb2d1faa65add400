#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "lff/error.hpp"

namespace lff {

// Storage precision tag. Arithmetic always runs in double; the tag controls
// how values are laid out when the tensor is written to disk.
enum class Dtype : std::uint8_t { f32 = 0, f64 = 1 };

// Dense row-major tensor. Rank is arbitrary but almost every operation in
// the library works on rank-2 views (rows = items, cols = features), so the
// helpers below are matrix-shaped.
struct Tensor {
    Dtype dtype = Dtype::f64;
    std::vector<std::int64_t> shape;
    std::vector<double> data;

    Tensor() = default;

    static Tensor zeros(std::vector<std::int64_t> shape, Dtype dt = Dtype::f64);
    static Tensor full(std::vector<std::int64_t> shape, double value, Dtype dt = Dtype::f64);
    // Row-major scalars for a rank-2 tensor.
    static Tensor from_rows(std::int64_t rows, std::int64_t cols,
                            std::initializer_list<double> values);
    static Tensor scalar(double value);

    std::int64_t numel() const;
    std::int64_t rank() const { return static_cast<std::int64_t>(shape.size()); }
    std::int64_t rows() const;
    std::int64_t cols() const;

    double& at(std::int64_t r, std::int64_t c);
    double at(std::int64_t r, std::int64_t c) const;
    double& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    std::string shape_str() const;
};

// All binary ops require exact shape match unless stated otherwise.
// `add_rowwise`/`mul_rowwise` broadcast a [1, N] row across every row of a
// [M, N] tensor.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_rowwise(const Tensor& a, const Tensor& row);
Tensor mul_rowwise(const Tensor& a, const Tensor& row);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

// Row-wise normalization over the last axis: (x - mean) / sqrt(var + eps)
// with biased variance. eps must be >= 0.
Tensor layer_norm(const Tensor& x, double eps);

// Numerically stable softmax over the last axis (max subtraction per row).
Tensor softmax_rows(const Tensor& x);

// Exact Gaussian CDF form: 0.5 * x * (1 + erf(x / sqrt(2))).
Tensor gelu(const Tensor& x);
double gelu_scalar(double x);

Tensor reshape(const Tensor& a, std::vector<std::int64_t> shape);
Tensor slice_rows(const Tensor& a, std::int64_t begin, std::int64_t end);
Tensor slice_cols(const Tensor& a, std::int64_t begin, std::int64_t end);
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor concat_cols(const Tensor& a, const Tensor& b);
// New tensor whose row i is a.row(indices[i]). Indices may repeat.
Tensor gather_rows(const Tensor& a, const std::vector<std::int64_t>& indices);

double sum(const Tensor& a);
double mean(const Tensor& a);
double max_abs(const Tensor& a);
bool all_finite(const Tensor& a);

Tensor map(const Tensor& a, const std::function<double(double)>& f);

}  // namespace lff
