#include "lff/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace lff {

namespace {

using MatMap = Eigen::Map<
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

std::int64_t product(const std::vector<std::int64_t>& dims) {
    std::int64_t n = 1;
    for (std::int64_t d : dims) n *= d;
    return n;
}

void check_dims(const std::vector<std::int64_t>& dims) {
    for (std::int64_t d : dims) {
        if (d < 0) throw DimensionError("tensor: negative dimension " + std::to_string(d));
    }
}

void require_rank2(const Tensor& t, const char* op) {
    if (t.rank() != 2) {
        throw DimensionError(std::string(op) + ": expected rank-2 tensor, got rank " +
                             std::to_string(t.rank()));
    }
}

}  // namespace

Tensor Tensor::zeros(std::vector<std::int64_t> shape, Dtype dt) {
    check_dims(shape);
    Tensor t;
    t.dtype = dt;
    t.shape = std::move(shape);
    t.data.assign(static_cast<std::size_t>(product(t.shape)), 0.0);
    return t;
}

Tensor Tensor::full(std::vector<std::int64_t> shape, double value, Dtype dt) {
    Tensor t = zeros(std::move(shape), dt);
    for (double& v : t.data) v = value;
    return t;
}

Tensor Tensor::from_rows(std::int64_t rows, std::int64_t cols,
                         std::initializer_list<double> values) {
    Tensor t = zeros({rows, cols});
    if (static_cast<std::int64_t>(values.size()) != rows * cols) {
        throw DimensionError("from_rows: " + std::to_string(values.size()) +
                             " values for shape [" + std::to_string(rows) + ", " +
                             std::to_string(cols) + "]");
    }
    std::size_t i = 0;
    for (double v : values) t.data[i++] = v;
    return t;
}

Tensor Tensor::scalar(double value) {
    Tensor t = zeros({1, 1});
    t.data[0] = value;
    return t;
}

std::int64_t Tensor::numel() const { return product(shape); }

std::int64_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("rows(): tensor is not rank-2");
    return shape[0];
}

std::int64_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("cols(): tensor is not rank-2");
    return shape[1];
}

double& Tensor::at(std::int64_t r, std::int64_t c) {
    return data[static_cast<std::size_t>(r * cols() + c)];
}

double Tensor::at(std::int64_t r, std::int64_t c) const {
    return data[static_cast<std::size_t>(r * cols() + c)];
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    if (a.shape[1] != b.shape[0]) {
        throw DimensionError("matmul: inner dimensions disagree, " + a.shape_str() +
                             " x " + b.shape_str());
    }
    Tensor out = Tensor::zeros({a.shape[0], b.shape[1]}, a.dtype);
    if (out.numel() == 0 || a.shape[1] == 0) return out;
    ConstMatMap ma(a.data.data(), a.shape[0], a.shape[1]);
    ConstMatMap mb(b.data.data(), b.shape[0], b.shape[1]);
    MatMap mo(out.data.data(), out.shape[0], out.shape[1]);
    mo.noalias() = ma * mb;
    return out;
}

Tensor transpose(const Tensor& a) {
    require_rank2(a, "transpose");
    Tensor out = Tensor::zeros({a.shape[1], a.shape[0]}, a.dtype);
    if (out.numel() == 0) return out;
    ConstMatMap ma(a.data.data(), a.shape[0], a.shape[1]);
    MatMap mo(out.data.data(), out.shape[0], out.shape[1]);
    mo = ma.transpose();
    return out;
}

namespace {

Tensor elementwise(const Tensor& a, const Tensor& b, const char* op,
                   double (*f)(double, double)) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() +
                             " vs " + b.shape_str());
    }
    Tensor out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = f(a.data[i], b.data[i]);
    return out;
}

Tensor rowwise(const Tensor& a, const Tensor& row, const char* op,
               double (*f)(double, double)) {
    require_rank2(a, op);
    require_rank2(row, op);
    if (row.shape[0] != 1 || row.shape[1] != a.shape[1]) {
        throw DimensionError(std::string(op) + ": row " + row.shape_str() +
                             " does not broadcast over " + a.shape_str());
    }
    Tensor out = a;
    const std::int64_t n = a.shape[1];
    for (std::int64_t r = 0; r < a.shape[0]; ++r) {
        double* o = out.data.data() + r * n;
        const double* x = a.data.data() + r * n;
        for (std::int64_t c = 0; c < n; ++c) o[c] = f(x[c], row.data[static_cast<std::size_t>(c)]);
    }
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return elementwise(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return elementwise(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return elementwise(a, b, "mul", [](double x, double y) { return x * y; });
}

Tensor add_rowwise(const Tensor& a, const Tensor& row) {
    return rowwise(a, row, "add_rowwise", [](double x, double y) { return x + y; });
}

Tensor mul_rowwise(const Tensor& a, const Tensor& row) {
    return rowwise(a, row, "mul_rowwise", [](double x, double y) { return x * y; });
}

Tensor scale(const Tensor& a, double s) {
    Tensor out = a;
    for (double& v : out.data) v *= s;
    return out;
}

Tensor add_scalar(const Tensor& a, double s) {
    Tensor out = a;
    for (double& v : out.data) v += s;
    return out;
}

Tensor layer_norm(const Tensor& x, double eps) {
    require_rank2(x, "layer_norm");
    if (eps < 0.0) throw DomainError("layer_norm: eps must be non-negative");
    if (x.shape[1] == 0) throw DimensionError("layer_norm: zero-width rows");
    Tensor out = x;
    const std::int64_t n = x.shape[1];
    for (std::int64_t r = 0; r < x.shape[0]; ++r) {
        const double* row = x.data.data() + r * n;
        double m = 0.0;
        for (std::int64_t c = 0; c < n; ++c) m += row[c];
        m /= static_cast<double>(n);
        double var = 0.0;
        for (std::int64_t c = 0; c < n; ++c) {
            double d = row[c] - m;
            var += d * d;
        }
        var /= static_cast<double>(n);
        double inv = 1.0 / std::sqrt(var + eps);
        double* o = out.data.data() + r * n;
        for (std::int64_t c = 0; c < n; ++c) o[c] = (row[c] - m) * inv;
    }
    return out;
}

Tensor softmax_rows(const Tensor& x) {
    require_rank2(x, "softmax");
    if (x.shape[1] == 0) throw DimensionError("softmax: zero-width rows");
    Tensor out = x;
    const std::int64_t n = x.shape[1];
    for (std::int64_t r = 0; r < x.shape[0]; ++r) {
        const double* row = x.data.data() + r * n;
        double mx = row[0];
        for (std::int64_t c = 1; c < n; ++c) mx = std::max(mx, row[c]);
        double z = 0.0;
        double* o = out.data.data() + r * n;
        for (std::int64_t c = 0; c < n; ++c) {
            o[c] = std::exp(row[c] - mx);
            z += o[c];
        }
        for (std::int64_t c = 0; c < n; ++c) o[c] /= z;
    }
    return out;
}

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865475)); }

Tensor gelu(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data) v = gelu_scalar(v);
    return out;
}

Tensor reshape(const Tensor& a, std::vector<std::int64_t> shape) {
    check_dims(shape);
    Tensor out = a;
    std::int64_t n = 1;
    for (std::int64_t d : shape) n *= d;
    if (n != a.numel()) {
        throw DimensionError("reshape: cannot view " + a.shape_str() + " as requested shape");
    }
    out.shape = std::move(shape);
    return out;
}

Tensor slice_rows(const Tensor& a, std::int64_t begin, std::int64_t end) {
    require_rank2(a, "slice_rows");
    if (begin < 0 || end > a.shape[0] || begin > end) {
        throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " +
                             std::to_string(end) + ") outside " + a.shape_str());
    }
    Tensor out = Tensor::zeros({end - begin, a.shape[1]}, a.dtype);
    std::copy(a.data.begin() + begin * a.shape[1], a.data.begin() + end * a.shape[1],
              out.data.begin());
    return out;
}

Tensor slice_cols(const Tensor& a, std::int64_t begin, std::int64_t end) {
    require_rank2(a, "slice_cols");
    if (begin < 0 || end > a.shape[1] || begin > end) {
        throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " +
                             std::to_string(end) + ") outside " + a.shape_str());
    }
    Tensor out = Tensor::zeros({a.shape[0], end - begin}, a.dtype);
    for (std::int64_t r = 0; r < a.shape[0]; ++r) {
        std::copy(a.data.begin() + r * a.shape[1] + begin,
                  a.data.begin() + r * a.shape[1] + end,
                  out.data.begin() + r * (end - begin));
    }
    return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
    require_rank2(a, "concat_rows");
    require_rank2(b, "concat_rows");
    if (a.shape[1] != b.shape[1]) {
        throw DimensionError("concat_rows: column counts disagree, " + a.shape_str() +
                             " vs " + b.shape_str());
    }
    Tensor out = Tensor::zeros({a.shape[0] + b.shape[0], a.shape[1]}, a.dtype);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
    return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    require_rank2(a, "concat_cols");
    require_rank2(b, "concat_cols");
    if (a.shape[0] != b.shape[0]) {
        throw DimensionError("concat_cols: row counts disagree, " + a.shape_str() +
                             " vs " + b.shape_str());
    }
    Tensor out = Tensor::zeros({a.shape[0], a.shape[1] + b.shape[1]}, a.dtype);
    for (std::int64_t r = 0; r < a.shape[0]; ++r) {
        std::copy(a.data.begin() + r * a.shape[1], a.data.begin() + (r + 1) * a.shape[1],
                  out.data.begin() + r * out.shape[1]);
        std::copy(b.data.begin() + r * b.shape[1], b.data.begin() + (r + 1) * b.shape[1],
                  out.data.begin() + r * out.shape[1] + a.shape[1]);
    }
    return out;
}

Tensor gather_rows(const Tensor& a, const std::vector<std::int64_t>& indices) {
    require_rank2(a, "gather_rows");
    Tensor out = Tensor::zeros({static_cast<std::int64_t>(indices.size()), a.shape[1]}, a.dtype);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        std::int64_t r = indices[i];
        if (r < 0 || r >= a.shape[0]) {
            throw DimensionError("gather_rows: index " + std::to_string(r) + " outside " +
                                 a.shape_str());
        }
        std::copy(a.data.begin() + r * a.shape[1], a.data.begin() + (r + 1) * a.shape[1],
                  out.data.begin() + static_cast<std::int64_t>(i) * a.shape[1]);
    }
    return out;
}

double sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data) s += v;
    return s;
}

double mean(const Tensor& a) {
    if (a.numel() == 0) throw DimensionError("mean: empty tensor");
    return sum(a) / static_cast<double>(a.numel());
}

double max_abs(const Tensor& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::abs(v));
    return m;
}

bool all_finite(const Tensor& a) {
    for (double v : a.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor map(const Tensor& a, const std::function<double(double)>& f) {
    Tensor out = a;
    for (double& v : out.data) v = f(v);
    return out;
}

}  // namespace lff
