#include "lff/optimizer.hpp"

#include <cmath>
#include <string>

#include "lff/error.hpp"

namespace lff {

Adam::Adam(ParamStore& store, AdamConfig cfg) : store_(store), cfg_(cfg) {
    if (cfg_.lr < 0.0) throw ConfigError("adam: learning rate must be >= 0");
    if (cfg_.beta1 < 0.0 || cfg_.beta1 >= 1.0) throw ConfigError("adam: beta1 must lie in [0, 1)");
    if (cfg_.beta2 < 0.0 || cfg_.beta2 >= 1.0) throw ConfigError("adam: beta2 must lie in [0, 1)");
    if (cfg_.eps <= 0.0) throw ConfigError("adam: eps must be > 0");
    m_.reserve(store_.entries().size());
    v_.reserve(store_.entries().size());
    for (const auto& entry : store_.entries()) {
        const Tensor& value = entry.second->value;
        m_.push_back(Tensor::zeros(value.shape));
        v_.push_back(Tensor::zeros(value.shape));
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const auto& entries = store_.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        Node& node = *entries[i].second;
        node.ensure_grad();
        Tensor& g = node.grad;
        for (double gv : g.data) {
            if (!std::isfinite(gv)) {
                throw NumericError("adam: non-finite gradient for parameter '" + entries[i].first + "'");
            }
        }
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        Tensor& p = node.value;
        for (std::size_t k = 0; k < g.data.size(); ++k) {
            const double gv = g.data[k];
            m.data[k] = cfg_.beta1 * m.data[k] + (1.0 - cfg_.beta1) * gv;
            v.data[k] = cfg_.beta2 * v.data[k] + (1.0 - cfg_.beta2) * gv * gv;
            const double mhat = m.data[k] / bc1;
            const double vhat = v.data[k] / bc2;
            p.data[k] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            g.data[k] = 0.0;
        }
    }
}

}  // namespace lff
