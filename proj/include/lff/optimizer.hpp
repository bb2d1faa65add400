#pragma once

#include "lff/params.hpp"

namespace lff {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard Adam with bias correction over every parameter in a store.
// step() consumes and zeroes the accumulated gradients; a non-finite
// gradient aborts with the offending parameter's name.
class Adam {
public:
    Adam(ParamStore& store, AdamConfig cfg);

    void step();
    std::int64_t steps_taken() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    ParamStore& store_;
    AdamConfig cfg_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    std::int64_t t_ = 0;
};

}  // namespace lff
