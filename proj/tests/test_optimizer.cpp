#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "lff/optimizer.hpp"

using lff::Tensor;
using lff::Var;

TEST_CASE("adam config validation") {
    lff::ParamStore store;
    (void)store.add("p", Tensor::scalar(1.0));
    lff::AdamConfig bad;
    bad.lr = -1.0;
    CHECK_THROWS_AS(lff::Adam(store, bad), lff::ConfigError);
    bad = {};
    bad.beta1 = 1.0;
    CHECK_THROWS_AS(lff::Adam(store, bad), lff::ConfigError);
    bad = {};
    bad.beta2 = -0.1;
    CHECK_THROWS_AS(lff::Adam(store, bad), lff::ConfigError);
    bad = {};
    bad.eps = 0.0;
    CHECK_THROWS_AS(lff::Adam(store, bad), lff::ConfigError);
}

TEST_CASE("adam matches a scalar reference implementation") {
    lff::ParamStore store;
    Var p = store.add("p", Tensor::from_rows(1, 2, {1.0, -2.0}));
    lff::AdamConfig cfg;
    cfg.lr = 0.1;
    lff::Adam opt(store, cfg);

    // Reference state tracked with plain doubles.
    double rp[2] = {1.0, -2.0};
    double rm[2] = {0.0, 0.0};
    double rv[2] = {0.0, 0.0};
    const double grads[3][2] = {{0.5, -1.0}, {-0.25, 2.0}, {1.5, 0.0}};

    for (int t = 1; t <= 3; ++t) {
        p->ensure_grad();
        p->grad.data[0] = grads[t - 1][0];
        p->grad.data[1] = grads[t - 1][1];
        opt.step();
        for (int k = 0; k < 2; ++k) {
            double g = grads[t - 1][k];
            rm[k] = cfg.beta1 * rm[k] + (1.0 - cfg.beta1) * g;
            rv[k] = cfg.beta2 * rv[k] + (1.0 - cfg.beta2) * g * g;
            double mhat = rm[k] / (1.0 - std::pow(cfg.beta1, t));
            double vhat = rv[k] / (1.0 - std::pow(cfg.beta2, t));
            rp[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
            CHECK(p->value.data[static_cast<std::size_t>(k)] ==
                  doctest::Approx(rp[k]).epsilon(1e-15));
        }
    }
    CHECK(opt.steps_taken() == 3);
}

TEST_CASE("first step moves a scalar by roughly the learning rate") {
    // With bias correction, step one is lr * g / (|g| + eps), i.e. ~lr.
    lff::ParamStore store;
    Var p = store.add("p", Tensor::scalar(0.0));
    lff::AdamConfig cfg;
    cfg.lr = 1e-3;
    lff::Adam opt(store, cfg);
    p->ensure_grad();
    p->grad.data[0] = 0.42;
    opt.step();
    CHECK(p->value.data[0] == doctest::Approx(-1e-3).epsilon(1e-6));
}

TEST_CASE("lr zero leaves parameters bit-identical") {
    lff::ParamStore store;
    Var p = store.add("p", Tensor::from_rows(1, 3, {0.1, 0.2, 0.3}));
    std::vector<double> before = p->value.data;
    lff::AdamConfig cfg;
    cfg.lr = 0.0;
    lff::Adam opt(store, cfg);
    for (int i = 0; i < 5; ++i) {
        p->ensure_grad();
        for (auto& g : p->grad.data) g = 1.0;
        opt.step();
    }
    CHECK(p->value.data == before);
}

TEST_CASE("zero gradients keep parameters fixed from a cold start") {
    lff::ParamStore store;
    Var p = store.add("p", Tensor::from_rows(1, 2, {5.0, -5.0}));
    std::vector<double> before = p->value.data;
    lff::Adam opt(store, {});
    p->ensure_grad();
    opt.step();
    opt.step();
    CHECK(p->value.data == before);
}

TEST_CASE("momentum keeps moving a parameter whose gradient went quiet") {
    lff::ParamStore store;
    Var p = store.add("p", Tensor::scalar(0.0));
    lff::Adam opt(store, {});
    p->ensure_grad();
    p->grad.data[0] = 1.0;
    opt.step();
    double after_first = p->value.data[0];
    // gradient is zero now, but m is still positive
    opt.step();
    CHECK(p->value.data[0] < after_first);
}

TEST_CASE("step consumes the gradient") {
    lff::ParamStore store;
    Var p = store.add("p", Tensor::scalar(1.0));
    lff::Adam opt(store, {});
    p->ensure_grad();
    p->grad.data[0] = 2.0;
    opt.step();
    CHECK(p->grad.data[0] == 0.0);
}

TEST_CASE("non-finite gradients abort and name the parameter") {
    lff::ParamStore store;
    (void)store.add("fine", Tensor::scalar(1.0));
    Var bad = store.add("layer7.bias", Tensor::scalar(1.0));
    lff::Adam opt(store, {});
    bad->ensure_grad();
    bad->grad.data[0] = std::numeric_limits<double>::infinity();
    try {
        opt.step();
        FAIL("expected NumericError");
    } catch (const lff::NumericError& e) {
        CHECK(std::string(e.what()).find("layer7.bias") != std::string::npos);
    }
}

TEST_CASE("adam drives a quadratic toward its minimum") {
    lff::ParamStore store;
    Var p = store.add("p", Tensor::scalar(3.0));
    lff::AdamConfig cfg;
    cfg.lr = 0.05;
    lff::Adam opt(store, cfg);
    for (int i = 0; i < 400; ++i) {
        p->ensure_grad();
        p->grad.data[0] = 2.0 * (p->value.data[0] - 1.0);  // d/dp (p-1)^2
        opt.step();
    }
    CHECK(std::fabs(p->value.data[0] - 1.0) < 1e-2);
}
