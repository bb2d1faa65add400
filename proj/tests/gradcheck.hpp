#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lff/autograd.hpp"

namespace lfftest {

struct GradReport {
    double worst_rel = 0.0;
    std::string worst_site;
    std::int64_t checked = 0;
};

inline double loss_once(const std::function<lff::Var()>& build_loss) {
    lff::NoGradGuard off;
    return lff::val(build_loss()).data[0];
}

// Central-difference check of d(loss)/d(leaf) for every listed leaf. The
// loss builder must rerun the whole forward pass from the leaves' current
// values. stride > 1 subsamples scalars for the big models.
inline GradReport gradcheck(const std::vector<std::pair<std::string, lff::Var>>& leaves,
                            const std::function<lff::Var()>& build_loss, double h = 1e-6,
                            std::int64_t stride = 1) {
    lff::Tape tape;
    lff::TapeGuard guard(&tape);
    for (const auto& [name, leaf] : leaves) {
        leaf->ensure_grad();
        std::fill(leaf->grad.data.begin(), leaf->grad.data.end(), 0.0);
    }
    lff::Var loss = build_loss();
    tape.backward(loss);

    std::vector<lff::Tensor> analytic;
    analytic.reserve(leaves.size());
    for (const auto& [name, leaf] : leaves) analytic.push_back(leaf->grad);

    GradReport report;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        lff::Tensor& value = leaves[li].second->value;
        for (std::size_t i = 0; i < value.data.size();
             i += static_cast<std::size_t>(stride)) {
            const double keep = value.data[i];
            value.data[i] = keep + h;
            const double fp = loss_once(build_loss);
            value.data[i] = keep - h;
            const double fm = loss_once(build_loss);
            value.data[i] = keep;
            const double numeric = (fp - fm) / (2.0 * h);
            const double exact = analytic[li].data[i];
            const double denom = std::max({1.0, std::fabs(numeric), std::fabs(exact)});
            const double rel = std::fabs(numeric - exact) / denom;
            ++report.checked;
            if (rel > report.worst_rel) {
                report.worst_rel = rel;
                report.worst_site =
                    leaves[li].first + "[" + std::to_string(i) + "]";
            }
        }
    }
    return report;
}

}  // namespace lfftest
