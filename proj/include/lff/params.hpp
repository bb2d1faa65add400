#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lff/autograd.hpp"

namespace lff {

// Registry of named trainable leaves. Registration order is the canonical
// iteration order everywhere (optimizer, checkpoints, gradient checks), so
// runs are reproducible as long as models build their parameters in a fixed
// order.
class ParamStore {
public:
    Var add(const std::string& name, Tensor init);

    const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
    Var find(const std::string& name) const;  // null when absent
    std::int64_t total_scalars() const;
    void zero_grads();

    // Checkpoint layout: <dir>/manifest.json naming every tensor plus one
    // TNSR file per parameter in the same directory.
    void save(const std::string& dir, std::int64_t step) const;
    std::int64_t load(const std::string& dir);  // returns stored step

private:
    std::vector<std::pair<std::string, Var>> entries_;
};

}  // namespace lff
