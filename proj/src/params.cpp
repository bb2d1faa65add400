#include "lff/params.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "lff/tensor_io.hpp"

namespace lff {

namespace fs = std::filesystem;
using nlohmann::json;

Var ParamStore::add(const std::string& name, Tensor init) {
    if (find(name)) throw ConfigError("param store: duplicate name " + name);
    Var v = leaf(std::move(init), true);
    entries_.emplace_back(name, v);
    return v;
}

Var ParamStore::find(const std::string& name) const {
    for (const auto& [n, v] : entries_) {
        if (n == name) return v;
    }
    return nullptr;
}

std::int64_t ParamStore::total_scalars() const {
    std::int64_t n = 0;
    for (const auto& [name, v] : entries_) n += v->value.numel();
    return n;
}

void ParamStore::zero_grads() {
    for (auto& [name, v] : entries_) {
        v->ensure_grad();
        std::fill(v->grad.data.begin(), v->grad.data.end(), 0.0);
    }
}

void ParamStore::save(const std::string& dir, std::int64_t step) const {
    fs::create_directories(dir);
    json manifest;
    manifest["format"] = "checkpoint";
    manifest["step"] = step;
    json tensors = json::array();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& [name, v] = entries_[i];
        std::ostringstream file;
        file << "t" << std::setw(4) << std::setfill('0') << i << ".tnsr";
        write_tensor((fs::path(dir) / file.str()).string(), v->value);
        json entry;
        entry["name"] = name;
        entry["shape"] = v->value.shape;
        entry["file"] = file.str();
        tensors.push_back(entry);
    }
    manifest["tensors"] = tensors;
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw Error("checkpoint save: cannot open manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

std::int64_t ParamStore::load(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw Error("checkpoint load: missing manifest in " + dir);
    json manifest;
    try {
        in >> manifest;
    } catch (const std::exception& e) {
        throw Error("checkpoint load: bad manifest in " + dir + ": " + e.what());
    }
    std::size_t matched = 0;
    for (const auto& entry : manifest.at("tensors")) {
        const std::string name = entry.at("name");
        Var v = find(name);
        if (!v) throw Error("checkpoint load: unknown parameter " + name);
        Tensor t = read_tensor((fs::path(dir) / entry.at("file").get<std::string>()).string());
        if (t.shape != v->value.shape) {
            throw DimensionError("checkpoint load: " + name + " stored as " + t.shape_str() +
                                 ", model expects " + v->value.shape_str());
        }
        v->value = std::move(t);
        ++matched;
    }
    if (matched != entries_.size()) {
        throw Error("checkpoint load: manifest names " + std::to_string(matched) + " of " +
                    std::to_string(entries_.size()) + " model parameters");
    }
    return manifest.at("step").get<std::int64_t>();
}

}  // namespace lff
