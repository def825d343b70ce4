#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace arithlab {

template <typename T>
struct NamedTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<T> data;

    size_t size() const { return data.size(); }
    int rows() const { return shape.empty() ? 0 : shape[0]; }
    int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
};

// Ordered named tensor map; the order is the checkpoint manifest order.
template <typename T>
struct ParameterSet {
    std::vector<NamedTensor<T>> tensors;
    std::unordered_map<std::string, size_t> index;

    NamedTensor<T>& add(const std::string& name, std::vector<int> shape) {
        size_t n = 1;
        for (int d : shape) n *= static_cast<size_t>(d);
        if (!index.emplace(name, tensors.size()).second)
            throw std::invalid_argument("parameters: duplicate tensor '" + name + "'");
        tensors.push_back(NamedTensor<T>{name, std::move(shape), std::vector<T>(n, T(0))});
        return tensors.back();
    }

    bool has(const std::string& name) const { return index.count(name) > 0; }

    NamedTensor<T>& at(const std::string& name) {
        auto it = index.find(name);
        if (it == index.end()) throw std::out_of_range("parameters: no tensor '" + name + "'");
        return tensors[it->second];
    }
    const NamedTensor<T>& at(const std::string& name) const {
        auto it = index.find(name);
        if (it == index.end()) throw std::out_of_range("parameters: no tensor '" + name + "'");
        return tensors[it->second];
    }

    size_t total_size() const {
        size_t n = 0;
        for (const auto& t : tensors) n += t.size();
        return n;
    }

    // Same names/shapes, all zeros.
    ParameterSet<T> zeros_like() const {
        ParameterSet<T> out;
        for (const auto& t : tensors) out.add(t.name, t.shape);
        return out;
    }

    void fill_zero() {
        for (auto& t : tensors)
            std::fill(t.data.begin(), t.data.end(), T(0));
    }
};

}  // namespace arithlab
