#include "ihdr/nn/parameters.hpp"

#include <algorithm>

#include "ihdr/error.hpp"

namespace ihdr::nn {

int ParameterSet::add(const std::string& name, Shape shape) {
    if (find(name)) throw_usage("duplicate parameter name: " + name);
    entries_.push_back({name, shape, values_.size()});
    values_.resize(values_.size() + shape.numel(), 0.0);
    grads_.resize(values_.size(), 0.0);
    return static_cast<int>(entries_.size()) - 1;
}

std::optional<int> ParameterSet::find(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name == name) return static_cast<int>(i);
    return std::nullopt;
}

std::span<double> ParameterSet::view(int index) {
    const Entry& e = entry(index);
    return std::span<double>(values_).subspan(e.offset, e.shape.numel());
}

std::span<const double> ParameterSet::view(int index) const {
    const Entry& e = entry(index);
    return std::span<const double>(values_).subspan(e.offset, e.shape.numel());
}

std::span<double> ParameterSet::grad_view(int index) {
    const Entry& e = entry(index);
    return std::span<double>(grads_).subspan(e.offset, e.shape.numel());
}

Tensor4 ParameterSet::tensor(int index) const {
    const Entry& e = entry(index);
    Tensor4 t(e.shape);
    const auto src = view(index);
    std::copy(src.begin(), src.end(), t.data().begin());
    return t;
}

void ParameterSet::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

void ParameterSet::init_normal(int index, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& v : view(index)) v = dist(rng);
}

void ParameterSet::fill(int index, double value) {
    for (double& v : view(index)) v = value;
}

}  // namespace ihdr::nn
