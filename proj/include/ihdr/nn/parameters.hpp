#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ihdr/nn/tensor.hpp"

namespace ihdr::nn {

/// All trainable values of a model in one flat vector, with a named,
/// shaped view per tensor. Gradients live in a parallel flat vector.
class ParameterSet {
public:
    struct Entry {
        std::string name;
        Shape shape;
        std::size_t offset;
    };

    /// Registers a zero-initialised tensor and returns its handle.
    int add(const std::string& name, Shape shape);

    std::size_t size() const { return values_.size(); }
    std::size_t count() const { return entries_.size(); }
    const Entry& entry(int index) const { return entries_.at(static_cast<std::size_t>(index)); }
    const std::vector<Entry>& entries() const { return entries_; }
    std::optional<int> find(const std::string& name) const;

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::span<double> grads() { return grads_; }
    std::span<const double> grads() const { return grads_; }

    std::span<double> view(int index);
    std::span<const double> view(int index) const;
    std::span<double> grad_view(int index);

    Tensor4 tensor(int index) const;

    void zero_grad();

    /// Gaussian fill with the given standard deviation.
    void init_normal(int index, double stddev, std::mt19937_64& rng);
    void fill(int index, double value);

private:
    std::vector<Entry> entries_;
    std::vector<double> values_;
    std::vector<double> grads_;
};

}  // namespace ihdr::nn
