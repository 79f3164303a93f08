#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ihdr/nn/parameters.hpp"
#include "ihdr/nn/tensor.hpp"

namespace ihdr::nn {

/// Handle to a value recorded on a Tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

struct MacEntry {
    std::string layer;
    std::uint64_t macs;
};

/// Reverse-mode autodiff tape. Every op appends a node holding its forward
/// value and a closure that propagates the node's gradient to its inputs.
/// Forward values are checked for NaN/Inf as they are produced, gradients as
/// they are consumed; a failure names the offending layer.
class Tape {
public:
    using Backward = std::function<void(Tape&, int self)>;

    explicit Tape(bool record_gradients = true) : record_(record_gradients) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Constant leaf: receives a gradient but propagates nowhere.
    Var input(Tensor4 value, const std::string& label = "input");

    /// Leaf bound to a parameter tensor; backward accumulates into params.grads().
    Var param(ParameterSet& params, int index);

    const Tensor4& value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).value; }
    const std::string& label(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).label; }

    /// Gradient of the last backward() root w.r.t. v (zeros when untouched).
    Tensor4 grad(Var v) const;

    /// Seeds d(root)/d(root) = 1 for a single-element root and runs the tape
    /// in reverse.
    void backward(Var root);

    bool recording() const { return record_; }
    std::size_t size() const { return nodes_.size(); }

    /// Prefix applied to labels of nodes created while the scope is alive.
    class Scope {
    public:
        Scope(Tape& tape, const std::string& name);
        ~Scope();
        Scope(const Scope&) = delete;
        Scope& operator=(const Scope&) = delete;

    private:
        Tape& tape_;
        std::size_t previous_length_;
    };
    std::string qualified(const std::string& name) const;

    void count_macs(const std::string& layer, std::uint64_t macs);
    const std::vector<MacEntry>& mac_ledger() const { return macs_; }

    // ---- op-author interface ----
    Var push(Tensor4 value, const std::string& op, Backward backward);
    /// Gradient buffer of node id, allocated (zeroed) on first use.
    Tensor4& grad_buffer(int id);
    const Tensor4* grad_if_any(int id) const;
    const Tensor4& value_of(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

private:
    struct Node {
        Tensor4 value;
        std::optional<Tensor4> grad;
        std::string label;
        Backward backward;
    };

    bool record_;
    std::vector<Node> nodes_;
    std::string prefix_;
    std::vector<MacEntry> macs_;
};

}  // namespace ihdr::nn
