#include "ihdr/nn/tape.hpp"

#include <algorithm>

#include "ihdr/error.hpp"

namespace ihdr::nn {

Tape::Scope::Scope(Tape& tape, const std::string& name) : tape_(tape), previous_length_(tape.prefix_.size()) {
    if (!tape_.prefix_.empty()) tape_.prefix_ += '.';
    tape_.prefix_ += name;
}

Tape::Scope::~Scope() { tape_.prefix_.resize(previous_length_); }

std::string Tape::qualified(const std::string& name) const {
    return prefix_.empty() ? name : prefix_ + "." + name;
}

void Tape::count_macs(const std::string& layer, std::uint64_t macs) { macs_.push_back({qualified(layer), macs}); }

Var Tape::push(Tensor4 value, const std::string& op, Backward backward) {
    const std::string label = qualified(op);
    if (!value.all_finite()) throw_internal("non-finite value in forward pass at layer '" + label + "'");
    nodes_.push_back(Node{std::move(value), std::nullopt, label, record_ ? std::move(backward) : Backward{}});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Tensor4 value, const std::string& label) { return push(std::move(value), label, nullptr); }

Var Tape::param(ParameterSet& params, int index) {
    const std::string name = params.entry(index).name;
    ParameterSet* ps = &params;
    // Parameter labels are absolute, not scoped.
    const std::string saved = prefix_;
    prefix_.clear();
    Var v = push(params.tensor(index), name, [ps, index](Tape& t, int self) {
        const Tensor4& g = *t.grad_if_any(self);
        auto dst = ps->grad_view(index);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
    });
    prefix_ = saved;
    return v;
}

Tensor4& Tape::grad_buffer(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.grad) n.grad.emplace(n.value.shape(), 0.0);
    return *n.grad;
}

const Tensor4* Tape::grad_if_any(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.grad ? &*n.grad : nullptr;
}

Tensor4 Tape::grad(Var v) const {
    const Tensor4* g = grad_if_any(v.id);
    return g ? *g : Tensor4(value(v).shape(), 0.0);
}

void Tape::backward(Var root) {
    if (!record_) throw_usage("backward() on a tape created without gradient recording");
    if (value(root).numel() != 1) throw_usage("backward() root must be a scalar");
    for (auto& n : nodes_) n.grad.reset();
    grad_buffer(root.id)[0] = 1.0;
    for (int id = root.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.grad || !n.backward) continue;
        if (!n.grad->all_finite()) throw_internal("non-finite gradient in backward pass at layer '" + n.label + "'");
        n.backward(*this, id);
    }
}

}  // namespace ihdr::nn
