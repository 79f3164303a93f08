#pragma once

#include <vector>

#include "ihdr/nn/parameters.hpp"

namespace ihdr::nn {

/// Adam with decoupled weight decay. Moment buffers are sized lazily on the
/// first step and must keep matching the parameter set afterwards.
class AdamW {
public:
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;

    void step(ParameterSet& params, double lr);
    long long steps_taken() const { return t_; }

private:
    std::vector<double> m_;
    std::vector<double> v_;
    long long t_ = 0;
};

/// Cosine annealing from lr_init at step 0 to lr_final at step total-1.
double cosine_lr(int step, int total, double lr_init, double lr_final);

}  // namespace ihdr::nn
