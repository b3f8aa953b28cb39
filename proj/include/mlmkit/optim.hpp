// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "mlmkit/common.hpp"
#include "mlmkit/tape.hpp"

namespace mlmkit {

struct OptimizerConfig {
    double peak_lr = 1e-6;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-6;
    double weight_decay = 0.0;
    int64_t warmup_steps = 0;
    int64_t total_steps = 1;
    double decay_power = 1.0;  // 1.0 = linear decay
    double end_lr = 0.0;

    void validate() const;
};

/// Linear ramp 0 -> peak over warmup_steps, then polynomial decay to end_lr
/// at total_steps (clamped beyond). lr_at(warmup_steps) == peak_lr exactly.
double lr_at(int64_t step, const OptimizerConfig& cfg);

/// Adam with bias correction and decoupled weight decay: non-exempt
/// parameters are multiplied by (1 - lr * weight_decay) before the moment
/// update. Rank-1 parameters (all biases and norm gains) are exempt.
class AdamOptimizer {
public:
    AdamOptimizer(OptimizerConfig cfg, std::vector<Parameter*> params);

    /// One optimizer step at the schedule position steps_done()+1. Consumes
    /// Parameter::grad (missing grads count as zero) but does not clear it.
    void step();
    int64_t steps_done() const { return step_; }
    double last_lr() const { return last_lr_; }
    void zero_grad();

private:
    struct Moments {
        std::vector<double> m, v;
    };
    OptimizerConfig cfg_;
    std::vector<Parameter*> params_;
    std::vector<Moments> moments_;
    int64_t step_ = 0;
    double last_lr_ = 0.0;
};

struct MaskingPolicy {
    double select_prob = 0.15;
    double mask_frac = 0.8;
    double random_frac = 0.1;
    double keep_frac = 0.1;

    void validate() const;
};

/// Masked batch plus the exact branch decisions taken, for statistical tests.
struct MaskedBatch {
    std::vector<std::vector<int64_t>> inputs;
    std::vector<std::vector<int64_t>> labels;  // original id at selected positions, else -1
    int64_t eligible = 0;                      // non-special positions seen
    int64_t chose_mask = 0;
    int64_t chose_random = 0;
    int64_t chose_keep = 0;
    int64_t selected() const { return chose_mask + chose_random + chose_keep; }
};

/// Independently selects each non-special position with select_prob, then
/// replaces it with the mask token / a random non-special token / itself per
/// the policy fractions. Special-token positions are never selected.
MaskedBatch mask_batch(const std::vector<std::vector<int64_t>>& batch, const MaskingPolicy& policy,
                       Rng& rng, int64_t vocab_size);

}  // namespace mlmkit
