// SPDX-License-Identifier: Apache-2.0
#include "mlmkit/optim.hpp"

#include <cmath>

#include "mlmkit/bpe.hpp"

namespace mlmkit {

void OptimizerConfig::validate() const {
    if (peak_lr <= 0.0) throw ConfigError("peak_lr must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw ConfigError("adam betas must lie in [0,1)");
    if (eps <= 0.0) throw ConfigError("adam eps must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
    if (warmup_steps < 0 || total_steps < 1 || warmup_steps > total_steps)
        throw ConfigError("need 0 <= warmup_steps <= total_steps and total_steps >= 1");
    if (decay_power <= 0.0) throw ConfigError("decay_power must be positive");
    if (end_lr < 0.0 || end_lr > peak_lr) throw ConfigError("end_lr must lie in [0, peak_lr]");
}

double lr_at(int64_t step, const OptimizerConfig& cfg) {
    if (step < 0) throw ContractError("lr_at: negative step");
    if (cfg.warmup_steps > 0 && step <= cfg.warmup_steps)
        return cfg.peak_lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
    if (step >= cfg.total_steps) return cfg.end_lr;
    const double remain = static_cast<double>(cfg.total_steps - step) /
                          static_cast<double>(cfg.total_steps - cfg.warmup_steps);
    return cfg.end_lr + (cfg.peak_lr - cfg.end_lr) * std::pow(remain, cfg.decay_power);
}

AdamOptimizer::AdamOptimizer(OptimizerConfig cfg, std::vector<Parameter*> params)
    : cfg_(cfg), params_(std::move(params)) {
    cfg_.validate();
    moments_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
        const size_t n = static_cast<size_t>(params_[i]->numel());
        moments_[i].m.assign(n, 0.0);
        moments_[i].v.assign(n, 0.0);
    }
}

void AdamOptimizer::step() {
    ++step_;
    const double lr = lr_at(step_, cfg_);
    last_lr_ = lr;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        Parameter& p = *params_[pi];
        Moments& mo = moments_[pi];
        const bool has_grad = !p.grad.empty();
        const bool decayed = cfg_.weight_decay > 0.0 && p.value.rank() > 1;
        const double shrink = 1.0 - lr * cfg_.weight_decay;
        for (int64_t i = 0; i < p.numel(); ++i) {
            const double g = has_grad ? p.grad[static_cast<size_t>(i)] : 0.0;
            if (!std::isfinite(g))
                throw TrainingError("non-finite gradient in parameter '" + p.name + "'");
            double x = p.value.at(i);
            if (decayed) x *= shrink;
            double& m = mo.m[static_cast<size_t>(i)];
            double& v = mo.v[static_cast<size_t>(i)];
            m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
            v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
            const double update = lr * (m / bc1) / (std::sqrt(v / bc2) + cfg_.eps);
            p.value.at(i) = static_cast<float>(x - update);
        }
    }
}

void AdamOptimizer::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

void MaskingPolicy::validate() const {
    if (select_prob < 0.0 || select_prob > 1.0)
        throw ConfigError("select_prob must lie in [0,1]");
    if (mask_frac < 0.0 || random_frac < 0.0 || keep_frac < 0.0 ||
        std::abs(mask_frac + random_frac + keep_frac - 1.0) > 1e-9)
        throw ConfigError("mask/random/keep fractions must be non-negative and sum to 1");
}

MaskedBatch mask_batch(const std::vector<std::vector<int64_t>>& batch, const MaskingPolicy& policy,
                       Rng& rng, int64_t vocab_size) {
    policy.validate();
    const int64_t plain = vocab_size - Tokenizer::kNumSpecials;
    if (plain < 1) throw ContractError("mask_batch: vocabulary has no maskable tokens");
    MaskedBatch out;
    out.inputs = batch;
    out.labels.reserve(batch.size());
    for (auto& seq : out.inputs) {
        std::vector<int64_t> labels(seq.size(), -1);
        for (size_t i = 0; i < seq.size(); ++i) {
            if (Tokenizer::is_special(seq[i])) continue;
            ++out.eligible;
            if (rng.uniform() >= policy.select_prob) continue;
            labels[i] = seq[i];
            const double branch = rng.uniform();
            if (branch < policy.mask_frac) {
                seq[i] = Tokenizer::kMask;
                ++out.chose_mask;
            } else if (branch < policy.mask_frac + policy.random_frac) {
                seq[i] = Tokenizer::kNumSpecials + rng.below(plain);
                ++out.chose_random;
            } else {
                ++out.chose_keep;
            }
        }
        out.labels.push_back(std::move(labels));
    }
    return out;
}

}  // namespace mlmkit
