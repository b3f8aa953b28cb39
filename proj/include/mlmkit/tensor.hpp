// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "mlmkit/common.hpp"

namespace mlmkit {

/// Dense row-major float32 tensor. Rank 0 (shape {}) is a scalar with one
/// element. Invariant: product(shape) == data.size(); negative dims rejected.
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<float> data;
    bool requires_grad = false;

    Tensor() = default;
    Tensor(std::vector<int64_t> shape_, std::vector<float> data_);

    int64_t numel() const;
    int64_t rank() const { return static_cast<int64_t>(shape.size()); }
    /// Dimension i; negative i counts from the back.
    int64_t dim(int64_t i) const;
    bool is_scalar() const { return numel() == 1 && shape.empty(); }

    float& at(int64_t flat) { return data[static_cast<size_t>(flat)]; }
    float at(int64_t flat) const { return data[static_cast<size_t>(flat)]; }

    std::string shape_str() const;

    static int64_t numel_of(const std::vector<int64_t>& shape);
    static Tensor zeros(std::vector<int64_t> shape);
    static Tensor full(std::vector<int64_t> shape, float value);
    static Tensor scalar(float value);
    /// Elementwise i.i.d. N(mean, std^2).
    static Tensor randn(std::vector<int64_t> shape, Rng& rng, float mean = 0.0f, float stddev = 1.0f);
    /// Normal draws re-sampled until within cutoff standard deviations.
    static Tensor randn_truncated(std::vector<int64_t> shape, Rng& rng, float mean, float stddev,
                                  double cutoff = 2.0);
    /// Elementwise i.i.d. U[lo, hi).
    static Tensor rand_uniform(std::vector<int64_t> shape, Rng& rng, float lo, float hi);
};

/// True when every element is finite.
bool all_finite(const Tensor& t);

}  // namespace mlmkit
