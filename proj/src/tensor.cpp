// SPDX-License-Identifier: Apache-2.0
#include "mlmkit/tensor.hpp"

#include <cmath>
#include <sstream>

namespace mlmkit {

int64_t Tensor::numel_of(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
        if (d < 0) throw ContractError("tensor dimension must be non-negative, got " + std::to_string(d));
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<int64_t> shape_, std::vector<float> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    int64_t want = numel_of(shape);
    if (want != static_cast<int64_t>(data.size())) {
        throw ContractError("tensor data size " + std::to_string(data.size()) + " does not match shape " +
                            shape_str());
    }
}

int64_t Tensor::numel() const { return static_cast<int64_t>(data.size()); }

int64_t Tensor::dim(int64_t i) const {
    int64_t r = rank();
    if (i < 0) i += r;
    if (i < 0 || i >= r) throw ContractError("tensor dim index out of range");
    return shape[static_cast<size_t>(i)];
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor Tensor::zeros(std::vector<int64_t> shape) {
    int64_t n = numel_of(shape);
    Tensor t;
    t.shape = std::move(shape);
    t.data.assign(static_cast<size_t>(n), 0.0f);
    return t;
}

Tensor Tensor::full(std::vector<int64_t> shape, float value) {
    int64_t n = numel_of(shape);
    Tensor t;
    t.shape = std::move(shape);
    t.data.assign(static_cast<size_t>(n), value);
    return t;
}

Tensor Tensor::scalar(float value) {
    Tensor t;
    t.data.assign(1, value);
    return t;
}

Tensor Tensor::randn(std::vector<int64_t> shape, Rng& rng, float mean, float stddev) {
    Tensor t = zeros(std::move(shape));
    for (float& x : t.data) x = static_cast<float>(rng.normal(mean, stddev));
    return t;
}

Tensor Tensor::randn_truncated(std::vector<int64_t> shape, Rng& rng, float mean, float stddev,
                               double cutoff) {
    Tensor t = zeros(std::move(shape));
    for (float& x : t.data) x = static_cast<float>(rng.truncated_normal(mean, stddev, cutoff));
    return t;
}

Tensor Tensor::rand_uniform(std::vector<int64_t> shape, Rng& rng, float lo, float hi) {
    Tensor t = zeros(std::move(shape));
    for (float& x : t.data) x = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

bool all_finite(const Tensor& t) {
    for (float x : t.data) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace mlmkit
