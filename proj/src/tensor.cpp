#include "hebbnet/tensor.hpp"

#include <cmath>
#include <string>

#include "hebbnet/error.hpp"

namespace hebbnet {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
    for (std::size_t d : shape_) {
        if (d == 0) throw DimensionError("tensor dimension must be positive");
    }
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    for (std::size_t d : shape_) {
        if (d == 0) throw DimensionError("tensor dimension must be positive");
    }
    if (shape_product(shape_) != data_.size()) {
        throw DimensionError("tensor shape/data mismatch: shape product " +
                             std::to_string(shape_product(shape_)) + " vs data length " +
                             std::to_string(data_.size()));
    }
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
    if (shape_product(shape) != data_.size()) {
        throw DimensionError("reshape size mismatch: " + std::to_string(shape_product(shape)) +
                             " vs " + std::to_string(data_.size()));
    }
    return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

} // namespace hebbnet
