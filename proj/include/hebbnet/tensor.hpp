#ifndef HEBBNET_TENSOR_HPP
#define HEBBNET_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace hebbnet {

/// Dense n-dimensional array of 64-bit reals, row-major.
///
/// The universal value carrier of the library. Cheap to move, explicit
/// about shape; product(shape) == data.size() always holds.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<std::size_t> shape);

    /// Takes ownership of data; throws DimensionError if sizes disagree.
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// Element access for rank-3 [C,H,W] tensors.
    double& at(std::size_t c, std::size_t y, std::size_t x) {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }
    double at(std::size_t c, std::size_t y, std::size_t x) const {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }

    /// Element access for rank-2 [R,C] tensors.
    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    /// Start of row r for rank-2 tensors.
    double* row(std::size_t r) { return data_.data() + r * shape_[1]; }
    const double* row(std::size_t r) const { return data_.data() + r * shape_[1]; }

    /// Same data, new shape; sizes must agree.
    Tensor reshaped(std::vector<std::size_t> shape) const;

    bool all_finite() const;

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

    const std::vector<double>& storage() const { return data_; }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

} // namespace hebbnet

#endif
