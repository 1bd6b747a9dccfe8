#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "dropfilter/errors.hpp"

namespace dropfilter {

// Dense rank-1..4 tensor of doubles, row-major, last extent contiguous.
// Values are plain owned storage; copying copies data.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double value);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_[axis]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& operator()(std::size_t i) { return data_[i]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * stride_[0] + j]; }
    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[i * stride_[0] + j * stride_[1] + k];
    }
    double& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return data_[i * stride_[0] + j * stride_[1] + k * stride_[2] + l];
    }
    double operator()(std::size_t i) const { return data_[i]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * stride_[0] + j]; }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[i * stride_[0] + j * stride_[1] + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return data_[i * stride_[0] + j * stride_[1] + k * stride_[2] + l];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

private:
    void init_strides();

    std::vector<std::size_t> shape_;
    std::vector<std::size_t> stride_; // strides for leading rank-1 axes
    std::vector<double> data_;
};

// Masks share the tensor representation; Bernoulli masks hold only 0.0/1.0.
using Mask = Tensor;

// out[i] = a[i] * b[i]; shapes must match exactly (no broadcasting).
Tensor elementwise_mul(const Tensor& a, const Tensor& b);
void mul_inplace(Tensor& a, const Tensor& b);
// a[i] += s * b[i]
void axpy_inplace(Tensor& a, double s, const Tensor& b);
void scale_inplace(Tensor& a, double s);

std::string shape_to_string(const std::vector<std::size_t>& shape);

} // namespace dropfilter
