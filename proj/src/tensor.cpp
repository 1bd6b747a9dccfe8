#include "dropfilter/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace dropfilter {

namespace {
std::size_t checked_numel(const std::vector<std::size_t>& shape) {
    if (shape.empty() || shape.size() > 4) {
        throw ShapeError("tensor rank must be 1..4, got " + std::to_string(shape.size()));
    }
    std::size_t n = 1;
    for (std::size_t e : shape) {
        if (e == 0) throw ShapeError("tensor extents must be positive");
        n *= e;
    }
    return n;
}
} // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    data_.assign(checked_numel(shape_), 0.0);
    init_strides();
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_numel(shape_) != data_.size()) {
        throw ShapeError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_to_string(shape_));
    }
    init_strides();
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

void Tensor::init_strides() {
    stride_.assign(shape_.size() > 1 ? shape_.size() - 1 : 0, 1);
    for (std::size_t axis = stride_.size(); axis-- > 0;) {
        std::size_t s = 1;
        for (std::size_t k = axis + 1; k < shape_.size(); ++k) s *= shape_[k];
        stride_[axis] = s;
    }
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("elementwise_mul shape mismatch: " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
    }
    Tensor out = a;
    const double* bp = b.data();
    double* op = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) op[i] *= bp[i];
    return out;
}

void mul_inplace(Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("mul_inplace shape mismatch: " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
    }
    double* ap = a.data();
    const double* bp = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) ap[i] *= bp[i];
}

void axpy_inplace(Tensor& a, double s, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("axpy_inplace shape mismatch: " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
    }
    double* ap = a.data();
    const double* bp = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) ap[i] += s * bp[i];
}

void scale_inplace(Tensor& a, double s) {
    double* ap = a.data();
    for (std::size_t i = 0; i < a.size(); ++i) ap[i] *= s;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

} // namespace dropfilter
