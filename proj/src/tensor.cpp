#include "lfsr/tensor.hpp"

#include "lfsr/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lfsr {

Index numel(const Shape& shape) {
    Index n = 1;
    for (Index extent : shape) {
        require(extent > 0, "tensor extents must be positive, got " + shape_string(shape));
        n *= extent;
    }
    return n;
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ')';
    return os.str();
}

Shape strides_of(const Shape& shape) {
    Shape strides(shape.size(), 1);
    for (Index i = static_cast<Index>(shape.size()) - 2; i >= 0; --i) {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    return strides;
}

Tensor::Tensor(Shape shape, float fill)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(numel(shape_)), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
    require(static_cast<Index>(data_.size()) == numel(shape_),
            "tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                shape_string(shape_));
}

Index Tensor::dim(Index axis) const {
    if (axis < 0) axis += rank();
    if (axis < 0 || axis >= rank()) throw RangeError("tensor axis out of range");
    return shape_[static_cast<std::size_t>(axis)];
}

Index Tensor::offset(std::initializer_list<Index> idx) const {
    if (static_cast<Index>(idx.size()) != rank()) throw RangeError("index rank mismatch");
    Index off = 0;
    std::size_t axis = 0;
    for (Index i : idx) {
        if (i < 0 || i >= shape_[axis]) {
            throw RangeError("index " + std::to_string(i) + " out of range on axis " +
                             std::to_string(axis) + " of " + shape_string(shape_));
        }
        off = off * shape_[axis] + i;
        ++axis;
    }
    return off;
}

float& Tensor::at(std::initializer_list<Index> idx) { return data_[static_cast<std::size_t>(offset(idx))]; }

float Tensor::at(std::initializer_list<Index> idx) const {
    return data_[static_cast<std::size_t>(offset(idx))];
}

Tensor Tensor::reshaped(Shape shape) const& {
    Tensor copy = *this;
    return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
    require(numel(shape) == size(),
            "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    shape_ = std::move(shape);
    return std::move(*this);
}

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

} // namespace lfsr
