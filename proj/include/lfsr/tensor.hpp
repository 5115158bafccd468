#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace lfsr {

using Index = std::int64_t;
using Shape = std::vector<Index>;

Index numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of 32-bit reals.
///
/// Feature maps use channel-last order (s1, a, s2, c); 2D maps are stored
/// as (h, 1, w, c) when they go through the 3D kernels.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, float fill = 0.0f);
    Tensor(Shape shape, std::vector<float> data);

    static Tensor scalar(float value) { return Tensor(Shape{1}, value); }

    const Shape& shape() const noexcept { return shape_; }
    Index rank() const noexcept { return static_cast<Index>(shape_.size()); }
    Index dim(Index axis) const;
    Index size() const noexcept { return static_cast<Index>(data_.size()); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<float> values() noexcept { return data_; }
    std::span<const float> values() const noexcept { return data_; }
    float* data() noexcept { return data_.data(); }
    const float* data() const noexcept { return data_.data(); }
    const std::vector<float>& storage() const noexcept { return data_; }

    float& operator[](Index i) { return data_[static_cast<std::size_t>(i)]; }
    float operator[](Index i) const { return data_[static_cast<std::size_t>(i)]; }

    /// Bounds-checked multi-index access.
    float& at(std::initializer_list<Index> idx);
    float at(std::initializer_list<Index> idx) const;

    Index offset(std::initializer_list<Index> idx) const;

    /// Same data, new shape with equal element count.
    Tensor reshaped(Shape shape) const&;
    Tensor reshaped(Shape shape) &&;

    void fill(float value);
    bool all_finite() const noexcept;

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    Shape shape_;
    std::vector<float> data_;
};

/// Row-major strides for a shape.
Shape strides_of(const Shape& shape);

} // namespace lfsr
