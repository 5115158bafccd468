#pragma once

// Double-precision naive forward passes. Finite differences taken on these
// are free of float32 rounding noise, so the engine's float gradients can be
// checked with a tiny step that practically never straddles a ReLU/max kink.

#include "lfsr/evrn.hpp"
#include "lfsr/nvs.hpp"
#include "lfsr/params.hpp"
#include "lfsr/tensor.hpp"

#include <map>
#include <string>
#include <vector>

namespace lfsr::testing::ref {

struct DTensor {
    Shape shape;
    std::vector<double> v;

    DTensor() = default;
    explicit DTensor(Shape s, double fill = 0.0) : shape(std::move(s)), v(static_cast<std::size_t>(numel(shape)), fill) {}
    explicit DTensor(const Tensor& t) : shape(t.shape()), v(t.values().begin(), t.values().end()) {}
    Index dim(std::size_t i) const { return shape[i]; }
    Tensor to_float() const;
};

using DParams = std::map<std::string, DTensor>;
DParams to_double(const ParamStore& p);

DTensor conv3d(const DTensor& x, const DTensor& k, const DTensor& b);
DTensor conv2d(const DTensor& x, const DTensor& k, const DTensor& b);
DTensor prelu(const DTensor& x, const DTensor& a);
DTensor sigmoid(const DTensor& x);
DTensor relu(const DTensor& x);
DTensor pool(const DTensor& x, const std::vector<Index>& axes, bool max);
DTensor dense(const DTensor& x, const DTensor& w, const DTensor& b);
DTensor concat(const std::vector<DTensor>& parts, Index axis);
DTensor bmul(const DTensor& x, const DTensor& w);
DTensor add(const DTensor& x, const DTensor& y);
DTensor reshape(DTensor x, Shape s);
double l1(const DTensor& pred, const DTensor& target);
double dot(const DTensor& x, const DTensor& proj);

DTensor evrn(const DParams& p, const DTensor& input, const EvrnConfig& cfg);
DTensor nvs(const DParams& p, const DTensor& stacked, const NvsConfig& cfg);

} // namespace lfsr::testing::ref
