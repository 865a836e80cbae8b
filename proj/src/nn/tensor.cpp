#include "abaf/nn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "abaf/error.hpp"

namespace abaf::nn {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
    return s + ")";
}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
    require(data.size() == shape_size(shape), ErrorCode::ShapeMismatch,
            "buffer of " + std::to_string(data.size()) + " values for shape " + shape_string(shape), "tensor");
}

Tensor Tensor::reshaped(Shape s) const {
    require(shape_size(s) == data.size(), ErrorCode::ShapeMismatch,
            "cannot reshape " + shape_string(shape) + " to " + shape_string(s), "tensor");
    return Tensor(std::move(s), data);
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

bool Tensor::all_finite() const {
    return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

void require_shape(const Tensor& t, const Shape& expected, const std::string& what) {
    bool ok = t.shape.size() == expected.size();
    for (std::size_t i = 0; ok && i < expected.size(); ++i) ok = expected[i] == 0 || expected[i] == t.shape[i];
    require(ok, ErrorCode::ShapeMismatch,
            what + ": expected " + shape_string(expected) + ", got " + shape_string(t.shape), what);
}

}  // namespace abaf::nn
