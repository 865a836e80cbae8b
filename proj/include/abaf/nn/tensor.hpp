#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace abaf::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major tensor of doubles.
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0) : shape(std::move(s)), data(shape_size(shape), fill) {}
    Tensor(Shape s, std::vector<double> values);

    std::size_t size() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    std::size_t ndim() const { return shape.size(); }
    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }

    /// Same buffer, new shape of equal size.
    Tensor reshaped(Shape s) const;
    void fill(double v);
    bool all_finite() const;
};

/// Requires `t` to have exactly `expected` (0 entries are wildcards).
void require_shape(const Tensor& t, const Shape& expected, const std::string& what);

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

inline MatMap as_matrix(double* p, std::size_t rows, std::size_t cols) {
    return MatMap(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
inline ConstMatMap as_matrix(const double* p, std::size_t rows, std::size_t cols) {
    return ConstMatMap(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

/// Trainable tensor with its accumulated gradient.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter(std::string n, Shape shape) : name(std::move(n)), value(shape), grad(shape) {}
    void zero_grad() { grad.fill(0.0); }
};

}  // namespace abaf::nn
