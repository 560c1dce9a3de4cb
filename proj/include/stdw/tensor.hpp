#pragma once

#include <cstddef>
#include <vector>

namespace stdw {

// Dense row-major matrix of 64-bit floats. Rows index samples, columns
// index features/classes throughout the library.
struct Tensor2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // length rows * cols

    Tensor2() = default;
    Tensor2(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }
};

// c = a * b
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
// c = a * b^T
Tensor2 matmul_bt(const Tensor2& a, const Tensor2& b);
// c = a^T * b
Tensor2 matmul_at(const Tensor2& a, const Tensor2& b);

bool all_finite(const Tensor2& t);
bool all_finite(const std::vector<double>& v);

}  // namespace stdw
