#include "stdw/tensor.hpp"

#include <cmath>

#include "stdw/errors.hpp"

namespace stdw {

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
    if (a.cols != b.rows)
        throw ShapeError("matmul: inner dimensions differ (" + std::to_string(a.cols) +
                         " vs " + std::to_string(b.rows) + ")");
    Tensor2 c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ar = a.row(i);
        double* cr = c.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double av = ar[k];
            const double* br = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) cr[j] += av * br[j];
        }
    }
    return c;
}

Tensor2 matmul_bt(const Tensor2& a, const Tensor2& b) {
    if (a.cols != b.cols)
        throw ShapeError("matmul_bt: inner dimensions differ (" + std::to_string(a.cols) +
                         " vs " + std::to_string(b.cols) + ")");
    Tensor2 c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ar = a.row(i);
        double* cr = c.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* br = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += ar[k] * br[k];
            cr[j] = s;
        }
    }
    return c;
}

Tensor2 matmul_at(const Tensor2& a, const Tensor2& b) {
    if (a.rows != b.rows)
        throw ShapeError("matmul_at: inner dimensions differ (" + std::to_string(a.rows) +
                         " vs " + std::to_string(b.rows) + ")");
    Tensor2 c(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* ar = a.row(k);
        const double* br = b.row(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double av = ar[i];
            double* cr = c.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) cr[j] += av * br[j];
        }
    }
    return c;
}

bool all_finite(const Tensor2& t) { return all_finite(t.data); }

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace stdw
