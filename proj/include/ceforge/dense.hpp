#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"

namespace ceforge {

// Row-major dense matrix of doubles. All feature tables, propagated
// iterates, aggregated vectors and GCN weights use this layout.
struct DenseMatrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(size_t i, size_t j) { return data[i * cols + j]; }
    double at(size_t i, size_t j) const { return data[i * cols + j]; }

    std::span<double> row(size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(size_t i) const { return {data.data() + i * cols, cols}; }

    bool operator==(const DenseMatrix& o) const {
        return rows == o.rows && cols == o.cols && data == o.data;
    }
};

using FeatureMatrix = DenseMatrix;
using AggregatedVectors = DenseMatrix;

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return std::sqrt(s);
}

// C = A * B, naive dense product. Desk-scale only.
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) {
        fail("matmul: dimension mismatch " + std::to_string(a.cols) + " vs " +
             std::to_string(b.rows));
    }
    DenseMatrix c(a.rows, b.cols);
    for (size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + i * a.cols;
        double* crow = c.data.data() + i * c.cols;
        for (size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.data.data() + k * b.cols;
            for (size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

} // namespace ceforge
