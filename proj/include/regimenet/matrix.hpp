#pragma once

#include <cstddef>
#include <vector>

#include "regimenet/errors.hpp"

namespace regimenet {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Each output element is accumulated by a single thread in a fixed index
// order, so the parallel kernels are bit-identical to their serial
// references for any thread count.

/// C = A * B.
Matrix matmul(const Matrix& A, const Matrix& B);
Matrix matmul_serial(const Matrix& A, const Matrix& B);

/// C = A^T * B.
Matrix matmul_transposed_a(const Matrix& A, const Matrix& B);
Matrix matmul_transposed_a_serial(const Matrix& A, const Matrix& B);

/// C = A * B^T.
Matrix matmul_transposed_b(const Matrix& A, const Matrix& B);
Matrix matmul_transposed_b_serial(const Matrix& A, const Matrix& B);

} // namespace regimenet
