#include "regimenet/matrix.hpp"

namespace regimenet {

namespace {

inline void matmul_row(const Matrix& A, const Matrix& B, Matrix& C, std::size_t i) {
    const std::size_t inner = A.cols();
    const std::size_t n = B.cols();
    double* crow = C.data() + i * n;
    const double* arow = A.data() + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
        const double a = arow[k];
        if (a == 0.0) continue;
        const double* brow = B.data() + k * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
    }
}

inline void matmul_ta_row(const Matrix& A, const Matrix& B, Matrix& C, std::size_t i) {
    // C(i,j) = sum_k A(k,i) B(k,j)
    const std::size_t inner = A.rows();
    const std::size_t n = B.cols();
    double* crow = C.data() + i * n;
    for (std::size_t k = 0; k < inner; ++k) {
        const double a = A(k, i);
        if (a == 0.0) continue;
        const double* brow = B.data() + k * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
    }
}

inline void matmul_tb_row(const Matrix& A, const Matrix& B, Matrix& C, std::size_t i) {
    // C(i,j) = sum_k A(i,k) B(j,k)
    const std::size_t inner = A.cols();
    const std::size_t n = B.rows();
    const double* arow = A.data() + i * inner;
    double* crow = C.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
        const double* brow = B.data() + j * inner;
        double acc = 0.0;
        for (std::size_t k = 0; k < inner; ++k) acc += arow[k] * brow[k];
        crow[j] = acc;
    }
}

} // namespace

Matrix matmul(const Matrix& A, const Matrix& B) {
    if (A.cols() != B.rows()) throw ShapeError("matmul: inner dimensions disagree");
    Matrix C(A.rows(), B.cols());
    const long m = static_cast<long>(A.rows());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < m; ++i) matmul_row(A, B, C, static_cast<std::size_t>(i));
    return C;
}

Matrix matmul_serial(const Matrix& A, const Matrix& B) {
    if (A.cols() != B.rows()) throw ShapeError("matmul: inner dimensions disagree");
    Matrix C(A.rows(), B.cols());
    for (std::size_t i = 0; i < A.rows(); ++i) matmul_row(A, B, C, i);
    return C;
}

Matrix matmul_transposed_a(const Matrix& A, const Matrix& B) {
    if (A.rows() != B.rows()) throw ShapeError("matmul_transposed_a: shapes disagree");
    Matrix C(A.cols(), B.cols());
    const long m = static_cast<long>(A.cols());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < m; ++i) matmul_ta_row(A, B, C, static_cast<std::size_t>(i));
    return C;
}

Matrix matmul_transposed_a_serial(const Matrix& A, const Matrix& B) {
    if (A.rows() != B.rows()) throw ShapeError("matmul_transposed_a: shapes disagree");
    Matrix C(A.cols(), B.cols());
    for (std::size_t i = 0; i < A.cols(); ++i) matmul_ta_row(A, B, C, i);
    return C;
}

Matrix matmul_transposed_b(const Matrix& A, const Matrix& B) {
    if (A.cols() != B.cols()) throw ShapeError("matmul_transposed_b: shapes disagree");
    Matrix C(A.rows(), B.rows());
    const long m = static_cast<long>(A.rows());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < m; ++i) matmul_tb_row(A, B, C, static_cast<std::size_t>(i));
    return C;
}

Matrix matmul_transposed_b_serial(const Matrix& A, const Matrix& B) {
    if (A.cols() != B.cols()) throw ShapeError("matmul_transposed_b: shapes disagree");
    Matrix C(A.rows(), B.rows());
    for (std::size_t i = 0; i < A.rows(); ++i) matmul_tb_row(A, B, C, i);
    return C;
}

} // namespace regimenet
