#pragma once

#include <cstddef>
#include <vector>

namespace fclt {

// Minimal dense row-major matrix.
struct Matrix {
    int rows = 0, cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
    double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
    const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }
    static Matrix diag(const std::vector<double>& d) {
        Matrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
        for (int i = 0; i < m.rows; ++i) m.at(i, i) = d[static_cast<std::size_t>(i)];
        return m;
    }
};

Matrix matmul(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& m);
double frobenius_dist(const Matrix& a, const Matrix& b);
// y = A x
std::vector<double> apply(const Matrix& a, const std::vector<double>& x);

// Symmetric eigendecomposition (ascending eigenvalues); eigenvectors returned
// as columns of `vectors`.
struct EigResult {
    std::vector<double> values;
    Matrix vectors;
};
EigResult sym_eig(const Matrix& sym);

// Spectral radius of a symmetric matrix.
double spectral_radius_sym(const Matrix& sym);

}  // namespace fclt
