#include "fclt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fclt/simd.hpp"

namespace fclt {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: shape mismatch");
    Matrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const double v = a.at(i, k);
            if (v == 0.0) continue;
            const double* brow = b.row(k);
            double* orow = out.row(i);
            for (int j = 0; j < b.cols; ++j) orow[j] += v * brow[j];
        }
    }
    return out;
}

double frobenius_norm(const Matrix& m) { return std::sqrt(vec::sumsq(m.a.data(), m.a.size())); }

double frobenius_dist(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw std::invalid_argument("frobenius_dist: shape");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.a.size(); ++i) {
        const double d = a.a[i] - b.a[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

std::vector<double> apply(const Matrix& a, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != a.cols) throw std::invalid_argument("apply: shape");
    std::vector<double> y(static_cast<std::size_t>(a.rows));
    vec::matvec(a.a.data(), x.data(), y.data(), static_cast<std::size_t>(a.rows),
                static_cast<std::size_t>(a.cols));
    return y;
}

// In-house symmetric eigensolver: Householder reduction to tridiagonal form
// followed by implicit-shift QL with eigenvector accumulation. The system
// LAPACK on some deployment images returns non-orthogonal eigenvectors for
// n >~ 128 (verified against an independent implementation), so the solver is
// self-contained; the psd_sqrt round-trip tests guard its accuracy.
namespace {

// Reduces the symmetric matrix stored in z to tridiagonal form; on exit z
// holds the accumulated orthogonal transformation, d the diagonal and e the
// subdiagonal (e[0] unused).
void householder_tridiag(Matrix& z, std::vector<double>& d, std::vector<double>& e) {
    const int n = z.rows;
    for (int i = n - 1; i > 0; --i) {
        const int l = i - 1;
        double h = 0.0;
        if (l > 0) {
            double scale = 0.0;
            for (int k = 0; k <= l; ++k) scale += std::fabs(z.at(i, k));
            if (scale == 0.0) {
                e[static_cast<std::size_t>(i)] = z.at(i, l);
            } else {
                for (int k = 0; k <= l; ++k) {
                    z.at(i, k) /= scale;
                    h += z.at(i, k) * z.at(i, k);
                }
                double f = z.at(i, l);
                double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
                e[static_cast<std::size_t>(i)] = scale * g;
                h -= f * g;
                z.at(i, l) = f - g;
                f = 0.0;
                for (int j = 0; j <= l; ++j) {
                    z.at(j, i) = z.at(i, j) / h;
                    g = 0.0;
                    for (int k = 0; k <= j; ++k) g += z.at(j, k) * z.at(i, k);
                    for (int k = j + 1; k <= l; ++k) g += z.at(k, j) * z.at(i, k);
                    e[static_cast<std::size_t>(j)] = g / h;
                    f += e[static_cast<std::size_t>(j)] * z.at(i, j);
                }
                const double hh = f / (h + h);
                for (int j = 0; j <= l; ++j) {
                    f = z.at(i, j);
                    g = e[static_cast<std::size_t>(j)] - hh * f;
                    e[static_cast<std::size_t>(j)] = g;
                    for (int k = 0; k <= j; ++k)
                        z.at(j, k) -= f * e[static_cast<std::size_t>(k)] + g * z.at(i, k);
                }
            }
        } else {
            e[static_cast<std::size_t>(i)] = z.at(i, l);
        }
        d[static_cast<std::size_t>(i)] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for (int i = 0; i < n; ++i) {
        if (d[static_cast<std::size_t>(i)] != 0.0) {
            for (int j = 0; j < i; ++j) {
                double g = 0.0;
                for (int k = 0; k < i; ++k) g += z.at(i, k) * z.at(k, j);
                for (int k = 0; k < i; ++k) z.at(k, j) -= g * z.at(k, i);
            }
        }
        d[static_cast<std::size_t>(i)] = z.at(i, i);
        z.at(i, i) = 1.0;
        for (int j = 0; j < i; ++j) {
            z.at(j, i) = 0.0;
            z.at(i, j) = 0.0;
        }
    }
}

// Implicit-shift QL on the tridiagonal (d, e), accumulating rotations into
// the columns of z. Eigenvalues land in d.
void tridiag_ql(std::vector<double>& d, std::vector<double>& e, Matrix& z) {
    const int n = z.rows;
    for (int i = 1; i < n; ++i) e[static_cast<std::size_t>(i - 1)] = e[static_cast<std::size_t>(i)];
    e[static_cast<std::size_t>(n - 1)] = 0.0;
    // absolute deflation floor: off-diagonals this small are negligible at the
    // scale of the whole matrix (rank-deficient inputs otherwise stall the
    // relative test on near-zero diagonal pairs)
    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        anorm = std::max(anorm, std::fabs(d[static_cast<std::size_t>(i)]) +
                                    std::fabs(e[static_cast<std::size_t>(i)]));
    const double eps = std::numeric_limits<double>::epsilon();
    const double floor_abs = eps * anorm;
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::fabs(d[static_cast<std::size_t>(m)]) +
                                  std::fabs(d[static_cast<std::size_t>(m + 1)]);
                if (std::fabs(e[static_cast<std::size_t>(m)]) <= floor_abs ||
                    std::fabs(e[static_cast<std::size_t>(m)]) <= eps * dd)
                    break;
            }
            if (m != l) {
                if (iter++ == 100) throw std::runtime_error("sym_eig: QL failed to converge");
                double g = (d[static_cast<std::size_t>(l + 1)] - d[static_cast<std::size_t>(l)]) /
                           (2.0 * e[static_cast<std::size_t>(l)]);
                double r = std::hypot(g, 1.0);
                g = d[static_cast<std::size_t>(m)] - d[static_cast<std::size_t>(l)] +
                    e[static_cast<std::size_t>(l)] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                int i;
                for (i = m - 1; i >= l; --i) {
                    double f = s * e[static_cast<std::size_t>(i)];
                    const double b = c * e[static_cast<std::size_t>(i)];
                    r = std::hypot(f, g);
                    e[static_cast<std::size_t>(i + 1)] = r;
                    if (r == 0.0) {
                        d[static_cast<std::size_t>(i + 1)] -= p;
                        e[static_cast<std::size_t>(m)] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[static_cast<std::size_t>(i + 1)] - p;
                    r = (d[static_cast<std::size_t>(i)] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[static_cast<std::size_t>(i + 1)] = g + p;
                    g = c * r - b;
                    for (int k = 0; k < n; ++k) {
                        f = z.at(k, i + 1);
                        z.at(k, i + 1) = s * z.at(k, i) + c * f;
                        z.at(k, i) = c * z.at(k, i) - s * f;
                    }
                }
                if (r == 0.0 && i >= l) continue;
                d[static_cast<std::size_t>(l)] -= p;
                e[static_cast<std::size_t>(l)] = g;
                e[static_cast<std::size_t>(m)] = 0.0;
            }
        } while (m != l);
    }
}

}  // namespace

EigResult sym_eig(const Matrix& sym) {
    if (sym.rows != sym.cols) throw std::invalid_argument("sym_eig: square matrix required");
    const int n = sym.rows;
    EigResult r;
    r.vectors = sym;
    r.values.assign(static_cast<std::size_t>(n), 0.0);
    if (n == 0) return r;
    std::vector<double> e(static_cast<std::size_t>(n), 0.0);
    householder_tridiag(r.vectors, r.values, e);
    tridiag_ql(r.values, e, r.vectors);

    // sort ascending, permuting eigenvector columns accordingly
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return r.values[static_cast<std::size_t>(a)] < r.values[static_cast<std::size_t>(b)];
    });
    EigResult sorted;
    sorted.values.resize(static_cast<std::size_t>(n));
    sorted.vectors = Matrix(n, n);
    for (int c = 0; c < n; ++c) {
        sorted.values[static_cast<std::size_t>(c)] = r.values[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])];
        for (int i = 0; i < n; ++i)
            sorted.vectors.at(i, c) = r.vectors.at(i, order[static_cast<std::size_t>(c)]);
    }
    return sorted;
}

double spectral_radius_sym(const Matrix& sym) {
    auto eig = sym_eig(sym);
    double best = 0.0;
    for (double v : eig.values) best = std::max(best, std::fabs(v));
    return best;
}

}  // namespace fclt
