#include "fclt/simd.hpp"

#include <cmath>
#include <cstdlib>

namespace fclt::vec {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double sumsq(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

double abs_cube_sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::fabs(x[i]);
        acc += a * a * a;
    }
    return acc;
}

double max_abs(const double* x, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::fabs(x[i]);
        if (a > m) m = a;
    }
    return m;
}

void axpby(double a, const double* x, double b, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void matvec(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = dot(A + r * cols, x, cols);
}

}  // namespace scalar

namespace {

struct Backend {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    double (*sumsq)(const double*, std::size_t);
    double (*abs_cube_sum)(const double*, std::size_t);
    double (*max_abs)(const double*, std::size_t);
    void (*axpby)(double, const double*, double, const double*, double*, std::size_t);
    void (*matvec)(const double*, const double*, double*, std::size_t, std::size_t);
    const char* name;
};

Backend pick_backend() {
#if defined(__x86_64__) || defined(_M_X64)
    const char* force = std::getenv("FCLT_FORCE_SCALAR");
    const bool forced_scalar = force != nullptr && force[0] != '\0' && force[0] != '0';
    if (!forced_scalar && __builtin_cpu_supports("avx2")) {
        return {avx2::dot,     avx2::sum,   avx2::sumsq, avx2::abs_cube_sum,
                avx2::max_abs, avx2::axpby, avx2::matvec, "avx2"};
    }
#endif
    return {scalar::dot,     scalar::sum,   scalar::sumsq, scalar::abs_cube_sum,
            scalar::max_abs, scalar::axpby, scalar::matvec, "scalar"};
}

const Backend& backend() {
    static const Backend b = pick_backend();
    return b;
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) { return backend().dot(a, b, n); }
double sum(const double* x, std::size_t n) { return backend().sum(x, n); }
double sumsq(const double* x, std::size_t n) { return backend().sumsq(x, n); }
double abs_cube_sum(const double* x, std::size_t n) { return backend().abs_cube_sum(x, n); }
double max_abs(const double* x, std::size_t n) { return backend().max_abs(x, n); }
void axpby(double a, const double* x, double b, const double* y, double* out, std::size_t n) {
    backend().axpby(a, x, b, y, out, n);
}
void matvec(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols) {
    backend().matvec(A, x, y, rows, cols);
}
const char* active_backend() { return backend().name; }

}  // namespace fclt::vec
