#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fclt {

// A d-dimensional cadlag step path on [0,1] at grid resolution n:
// path(t) = values[floor(n*t)], constant on [m/n, (m+1)/n). Immutable after
// construction by convention; all operations are pure.
struct StepPath {
    int d = 0;
    int n = 0;
    std::vector<double> values;  // (n+1) x d, row-major; row m is the value on [m/n,(m+1)/n)

    StepPath() = default;
    StepPath(int d_, int n_) : d(d_), n(n_), values(static_cast<std::size_t>(n_ + 1) * d_, 0.0) {}

    static StepPath zero(int d, int n) { return StepPath(d, n); }

    double* row(int m) { return values.data() + static_cast<std::size_t>(m) * d; }
    const double* row(int m) const { return values.data() + static_cast<std::size_t>(m) * d; }

    // Grid index for time t; snaps to the nearest grid point when n*t is
    // within 1e-9 of an integer so that eval(p, m/n) hits row m exactly.
    int grid_index(double t) const;
};

// path(t); throws std::domain_error outside [0,1].
std::vector<double> eval(const StepPath& p, double t);

// sup_{t in [0,1]} |p(t)|_2, exact for step paths.
double sup_norm(const StepPath& p);

// Pointwise a*p + b*q; shapes must match.
StepPath combine(double a, const StepPath& p, double b, const StepPath& q);

// CSV with mandatory header: t,v1,...,vd and one row per grid index.
void write_csv(const StepPath& p, std::ostream& os);
StepPath read_csv(std::istream& is);
void write_csv_file(const StepPath& p, const std::string& file);

}  // namespace fclt
