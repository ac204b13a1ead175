#include "fclt/path.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fclt/simd.hpp"

namespace fclt {

int StepPath::grid_index(double t) const {
    const double s = t * static_cast<double>(n);
    const double nearest = std::nearbyint(s);
    if (std::fabs(s - nearest) < 1e-9) return static_cast<int>(nearest);
    return static_cast<int>(std::floor(s));
}

std::vector<double> eval(const StepPath& p, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("eval: t outside [0,1]");
    int m = p.grid_index(t);
    if (m > p.n) m = p.n;
    if (m < 0) m = 0;
    return std::vector<double>(p.row(m), p.row(m) + p.d);
}

double sup_norm(const StepPath& p) {
    if (p.d == 1) return vec::max_abs(p.values.data(), p.values.size());
    double best = 0.0;
    for (int m = 0; m <= p.n; ++m) {
        const double s = vec::sumsq(p.row(m), static_cast<std::size_t>(p.d));
        if (s > best) best = s;
    }
    return std::sqrt(best);
}

StepPath combine(double a, const StepPath& p, double b, const StepPath& q) {
    if (p.d != q.d || p.n != q.n) throw std::invalid_argument("combine: shape mismatch");
    StepPath out(p.d, p.n);
    vec::axpby(a, p.values.data(), b, q.values.data(), out.values.data(), out.values.size());
    return out;
}

void write_csv(const StepPath& p, std::ostream& os) {
    os << "t";
    for (int j = 1; j <= p.d; ++j) os << ",v" << j;
    os << "\n";
    os.precision(17);
    for (int m = 0; m <= p.n; ++m) {
        os << (static_cast<double>(m) / p.n);
        const double* r = p.row(m);
        for (int j = 0; j < p.d; ++j) os << "," << r[j];
        os << "\n";
    }
}

StepPath read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("path csv: empty input");
    int d = 0;
    for (char c : line)
        if (c == ',') ++d;
    if (d < 1) throw std::runtime_error("path csv: bad header");
    std::vector<double> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        int col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col > 0) rows.push_back(std::stod(cell));
            ++col;
        }
        if (col != d + 1) throw std::runtime_error("path csv: ragged row");
    }
    const int n = static_cast<int>(rows.size() / d) - 1;
    if (n < 0) throw std::runtime_error("path csv: no rows");
    StepPath p(d, n);
    p.values = std::move(rows);
    return p;
}

void write_csv_file(const StepPath& p, const std::string& file) {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("cannot open " + file);
    write_csv(p, os);
}

}  // namespace fclt
