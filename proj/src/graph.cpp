#include "fclt/graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "fclt/uprocess.hpp"

namespace fclt {

void GraphSpec::validate() const {
    if (n < 4) throw std::invalid_argument("graph: n >= 4 required");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("graph: p outside (0,1)");
}

namespace {

double choose2(double m) { return m * (m - 1.0) / 2.0; }
double choose3(double m) { return m * (m - 1.0) * (m - 2.0) / 6.0; }

}  // namespace

GraphMoments graph_moments(const GraphSpec& spec, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("graph_moments: t outside [0,1]");
    StepPath probe(1, spec.n);
    const int m = std::min(probe.grid_index(t), spec.n);
    const double n2 = static_cast<double>(spec.n) * spec.n;
    const double n4 = n2 * n2;
    GraphMoments out;
    out.et = (m - 2.0) / n2 * choose2(m) * spec.p;
    out.ev = 3.0 / n2 * choose3(m) * spec.p * spec.p;
    out.cov = Matrix(2, 2);
    const double f = 3.0 * choose3(m) * spec.p * (1.0 - spec.p) / n4;
    out.cov.at(0, 0) = f * (m - 2.0);
    out.cov.at(0, 1) = f * 2.0 * spec.p * (m - 2.0);
    out.cov.at(1, 0) = out.cov.at(0, 1);
    out.cov.at(1, 1) = f * (4.0 * spec.p * spec.p * (m - 2.0) + spec.p * (1.0 - spec.p));
    return out;
}

namespace {

// Shared incremental path assembly: walk vertices 1..n, maintaining the edge
// count and the two-star count via degrees among the active vertex set.
template <typename EdgeValue>
StepPath graph_path_impl(const GraphSpec& spec, EdgeValue&& edge_value) {
    const int n = spec.n;
    const double n2 = static_cast<double>(n) * n;
    StepPath path(2, n);
    std::vector<int> deg(static_cast<std::size_t>(n) + 1, 0);
    long long edge_count = 0;
    long long two_stars = 0;
    for (int m = 1; m <= n; ++m) {
        int dm = 0;
        for (int i = 1; i < m; ++i) {
            if (edge_value(i, m)) {
                // adding edge (i,m): vertex i gains the pairs with its
                // existing neighbours; so does m
                two_stars += deg[static_cast<std::size_t>(i)] + dm;
                ++deg[static_cast<std::size_t>(i)];
                ++dm;
                ++edge_count;
            }
        }
        deg[static_cast<std::size_t>(m)] = dm;
        const double traw = (m - 2.0) / n2 * static_cast<double>(edge_count);
        const double vraw = static_cast<double>(two_stars) / n2;
        const double et = (m - 2.0) / n2 * choose2(m) * spec.p;
        const double ev = 3.0 / n2 * choose3(m) * spec.p * spec.p;
        path.row(m)[0] = traw - et;
        path.row(m)[1] = vraw - ev;
    }
    return path;
}

}  // namespace

GraphSim simulate_graph(const GraphSpec& spec, Rng& rng) {
    spec.validate();
    GraphSim out;
    out.edges = EdgeSet(spec.n);
    out.y = graph_path_impl(spec, [&](int i, int m) {
        const bool v = rng.bernoulli(spec.p);
        out.edges.set(i, m, v);
        return v;
    });
    return out;
}

StepPath graph_path_from_edges(const GraphSpec& spec, const EdgeSet& edges) {
    spec.validate();
    if (edges.n() != spec.n) throw std::invalid_argument("graph: edge set size");
    return graph_path_impl(spec, [&](int i, int m) { return edges.get(i, m); });
}

namespace {

// Pair-update deltas: T'(m)-T(m) and V'(m)-V(m) for resampling edge (i,j)
// from old value b0 to b1; nonzero only for m >= max(i,j).
struct PairDelta {
    std::vector<double> dt, dv;  // indexed by grid m, 0..n
};

PairDelta pair_delta(const GraphSpec& spec, const EdgeSet& edges, int vi, int vj, bool b0,
                     bool b1) {
    const int n = spec.n;
    const double n2 = static_cast<double>(n) * n;
    PairDelta out;
    out.dt.assign(static_cast<std::size_t>(n) + 1, 0.0);
    out.dv.assign(static_cast<std::size_t>(n) + 1, 0.0);
    const double diff = static_cast<double>(b1) - static_cast<double>(b0);
    if (diff == 0.0) return out;
    const int lo = std::min(vi, vj), hi = std::max(vi, vj);
    double csum = 0.0;  // sum_{k <= m, k != i,j} (I_jk + I_ik)
    for (int k = 1; k <= hi; ++k) {
        if (k == lo || k == hi) continue;
        csum += static_cast<double>(edges.get(hi, k)) + static_cast<double>(edges.get(lo, k));
    }
    for (int m = hi; m <= n; ++m) {
        if (m > hi && m != lo) {
            csum += static_cast<double>(edges.get(hi, m)) + static_cast<double>(edges.get(lo, m));
        }
        out.dt[static_cast<std::size_t>(m)] = (m - 2.0) / n2 * diff;
        out.dv[static_cast<std::size_t>(m)] = diff * csum / n2;
    }
    return out;
}

}  // namespace

GraphPair graph_pair(const GraphSpec& spec, const EdgeSet& edges, Rng& rng) {
    spec.validate();
    GraphPair out;
    out.y = graph_path_from_edges(spec, edges);
    // uniform pair (i,j), i < j
    const std::uint64_t pick = rng.below(edges.pair_count());
    int j = 2;
    std::uint64_t acc = 0;
    while (acc + static_cast<std::uint64_t>(j - 1) <= pick) {
        acc += static_cast<std::uint64_t>(j - 1);
        ++j;
    }
    const int i = static_cast<int>(pick - acc) + 1;
    out.vi = i;
    out.vj = j;
    out.old_value = edges.get(i, j);
    out.new_value = rng.bernoulli(spec.p);
    const PairDelta delta = pair_delta(spec, edges, i, j, out.old_value, out.new_value);
    out.yp = out.y;
    for (int m = 0; m <= spec.n; ++m) {
        out.yp.row(m)[0] += delta.dt[static_cast<std::size_t>(m)];
        out.yp.row(m)[1] += delta.dv[static_cast<std::size_t>(m)];
    }
    return out;
}

Matrix graph_lambda(const GraphSpec& spec) {
    Matrix l(2, 2);
    const double f = spec.n * (spec.n - 1.0) / 8.0;
    l.at(0, 0) = 2.0 * f;
    l.at(0, 1) = 2.0 * spec.p * f;
    l.at(1, 0) = 0.0;
    l.at(1, 1) = f;
    return l;
}

GraphRegressionResidual graph_regression_residual(const GraphSpec& spec, const EdgeSet& edges,
                                                  double lambda_scale, int max_n) {
    spec.validate();
    if (spec.n > max_n)
        throw std::invalid_argument(
            "graph_regression_residual: n too large for exact conditional expectation; use MC "
            "diagnostics instead");
    const int n = spec.n;
    const StepPath y = graph_path_from_edges(spec, edges);

    // E[Y - Y' | edges]: average the pair-update deltas over all C(n,2) pair
    // choices and both resample values with their probabilities.
    std::vector<double> edt(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> edv(static_cast<std::size_t>(n) + 1, 0.0);
    const double inv_pairs = 1.0 / static_cast<double>(edges.pair_count());
    for (int j = 2; j <= n; ++j) {
        for (int i = 1; i < j; ++i) {
            const bool b0 = edges.get(i, j);
            for (int b1 = 0; b1 <= 1; ++b1) {
                const double prob = (b1 == 1) ? spec.p : 1.0 - spec.p;
                if (prob == 0.0) continue;
                const PairDelta delta = pair_delta(spec, edges, i, j, b0, b1 != 0);
                // deltas are Y' - Y; the identities use Y - Y'
                for (int m = 0; m <= n; ++m) {
                    edt[static_cast<std::size_t>(m)] -= inv_pairs * prob * delta.dt[static_cast<std::size_t>(m)];
                    edv[static_cast<std::size_t>(m)] -= inv_pairs * prob * delta.dv[static_cast<std::size_t>(m)];
                }
            }
        }
    }

    GraphRegressionResidual out;
    const double c2 = lambda_scale * n * (n - 1.0) / 2.0;
    const double c4 = lambda_scale * n * (n - 1.0) / 4.0;
    for (int m = 0; m <= n; ++m) {
        const double ra = c2 * edt[static_cast<std::size_t>(m)] - y.row(m)[0];
        const double rb =
            c4 * (2.0 * spec.p * edt[static_cast<std::size_t>(m)] + edv[static_cast<std::size_t>(m)]) - y.row(m)[1];
        out.res_a = std::max(out.res_a, std::fabs(ra));
        out.res_b = std::max(out.res_b, std::fabs(rb));
    }
    return out;
}

PathSampler graph_prelimit_sampler(const GraphSpec& spec) {
    spec.validate();
    const double p = spec.p;
    const double n2 = static_cast<double>(spec.n) * spec.n;
    // B1/B2/B3 coefficients of the distributional representation
    const double c11 = std::sqrt(p * (1.0 - p)) / std::sqrt(2.0 + 8.0 * p * p);
    const double c12 = p * std::sqrt(2.0 * p * (1.0 - p)) / std::sqrt(1.0 + 4.0 * p * p);
    const double c21 = c12;
    const double c22 = 2.0 * p * p * std::sqrt(2.0 * p * (1.0 - p)) / std::sqrt(1.0 + 4.0 * p * p);
    const double c23 = p * (1.0 - p) / std::sqrt(2.0);

    PathSampler s;
    s.d = 2;
    s.n = spec.n;
    s.draw = [n = spec.n, n2, c11, c12, c21, c22, c23](Rng& rng) {
        StepPath path(2, n);
        double b1 = 0.0, b2 = 0.0, b3 = 0.0;
        double tau12 = 0.0, tau3 = 0.0;
        for (int m = 1; m <= n; ++m) {
            const double t12 = static_cast<double>(m) * (m - 1.0);
            const double t3 = t12 * (m - 2.0);
            const double sd12 = std::sqrt(t12 - tau12);
            const double sd3 = std::sqrt(std::max(0.0, t3 - tau3));
            b1 += sd12 * rng.normal();
            b2 += sd12 * rng.normal();
            b3 += sd3 * rng.normal();
            tau12 = t12;
            tau3 = t3;
            const double f = (m - 2.0) / n2;
            path.row(m)[0] = f * (c11 * b1 + c12 * b2);
            path.row(m)[1] = f * (c21 * b1 + c22 * b2) + c23 / n2 * b3;
        }
        return path;
    };
    return s;
}

PathSampler graph_limit_sampler(double p, int grid) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("graph_limit_sampler: p outside (0,1)");
    const double c11 = std::sqrt(p * (1.0 - p)) / std::sqrt(2.0 + 8.0 * p * p);
    const double c12 = p * std::sqrt(2.0 * p * (1.0 - p)) / std::sqrt(1.0 + 4.0 * p * p);
    const double c21 = c12;
    const double c22 = 2.0 * p * p * std::sqrt(2.0 * p * (1.0 - p)) / std::sqrt(1.0 + 4.0 * p * p);

    PathSampler s;
    s.d = 2;
    s.n = grid;
    s.draw = [grid, c11, c12, c21, c22](Rng& rng) {
        StepPath path(2, grid);
        double b1 = 0.0, b2 = 0.0, tau = 0.0;
        for (int m = 1; m <= grid; ++m) {
            const double t = static_cast<double>(m) / grid;
            const double sd = std::sqrt(t * t - tau);
            b1 += sd * rng.normal();
            b2 += sd * rng.normal();
            tau = t * t;
            path.row(m)[0] = t * (c11 * b1 + c12 * b2);
            path.row(m)[1] = t * (c21 * b1 + c22 * b2);
        }
        return path;
    };
    return s;
}

GraphBoundValues graph_bounds(int n) {
    if (n < 3) throw std::invalid_argument("graph_bounds: n >= 3 required");
    GraphBoundValues out;
    out.pre = 23.0 / n;
    out.con = 16422.0 * std::sqrt(std::log(static_cast<double>(n))) / std::sqrt(static_cast<double>(n)) +
              138.0 / std::sqrt(static_cast<double>(n));
    return out;
}

double graph_cov_D(const GraphSpec& spec, int a, double t, int b, double u) {
    StepPath probe(1, spec.n);
    const double mt = std::min(probe.grid_index(t), spec.n);
    const double mu_ = std::min(probe.grid_index(u), spec.n);
    const double mw = std::min(mt, mu_);
    const double p = spec.p;
    const double n4 = std::pow(static_cast<double>(spec.n), 4);
    if (a > b) {
        std::swap(a, b);
        return graph_cov_D(spec, a, u, b, t);
    }
    if (a == 1 && b == 1)
        return (mt - 2.0) * (mu_ - 2.0) * mw * (mw - 1.0) * p * (1.0 - p) / (2.0 * n4);
    if (a == 1 && b == 2)
        return (mt - 2.0) * (mu_ - 2.0) * mw * (mw - 1.0) * p * p * (1.0 - p) / n4;
    return mw * (mw - 1.0) *
           (4.0 * std::pow(p, 3) * (1.0 - p) * (mt - 2.0) * (mu_ - 2.0) +
            (mw - 2.0) * p * p * std::pow(1.0 - p, 2)) /
           (2.0 * n4);
}

double graph_cov_Z(double p, int a, double t, int b, double u) {
    const double w = std::min(t, u);
    const double base = t * u * w * w;
    if (a > b) std::swap(a, b);
    if (a == 1 && b == 1) return p * (1.0 - p) / 2.0 * base;
    if (a == 1 && b == 2) return p * p * (1.0 - p) * base;
    return 2.0 * std::pow(p, 3) * (1.0 - p) * base;
}

CovModel graph_cov_table(const GraphSpec& spec) {
    spec.validate();
    const int n = spec.n;
    const double p = spec.p;
    const double n4 = std::pow(static_cast<double>(n), 4);
    const long long pairs = static_cast<long long>(binomial(n, 2));
    const long long triples = static_cast<long long>(binomial(n, 3));

    // index decode tables
    auto pair_of = std::make_shared<std::vector<std::pair<int, int>>>();
    auto triple_of = std::make_shared<std::vector<std::array<int, 3>>>();
    pair_of->reserve(static_cast<std::size_t>(pairs));
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j) pair_of->emplace_back(i, j);
    triple_of->reserve(static_cast<std::size_t>(triples));
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j)
            for (int k = j + 1; k <= n; ++k) triple_of->push_back({i, j, k});

    const double v11 = p * (1.0 - p) / n4;
    const double v21 = 2.0 * p * p * (1.0 - p) / n4;
    const double v22_diag = 3.0 * p * p * (1.0 + 2.0 * p - 3.0 * p * p) / n4;
    const double v22_share2 = 4.0 * std::pow(p, 3) * (1.0 - p) / n4;

    auto rule = [pair_of, triple_of, pairs, v11, v21, v22_diag, v22_share2](int a, int b) {
        const bool a_pair = a < pairs;
        const bool b_pair = b < pairs;
        if (a_pair && b_pair) return a == b ? v11 : 0.0;
        if (!a_pair && !b_pair) {
            if (a == b) return v22_diag;
            const auto& ta = (*triple_of)[static_cast<std::size_t>(a - pairs)];
            const auto& tb = (*triple_of)[static_cast<std::size_t>(b - pairs)];
            int shared = 0;
            for (int x : ta)
                for (int y : tb)
                    if (x == y) ++shared;
            return shared == 2 ? v22_share2 : 0.0;
        }
        const auto& pr = a_pair ? (*pair_of)[static_cast<std::size_t>(a)]
                                : (*pair_of)[static_cast<std::size_t>(b)];
        const auto& tr = a_pair ? (*triple_of)[static_cast<std::size_t>(b - pairs)]
                                : (*triple_of)[static_cast<std::size_t>(a - pairs)];
        const bool f = (pr.first == tr[0] || pr.first == tr[1] || pr.first == tr[2]);
        const bool s = (pr.second == tr[0] || pr.second == tr[1] || pr.second == tr[2]);
        return (f && s) ? v21 : 0.0;
    };
    return CovModel::rule_based(static_cast<int>(pairs + triples), rule);
}

}  // namespace fclt
