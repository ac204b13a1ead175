#pragma once

#include <cstdint>
#include <vector>

#include "fclt/gaussian.hpp"
#include "fclt/linalg.hpp"
#include "fclt/path.hpp"
#include "fclt/rng.hpp"

namespace fclt {

struct GraphSpec {
    int n = 4;
    double p = 0.5;
    void validate() const;
};

// Undirected edge indicators on [n], upper triangle.
class EdgeSet {
  public:
    EdgeSet() = default;
    explicit EdgeSet(int n) : n_(n), bits_(static_cast<std::size_t>(n) * (n - 1) / 2, 0) {}
    int n() const { return n_; }
    bool get(int i, int j) const { return bits_[index(i, j)] != 0; }
    void set(int i, int j, bool v) { bits_[index(i, j)] = v ? 1 : 0; }
    std::size_t pair_count() const { return bits_.size(); }

  private:
    std::size_t index(int i, int j) const {
        if (i > j) std::swap(i, j);
        return static_cast<std::size_t>(j - 2) * (j - 1) / 2 + static_cast<std::size_t>(i - 1);
    }
    int n_ = 0;
    std::vector<std::uint8_t> bits_;
};

struct GraphSim {
    StepPath y;  // d = 2: centered edge and two-star components
    EdgeSet edges;
};

// Component 1 at grid m: ((m-2)/n^2) sum_{i<j<=m} I_ij - E; component 2:
// (1/n^2) * (two-star count among [m]) - E. Incremental in m via vertex
// degrees, O(n^2) per draw.
GraphSim simulate_graph(const GraphSpec& spec, Rng& rng);
StepPath graph_path_from_edges(const GraphSpec& spec, const EdgeSet& edges);

struct GraphMoments {
    double et = 0.0;
    double ev = 0.0;
    Matrix cov;  // 2x2
};
// E T(t) = ((M-2)/n^2) C(M,2) p, E V(t) = (3/n^2) C(M,3) p^2, M = floor(nt),
// and the closed-form covariance with factor 3 C(M,3) p(1-p)/n^4.
GraphMoments graph_moments(const GraphSpec& spec, double t);

struct GraphPair {
    StepPath y;
    StepPath yp;
    int vi = 0, vj = 0;  // resampled pair, vi < vj
    bool old_value = false, new_value = false;
};
// Exchangeable pair: one uniformly chosen pair's indicator replaced by an
// independent copy; only grid points >= max(vi,vj) change.
GraphPair graph_pair(const GraphSpec& spec, const EdgeSet& edges, Rng& rng);

// Lambda_n = (n(n-1)/8) [[2, 2p], [0, 1]].
Matrix graph_lambda(const GraphSpec& spec);

struct GraphRegressionResidual {
    double res_a = 0.0;  // sup_t | (n(n-1)/2) E[T-T'|edges](t) - (T-ET)(t) |
    double res_b = 0.0;  // sup_t | (n(n-1)/4) E[2p(T-T')+(V-V')|edges](t) - (V-EV)(t) |
};
// Exact conditional expectation over all C(n,2) pair choices and both
// resample values; lambda_scale != 1 perturbs Lambda_n as a negative control.
GraphRegressionResidual graph_regression_residual(const GraphSpec& spec, const EdgeSet& edges,
                                                  double lambda_scale = 1.0, int max_n = 64);

// Pre-limiting Gaussian process D_n through the three-Brownian-motion
// representation (exact in law at grid points, O(n) per draw).
PathSampler graph_prelimit_sampler(const GraphSpec& spec);

// Continuous limit Z with components assembled from B_1(t^2), B_2(t^2).
PathSampler graph_limit_sampler(double p, int grid);

struct GraphBoundValues {
    double pre = 0.0;  // 23/n
    double con = 0.0;  // 16422 sqrt(log n)/sqrt(n) + 138/sqrt(n)
};
GraphBoundValues graph_bounds(int n);

// Closed-form Cov(D_n^(a)(t), D_n^(b)(u)) (components 1-based).
double graph_cov_D(const GraphSpec& spec, int a, double t, int b, double u);
// Closed-form limit Cov(Z^(a)(t), Z^(b)(u)).
double graph_cov_Z(double p, int a, double t, int b, double u);

// Full covariance of the summand collection {Z^(1)_ij} u {Z^(2)_ijk}
// (dimension C(n,2) + C(n,3)); rule-based.
CovModel graph_cov_table(const GraphSpec& spec);

}  // namespace fclt
