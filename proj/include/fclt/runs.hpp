#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fclt/bounds.hpp"
#include "fclt/gaussian.hpp"
#include "fclt/path.hpp"
#include "fclt/rng.hpp"
#include "fclt/uprocess.hpp"

namespace fclt {

// r-runs on the line with the torus convention xi_{n+k} = xi_k.
struct RunsSpec {
    int n = 0;
    double p = 0.5;
    std::vector<int> rs;  // r_1 >= r_2 >= ... >= r_d >= 1, r_1 < n/2

    int d() const { return static_cast<int>(rs.size()); }
    // sigma_n(r) = sqrt(n p^r (1-p))
    double sigma(int i) const;
    void validate() const;
};

std::vector<std::uint8_t> runs_draw_bits(const RunsSpec& spec, Rng& rng);
// Component i at grid m: (1/sigma(r_i)) sum_{k<=m} (xi_k...xi_{k+r_i-1} - p^{r_i}).
StepPath runs_path_from_bits(const RunsSpec& spec, const std::vector<std::uint8_t>& xi);
StepPath simulate_runs(const RunsSpec& spec, Rng& rng);

// Static torus weight a_J(r): window count through the circle,
//   p^{r-|J|} [ (r - max(J) + min(J))^+ +
//               (r + min(J cap (n/2,n]) - max(J cap [1,n/2)) - n)^+ 1{J meets both arcs} ].
double runs_weight(const std::vector<int>& J, int r, int n, double p);

// Decomposition into weighted homogeneous sums over the standardized
// variables (xi - p)/sqrt(p(1-p)); component (i,j) carries the scaled weights
// a_J(r_i) (p(1-p))^{j/2}. Components are ordered by (j, i), which makes
// Sigma_n^(m) block-diagonal with blocks indexed by q = j.
struct RunsDecomposition {
    UProcessSpec uspec;
    std::vector<std::pair<int, int>> component_map;  // uspec component -> (i, j), 1-based
};
RunsDecomposition runs_decompose(const RunsSpec& spec);

// Pre-limiting Gaussian process: each distinct monomial subset K gets one
// standard normal Z_K shared across windows and components, so Cov(D_n)
// equals Cov(V_n) exactly.
PathSampler runs_prelimit_sampler(const RunsSpec& spec);

// Path reconstruction through the decomposition layers (exact; the binomial
// expansion per window summed over windows <= floor(nt)).
StepPath runs_reconstruct(const RunsSpec& spec, const std::vector<std::uint8_t>& xi);

// Limit covariance: block diagonal Sigma with blocks Sigma(q), q = 1..r_1,
// where N(q) = #{ j : r_j >= q } and
//   Sigma(q)(i,l) = p^{(r_i+r_l)/2 - q} (1-p)^{q-1}
//                   sum_{k=q-1}^{r_i^r_l-1} C(k-1, q-2) (r_i-k)(r_l-k)
// (C(-1,-1) = 1 so the q = 1 block is r_i r_l p^{(r_i+r_l)/2-1}). These match
// the covariance of the decomposed process assembled via sigma_n_m at
// interior m.
struct RunsSigma {
    std::vector<Matrix> blocks;  // blocks[q-1] is N(q) x N(q)
    std::vector<int> nq;         // N(q), q = 1..r_1
};
RunsSigma runs_sigma_blocks(const RunsSpec& spec);
CovModel runs_sigma_covmodel(const RunsSpec& spec);

// Pre-limiting bound (gamma_1 + gamma_2) n^{-1/2} per unit ||g||_{M0}.
BoundReport runs_bound_pre(const RunsSpec& spec);
// Continuous bound n^{-1/2} (gamma_1 + gamma_2 + gamma_3 sqrt(log n)).
BoundReport runs_bound_con(const RunsSpec& spec);

// Limit process: Z' = Sigma^{1/2} W with W a (sum r_i)-dimensional standard
// BM; component i sums coordinates N(1)+...+N(q-1)+i for q = 1..r_i and is
// evaluated at ((t + (r_i-1)/n) ^ 1).
PathSampler runs_limit_sampler(const RunsSpec& spec, int grid);

}  // namespace fclt
