#pragma once

#include <map>
#include <string>
#include <vector>

#include "fclt/gaussian.hpp"
#include "fclt/linalg.hpp"
#include "fclt/uprocess.hpp"

namespace fclt {

// Named bound terms with provenance; all bound evaluators report per unit
// test-functional norm (the caller multiplies by a certified ||g|| bound).
struct BoundReport {
    std::string theorem;             // which result the terms instantiate
    std::string norm_unit;           // "M" or "M0"
    std::map<std::string, double> terms;
    double total = 0.0;
    // metadata
    int n = 0, d = 0;
    std::string spec_hash;
    double wall_ms = 0.0;

    std::string to_json_string() const;
};

// sum_{l=1}^n ( sum_{J contains l} |a_J| )^3, exact via the inverted index.
double cubic_weight_sum(const WeightArray& w);

// sum over J in wi, K in wj, L in wk with J cap K != empty and
// L cap (J cup K) != empty of |a_J a_K a_L|; exact.
double triple_intersect_sum(const WeightArray& wi, const WeightArray& wj, const WeightArray& wk);

enum class PreVariant { Sharp, Simple };

// Pre-limiting distance bound for weighted degenerate U-processes.
// Simple variant: term1 = (2 sqrt(d)/3p_1) sum_i ||psi_i||_{L3}^3 / sigma_i^3 * cubic_weight_sum(i).
// Sharp variant replaces 8 E|psi|^3 by the overlapping-argument difference moment.
// term2 = sum_{i,j,k} prod ||psi||_{L3} / prod sigma * triple_intersect_sum.
BoundReport bound_weighted_pre(const UProcessSpec& spec, PreVariant variant = PreVariant::Simple);

// Sigma_n^(m): (n / sigma_i sigma_l) sum_{J: max J = m} a_J(i) a_J(l) E[psi_i psi_l]
// when p_i = p_l, else 0.
Matrix sigma_n_m(const UProcessSpec& spec, int m);

// (delta_n^(i), T_n^(i)).
struct DeltaT {
    double delta = 0.0;
    double t = 0.0;
};
DeltaT delta_T(const UProcessSpec& spec, int i);

// gamma_1..gamma_5 of the continuous-approximation theorem; phi must be
// piecewise constant and aligned to the spec grid. Reports both the
// ||g||_M total (gamma1+..+gamma5) and the ||g||_M0 total (gamma1+gamma2+gamma3).
BoundReport gammas_con(const UProcessSpec& spec, const PiecewiseMatrix& phi);

// phi_n(s) = sum_m (Sigma_n^(m))^{1/2} 1_{((m-1)/n, m/n]}(s), zero before (p_1-1)/n.
PiecewiseMatrix phi_n_of(const UProcessSpec& spec);

// p = 2 homogeneous-sum diagnostics for a symmetric zero-diagonal matrix A.
struct HomsumDiagnostics {
    double rho = 0.0;          // sqrt(max_i sum_{j != i} a_ij^2)
    double gamma = 0.0;        // max_i sum_{j != i} |a_ij|
    double lambda_star = 0.0;  // spectral radius
    double sigma = 0.0;        // sqrt(sum_{i != j} a_ij^2)
    double tr_a4_over_sigma4 = 0.0;
    // (rho/sigma, Gamma/sigma, (Gamma^2/sigma^2) * (sum|a_ij|/sigma))
    std::vector<double> ratio_terms;
    bool degenerate = false;  // sigma == 0
};
HomsumDiagnostics homsum_diagnostics(const Matrix& A);

// T_n * log^2(1/r_n): the weak-convergence transfer criterion product.
double prop_m_criterion(double t_n, double r_n);

// Monte Carlo estimate of E[ ||(Y-Y')Lambda|| * ||Y-Y'||^2 ] / 6 (the
// epsilon_1 functional) for an exchangeable-pair sampler; lambda is d x d.
struct Eps1Estimate {
    double value = 0.0;
    double se = 0.0;
};
Eps1Estimate epsilon1_mc(const UProcessSpec& spec, const Matrix& lambda, int reps,
                         std::uint64_t seed);

std::string spec_hash(const UProcessSpec& spec);

}  // namespace fclt
