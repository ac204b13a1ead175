#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fclt/rng.hpp"

namespace fclt {

// Discrete probability measure mu with finite support. Masses must be
// positive and sum to 1 within 1e-12.
struct FiniteSupport {
    std::vector<double> atoms;
    std::vector<double> mass;
};

// Sampling-only measure; exact enumeration is unavailable, so callers must
// supply the moment bounds they need.
struct SamplerMeasure {
    std::function<double(Rng&)> draw;
    double mean = 0.0;
    double variance = 1.0;
    double abs3 = 0.0;  // E|X|^3 bound supplied by the user
};

class BaseMeasure {
  public:
    BaseMeasure() = default;
    explicit BaseMeasure(FiniteSupport fs);
    explicit BaseMeasure(SamplerMeasure sm) : sampler_(std::move(sm)), finite_(false) {}

    bool finite() const { return finite_; }
    const FiniteSupport& support() const;

    double draw(Rng& rng) const;

    // Exact moments (finite support only); SamplerMeasure falls back to the
    // user-supplied bounds for mean/variance/abs3.
    double mean() const;
    double variance() const;
    double abs_moment(int r) const;  // E|X|^r
    double moment(int r) const;      // E X^r (finite support only)

    static BaseMeasure rademacher();
    static BaseMeasure bernoulli01(double p);
    // xi - p for xi ~ Bernoulli(p)
    static BaseMeasure centered_bernoulli(double p);
    // (xi - p)/sqrt(p(1-p)): mean 0, variance 1
    static BaseMeasure standardized_bernoulli(double p);

    static BaseMeasure from_json_string(const std::string& js);

  private:
    FiniteSupport fs_;
    std::vector<double> cdf_;
    std::optional<SamplerMeasure> sampler_;
    bool finite_ = true;
};

// Symmetric kernel psi : R^p -> R over a base measure. `f` receives p
// arguments in a contiguous array.
struct Kernel {
    int p = 1;
    std::function<double(const double*)> f;
    BaseMeasure mu;

    double operator()(const double* args) const { return f(args); }
};

Kernel product_kernel(int p, BaseMeasure mu);
// Table kernel over the support of mu: entries are (i1,...,ip, value) with
// 0-based support indices; the table is symmetrized. Missing entries are 0.
Kernel table_kernel(int p, BaseMeasure mu, const std::vector<std::vector<double>>& entries);
Kernel kernel_from_json_string(const std::string& js, BaseMeasure mu);

struct DegeneracyReport {
    bool is_degenerate = false;
    double max_residual = 0.0;
    double se = 0.0;        // MC mode only
    bool exact = true;      // false in MC mode
    bool conclusive = true; // MC mode: false when within 3 SE of tol
};

// Checks complete degeneracy E[psi | X_1..X_{p-1}] = 0 a.s.
// Exact over support^(p-1) for finite measures; MC (R replications of the
// two-fresh-last-arguments product estimator) otherwise.
DegeneracyReport check_degenerate(const Kernel& k, double tol = 1e-10, int mc_reps = 20000,
                                  std::uint64_t seed = 1);

// (E|psi|^r)^(1/r). Exact over support^p when the tuple count is below
// `tuple_cap`, otherwise throws advising MC mode (or runs MC if the measure
// is sampling-only).
double lr_norm(const Kernel& k, int r, std::uint64_t tuple_cap = 10'000'000,
               int mc_reps = 200000, std::uint64_t seed = 2);

// Monte Carlo norm estimate with a delta-method standard error.
struct McNorm {
    double value = 0.0;
    double se = 0.0;
};
McNorm lr_norm_mc(const Kernel& k, int r, int reps, std::uint64_t seed);

// E|psi(X_1..X_p) - psi(X_2..X_{p+1})|^3, the sharp first-term moment; exact
// over support^(p+1) for finite measures.
double overlap_diff_cube_moment(const Kernel& k, std::uint64_t tuple_cap = 10'000'000);

// E[psi_a(X_1..X_q) psi_b(X_1..X_q)] for kernels of equal order over the same
// measure; exact for finite support.
double cross_moment(const Kernel& a, const Kernel& b, std::uint64_t tuple_cap = 10'000'000);

struct HoeffdingResult {
    double mean = 0.0;
    std::vector<Kernel> components;  // components[q-1] has order q, completely degenerate
};

// Hoeffding projection onto completely degenerate components:
//   psi_q(x_1..x_q) = sum_{A subseteq [q]} (-1)^(q-|A|) E[psi(x_A, X_rest)]
// with the reconstruction identity
//   psi(x_1..x_p) = mean + sum_q sum_{K in D_q([p])} psi_q(x_K).
HoeffdingResult hoeffding_decompose(const Kernel& k);

// Spot-check symmetry on random permutations and random support points.
bool check_symmetry(const Kernel& k, int trials = 20, std::uint64_t seed = 3, double tol = 1e-10);

}  // namespace fclt
