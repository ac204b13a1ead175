#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fclt/gaussian.hpp"
#include "fclt/linalg.hpp"
#include "fclt/path.hpp"

namespace fclt {

// Certified test functional g(w) = a cos( sum_j <w(t_j), theta_j> ) with
// ||g||_{M0} <= a (1 + S + S^2 + S^3), S = sum_j |theta_j|. The default
// construction normalizes a so the certified bound equals 1.
struct TestFunctional {
    std::vector<double> times;  // k entries in [0,1]
    Matrix thetas;              // k x d
    double amplitude = 1.0;
    double theta_abs_sum = 0.0;  // S
    double certified_norm = 1.0;

    double operator()(const StepPath& w) const;
};

TestFunctional make_test_functional(const std::vector<double>& times, const Matrix& thetas);
// A reproducible family of unit-norm functionals for dominance studies.
std::vector<TestFunctional> default_functionals(int d, int count, std::uint64_t seed);

// Deterministic replication driver: calls fn(rep, rng) for rep = 0..reps-1
// with rng seeded from derive_seed(master_seed, rep). Results must be written
// to per-rep slots; the outcome is independent of the thread count.
void parallel_replicate(int reps, std::uint64_t master_seed, int threads,
                        const std::function<void(int, Rng&)>& fn);

struct DistanceEstimate {
    double estimate = 0.0;  // |mean_a - mean_b|
    double se = 0.0;        // sqrt(se_a^2 + se_b^2)
    double mean_a = 0.0, mean_b = 0.0;
    double se_a = 0.0, se_b = 0.0;
    int reps = 0;
};

// |E g(A) - E g(B)| with independent derived streams per sampler; reps >= 2.
// `coupled` re-uses one stream for both samplers (common random numbers);
// variance reduction, off by default.
DistanceEstimate estimate_distance(const PathSampler& a, const PathSampler& b,
                                   const TestFunctional& g, int reps, std::uint64_t master_seed,
                                   int threads = 1, bool coupled = false);

struct CovEstimate {
    std::vector<double> mean;  // k*d marginal means
    Matrix cov;                // (k*d) x (k*d) sample covariance
    Matrix se;                 // jackknife standard errors, entrywise
};

// Sample covariance of (w(t_1), ..., w(t_k)) flattened to k*d coordinates,
// with delete-one jackknife SEs; reps >= 3.
CovEstimate empirical_covariance(const PathSampler& sampler, const std::vector<double>& times,
                                 int reps, std::uint64_t master_seed, int threads = 1);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

// OLS of log(values) against log(ns); requires positive values, increasing ns,
// length >= 3.
RateFit rate_fit(const std::vector<double>& ns, const std::vector<double>& values);

struct DominanceResult {
    double estimate = 0.0;
    double se = 0.0;
    double bound = 0.0;
    bool dominated = false;  // estimate <= bound + 4 se
};

DominanceResult dominance_check(const PathSampler& a, const PathSampler& b,
                                const TestFunctional& g, double bound, int reps,
                                std::uint64_t master_seed, int threads = 1);

}  // namespace fclt
