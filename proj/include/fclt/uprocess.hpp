#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fclt/kernels.hpp"
#include "fclt/path.hpp"
#include "fclt/rng.hpp"

namespace fclt {

// Sparse weight array {a_J : J in D_p(n)} over strictly increasing 1-based
// index tuples, with an element -> subset inverted index for the hot paths
// (pair resampling, the triple-intersection sums).
class WeightArray {
  public:
    WeightArray() = default;
    WeightArray(int n, int p) : n_(n), p_(p) {}

    int n() const { return n_; }
    int p() const { return p_; }
    std::size_t count() const { return w_.size(); }

    void add(const std::vector<int>& subset, double weight);
    void add(const int* subset, double weight);
    // Sorts lexicographically, rejects duplicates, builds the inverted index.
    void finalize();
    bool finalized() const { return finalized_; }

    const std::int32_t* subset(std::size_t i) const { return flat_.data() + i * p_; }
    double weight(std::size_t i) const { return w_[i]; }
    const std::vector<double>& weights() const { return w_; }
    // Subset ids containing element l (1-based).
    const std::vector<std::int32_t>& containing(int l) const { return inv_[l]; }

    double abs_total() const { return abs_total_; }

    std::string to_json_string() const;
    static WeightArray from_json_string(const std::string& js);

  private:
    int n_ = 0, p_ = 1;
    std::vector<std::int32_t> flat_;
    std::vector<double> w_;
    std::vector<std::vector<std::int32_t>> inv_;
    double abs_total_ = 0.0;
    bool finalized_ = false;
};

// Lexicographic enumeration of D_p(n); empty when p > n.
void enumerate_subsets(int n, int p, const std::function<void(const std::vector<int>&)>& fn);
std::vector<std::vector<int>> subsets_vector(int n, int p);
std::uint64_t binomial(int n, int k);

// Builtin generators.
WeightArray complete_weights(int n, int p);
WeightArray incomplete_random_weights(int n, int p, double keep_prob, std::uint64_t seed);
WeightArray banded_weights(int n, int p, int band_width);  // max(J)-min(J) < band_width

struct UComponent {
    Kernel psi;
    WeightArray weights;
    double sigma = 1.0;
};

// Vector of weighted degenerate U-processes sharing the sample X_1..X_n.
struct UProcessSpec {
    int d = 0;
    int n = 0;
    BaseMeasure mu;
    std::vector<UComponent> comp;

    // Checks p_1 <= ... <= p_d, sigma > 0 and complete degeneracy of every
    // kernel (exact mode, tol 1e-10). Throws on violation.
    void validate(double degeneracy_tol = 1e-10) const;
};

struct USimResult {
    StepPath path;
    std::vector<double> sample;  // X_1..X_n
};

// Component i at grid m: (1/sigma_i) sum_{J in D_{p_i}(m)} a_J psi(X_j, j in J).
StepPath path_from_sample(const UProcessSpec& spec, const std::vector<double>& sample);
USimResult simulate_Y(const UProcessSpec& spec, Rng& rng);

struct UPairResult {
    StepPath y;
    StepPath yp;
    int replaced_index = 0;  // I, 1-based
    double x0 = 0.0;
};

// Exchangeable pair: I uniform on [n], X_I replaced by a fresh draw; Yp is
// updated incrementally through the inverted index (only subsets containing I).
UPairResult exchangeable_pair(const UProcessSpec& spec, const std::vector<double>& sample,
                              Rng& rng);

// Lambda_n = diag(n/2p_1, ..., n/2p_d).
std::vector<double> lambda_weighted_diag(const UProcessSpec& spec);

// sigma_i = sqrt(E[psi_i^2] * sum_J a_J(i)^2); throws when zero.
std::vector<double> variance_sigma(const std::vector<Kernel>& kernels,
                                   const std::vector<WeightArray>& weights);

// Homogeneous-sum specialization: product kernels over mu with mean 0 and
// variance 1 (validated exactly for finite support, tol 1e-10). Empty sigmas
// select the variance normalization.
UProcessSpec homsum_spec(std::vector<WeightArray> weights, BaseMeasure mu,
                         std::vector<double> sigmas = {});

}  // namespace fclt
