#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "fclt/linalg.hpp"
#include "fclt/path.hpp"
#include "fclt/rng.hpp"
#include "fclt/uprocess.hpp"

namespace fclt {

struct NotPsdError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Symmetric PSD square root via eigendecomposition: S = V diag(sqrt(l)) V^T.
// Eigenvalues in [-1e-8*lmax, 0) are clamped to zero; anything below throws
// NotPsdError. Eigendecomposition rather than Cholesky: assembled covariances
// are routinely rank-deficient.
Matrix psd_sqrt(const Matrix& sym);

// Covariance structure holder: dense, block-diagonal, or rule-based over a
// structured index set (materialized on demand). Caches the PSD square root.
class CovModel {
  public:
    static CovModel dense(Matrix sym);
    static CovModel block_diagonal(std::vector<Matrix> blocks);
    static CovModel rule_based(int dim, std::function<double(int, int)> rule);

    int dim() const { return dim_; }
    double at(int i, int j) const;
    bool is_block_diagonal() const { return !blocks_.empty(); }
    const std::vector<Matrix>& blocks() const { return blocks_; }
    Matrix to_dense() const;

    // Checks symmetry within 1e-10 and PSD within clamping tolerance; throws.
    void validate() const;

    // PSD square root, cached; block structure is preserved (the square root
    // of a block-diagonal matrix is block-diagonal).
    const Matrix& sqrt() const;

  private:
    int dim_ = 0;
    mutable Matrix dense_;
    std::vector<Matrix> blocks_;
    std::function<double(int, int)> rule_;
    mutable bool materialized_ = false;
    mutable std::shared_ptr<Matrix> sqrt_;

    void materialize() const;
};

// I(k, i_1..i_m) = (k-1)n^m + (i_1-1)n^{m-1} + ... + i_m, 1-based.
long long index_bijection(int k, const std::vector<int>& idx, int n, int m, int d);

// Generic path sampler handle shared by the Monte Carlo harness.
struct PathSampler {
    int d = 0;
    int n = 0;
    std::function<StepPath(Rng&)> draw;
};

// Pre-limiting Gaussian process for a U-process spec: jointly Gaussian
// {Z_J(i)} with Cov(Z_J(i), Z_K(l)) = E[psi_i psi_l] 1{p_i=p_l, J=K}; the
// sampler draws one correlated Gaussian block per subset.
PathSampler build_prelimit_ustat(const UProcessSpec& spec);

// Piecewise-constant d x d matrix function on [0,1]: value mats[c] on
// (breaks[c-1], breaks[c]] with breaks ascending and ending at 1.
struct PiecewiseMatrix {
    std::vector<double> breaks;
    std::vector<Matrix> mats;

    int dim() const { return mats.empty() ? 0 : mats.front().rows; }
    const Matrix& value_at(double s) const;
    static PiecewiseMatrix constant(Matrix m);
};

// Z(t) = int_0^t phi(s) dW(s) sampled exactly on the grid via Gaussian
// increments; phi's breakpoints must align with the grid (else throws).
PathSampler sample_Z_grid(const PiecewiseMatrix& phi, int grid_n);

// General toy-scale target process: sum over (k, i_1..i_m) of
// Z~_{k,i} * 1_{A_{k,i}}(t) with Z~ = Sigma^{1/2} xi. Index budget
// d*n^m <= 4096.
struct ToyDnSpec {
    int d = 1, n = 1, m = 1;
    // per flat index I (1-based, see index_bijection): indicator support as
    // half-open grid-interval unions [a, b) in grid units, 0 <= a < b <= n+1
    std::vector<std::vector<std::pair<int, int>>> indicator;
    CovModel sigma = CovModel::dense(Matrix::identity(1));
};
PathSampler toy_dn_sampler(const ToyDnSpec& spec);

// Covariance export.
void write_matrix_csv(const Matrix& m, const std::string& file);

}  // namespace fclt
