#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fclt/bounds.hpp"

using namespace fclt;

namespace {

// Exhaustive oracles, deliberately independent of the inverted-index code.
double cubic_sum_oracle(const WeightArray& w) {
    double total = 0.0;
    for (int l = 1; l <= w.n(); ++l) {
        double s = 0.0;
        for (std::size_t k = 0; k < w.count(); ++k) {
            const std::int32_t* J = w.subset(k);
            for (int i = 0; i < w.p(); ++i)
                if (J[i] == l) {
                    s += std::fabs(w.weight(k));
                    break;
                }
        }
        total += s * s * s;
    }
    return total;
}

bool intersects(const std::int32_t* a, int pa, const std::int32_t* b, int pb) {
    for (int i = 0; i < pa; ++i)
        for (int j = 0; j < pb; ++j)
            if (a[i] == b[j]) return true;
    return false;
}

double triple_sum_oracle(const WeightArray& wi, const WeightArray& wj, const WeightArray& wk) {
    double total = 0.0;
    for (std::size_t a = 0; a < wi.count(); ++a)
        for (std::size_t b = 0; b < wj.count(); ++b) {
            if (!intersects(wi.subset(a), wi.p(), wj.subset(b), wj.p())) continue;
            for (std::size_t c = 0; c < wk.count(); ++c) {
                const bool hit = intersects(wk.subset(c), wk.p(), wi.subset(a), wi.p()) ||
                                 intersects(wk.subset(c), wk.p(), wj.subset(b), wj.p());
                if (hit)
                    total += std::fabs(wi.weight(a) * wj.weight(b) * wk.weight(c));
            }
        }
    return total;
}

WeightArray random_sparse(int n, int p, double keep, double scale, std::uint64_t seed) {
    Rng rng(seed);
    WeightArray w(n, p);
    enumerate_subsets(n, p, [&](const std::vector<int>& s) {
        if (rng.bernoulli(keep)) w.add(s, scale * (rng.uniform01() * 2.0 - 1.0));
    });
    w.finalize();
    return w;
}

}  // namespace

TEST_CASE("cubic_weight_sum examples") {
    CHECK(cubic_weight_sum(complete_weights(3, 2)) == doctest::Approx(24.0));

    WeightArray zero(5, 2);
    zero.finalize();
    CHECK(cubic_weight_sum(zero) == 0.0);

    WeightArray single(3, 2);
    single.add({1, 2}, 2.0);
    single.finalize();
    CHECK(cubic_weight_sum(single) == doctest::Approx(16.0));
}

TEST_CASE("triple_intersect_sum examples") {
    const auto c32 = complete_weights(3, 2);
    CHECK(triple_intersect_sum(c32, c32, c32) == doctest::Approx(27.0));

    WeightArray zero(3, 2);
    zero.finalize();
    CHECK(triple_intersect_sum(c32, c32, zero) == 0.0);
    CHECK(triple_intersect_sum(zero, c32, c32) == 0.0);

    WeightArray single(4, 2);
    single.add({1, 2}, 1.0);
    single.finalize();
    const auto c42 = complete_weights(4, 2);
    CHECK(triple_intersect_sum(single, single, c42) == doctest::Approx(5.0));

    CHECK_THROWS(triple_intersect_sum(single, c32, c42));  // mismatched n
}

TEST_CASE("combinatorial sums equal exhaustive enumeration on random sparse arrays") {
    for (int inst = 0; inst < 20; ++inst) {
        Rng rng(derive_seed(888, static_cast<std::uint64_t>(inst)));
        const int n = 4 + static_cast<int>(rng.below(7));   // <= 10
        const int pi = 1 + static_cast<int>(rng.below(3));  // <= 3
        const int pj = 1 + static_cast<int>(rng.below(3));
        const int pk = 1 + static_cast<int>(rng.below(3));
        const auto wi = random_sparse(n, pi, 0.6, 2.0, derive_seed(1, inst));
        const auto wj = random_sparse(n, pj, 0.6, 1.5, derive_seed(2, inst));
        const auto wk = random_sparse(n, pk, 0.6, 1.0, derive_seed(3, inst));

        const double c = cubic_weight_sum(wi);
        const double c_oracle = cubic_sum_oracle(wi);
        CHECK(std::fabs(c - c_oracle) <= 1e-9 * std::max(1.0, std::fabs(c_oracle)));

        const double t = triple_intersect_sum(wi, wj, wk);
        const double t_oracle = triple_sum_oracle(wi, wj, wk);
        CHECK(std::fabs(t - t_oracle) <= 1e-9 * std::max(1.0, std::fabs(t_oracle)));
    }
}

TEST_CASE("adding a weight never decreases either sum") {
    Rng rng(99);
    const auto base = random_sparse(8, 2, 0.4, 1.0, 5);
    // rebuild with one extra subset
    WeightArray bigger(8, 2);
    bool added = false;
    std::vector<std::vector<int>> have;
    for (std::size_t k = 0; k < base.count(); ++k) {
        have.push_back({base.subset(k)[0], base.subset(k)[1]});
        bigger.add(have.back(), base.weight(k));
    }
    enumerate_subsets(8, 2, [&](const std::vector<int>& s) {
        if (!added && std::find(have.begin(), have.end(), s) == have.end()) {
            bigger.add(s, 1.7);
            added = true;
        }
    });
    REQUIRE(added);
    bigger.finalize();
    CHECK(cubic_weight_sum(bigger) >= cubic_weight_sum(base) - 1e-12);
    CHECK(triple_intersect_sum(bigger, base, base) >=
          triple_intersect_sum(base, base, base) - 1e-12);
}

namespace {

UProcessSpec homsum_complete(int n, std::vector<int> orders, std::vector<double> sigmas = {}) {
    std::vector<WeightArray> ws;
    for (int p : orders) ws.push_back(complete_weights(n, p));
    return homsum_spec(std::move(ws), BaseMeasure::rademacher(), std::move(sigmas));
}

}  // namespace

TEST_CASE("bound_weighted_pre worked example") {
    // d=1 homogeneous sums, Rademacher, complete weights, n=4, p=1, sigma=2:
    // term1 = (2/3) * (1/8) * 4 = 1/3
    auto spec = homsum_complete(4, {1}, {2.0});
    const auto rep = bound_weighted_pre(spec, PreVariant::Simple);
    CHECK(rep.terms.at("term1_pre") == doctest::Approx(1.0 / 3.0));
    CHECK(rep.total >= rep.terms.at("term1_pre"));
    CHECK(rep.norm_unit == "M");

    // all-zero weights -> total 0
    UProcessSpec zero;
    zero.d = 1;
    zero.n = 4;
    zero.mu = BaseMeasure::rademacher();
    WeightArray w(4, 1);
    w.finalize();
    zero.comp.push_back({product_kernel(1, zero.mu), std::move(w), 1.0});
    CHECK(bound_weighted_pre(zero).total == 0.0);
}

TEST_CASE("sharp variant never exceeds simple variant") {
    for (int inst = 0; inst < 8; ++inst) {
        Rng rng(derive_seed(313, static_cast<std::uint64_t>(inst)));
        const int n = 5 + static_cast<int>(rng.below(4));
        std::vector<WeightArray> ws;
        ws.push_back(random_sparse(n, 1 + static_cast<int>(rng.below(2)), 0.7, 1.0,
                                   derive_seed(1, inst)));
        auto spec = homsum_spec(std::move(ws), BaseMeasure::rademacher(), {1.0});
        const double sharp = bound_weighted_pre(spec, PreVariant::Sharp).total;
        const double simple = bound_weighted_pre(spec, PreVariant::Simple).total;
        CHECK(sharp <= simple + 1e-12);
    }
}

TEST_CASE("sigma_n_m closed cases") {
    // d=1, p=1, a=1, sigma=sqrt(n), E psi^2 = 1 -> Sigma_n^(m) = [1] for m >= 1
    auto spec = homsum_complete(6, {1});
    for (int m = 1; m <= 6; ++m) CHECK(sigma_n_m(spec, m).at(0, 0) == doctest::Approx(1.0));
    CHECK(sigma_n_m(spec, 0).at(0, 0) == 0.0);

    // m below every order -> zero matrix
    auto spec2 = homsum_complete(6, {2});
    CHECK(sigma_n_m(spec2, 1).at(0, 0) == 0.0);

    // off-diagonal zero when p_i != p_l
    auto spec3 = homsum_complete(6, {1, 2});
    for (int m = 1; m <= 6; ++m) {
        const Matrix s = sigma_n_m(spec3, m);
        CHECK(s.at(0, 1) == 0.0);
        CHECK(s.at(1, 0) == 0.0);
    }
}

TEST_CASE("delta_T closed cases") {
    auto spec = homsum_complete(8, {1});
    const auto [delta, t] = delta_T(spec, 0);
    CHECK(delta == doctest::Approx(1.0 / 8.0));
    CHECK(t == doctest::Approx(1.0));

    UProcessSpec zero;
    zero.d = 1;
    zero.n = 4;
    zero.mu = BaseMeasure::rademacher();
    WeightArray w(4, 1);
    w.finalize();
    zero.comp.push_back({product_kernel(1, zero.mu), std::move(w), 1.0});
    const auto [dz, tz] = delta_T(zero, 0);
    CHECK(dz == 0.0);
    CHECK(tz == 0.0);

    // structural: delta <= T on random instances
    for (int inst = 0; inst < 6; ++inst) {
        std::vector<WeightArray> ws;
        ws.push_back(random_sparse(7, 2, 0.6, 1.0, derive_seed(4, inst)));
        auto s = homsum_spec(std::move(ws), BaseMeasure::rademacher(), {1.0});
        const auto [d2, t2] = delta_T(s, 0);
        CHECK(d2 <= t2 + 1e-15);
    }
}

TEST_CASE("gammas_con: phi = phi_n reference case") {
    // d=1, p=1 complete weights: phi_n = [1] identically; with phi = phi_n the
    // phi-difference terms vanish and gamma3 = 12 sqrt((1/n) log 2n)
    const int n = 10;
    auto spec = homsum_complete(n, {1});
    const auto phin = phi_n_of(spec);
    const auto rep = gammas_con(spec, phin);
    CHECK(rep.terms.at("int_frob_diff") == doctest::Approx(0.0));
    CHECK(rep.terms.at("gamma3") ==
          doctest::Approx(12.0 * std::sqrt(std::log(2.0 * n) / n)));
    CHECK(rep.terms.at("total_m0") ==
          doctest::Approx(rep.terms.at("gamma1") + rep.terms.at("gamma2") + rep.terms.at("gamma3")));

    // int ||phi_n - 0||_F^2 = 1 for the same spec
    PiecewiseMatrix zero_phi = PiecewiseMatrix::constant(Matrix(1, 1));
    const auto rep0 = gammas_con(spec, zero_phi);
    CHECK(rep0.terms.at("int_frob_diff") == doctest::Approx(1.0));

    // perturbing phi away from phi_n can only increase the phi-difference terms
    Matrix bump(1, 1);
    bump.at(0, 0) = 1.3;
    const auto repb = gammas_con(spec, PiecewiseMatrix::constant(bump));
    CHECK(repb.total >= rep.total - 1e-12);

    // misaligned partition is refused
    PiecewiseMatrix bad;
    bad.breaks = {0.37, 1.0};
    bad.mats = {Matrix::identity(1), Matrix::identity(1)};
    CHECK_THROWS(gammas_con(spec, bad));
}

TEST_CASE("gammas_con: delta = 0 edge case") {
    UProcessSpec zero;
    zero.d = 1;
    zero.n = 4;
    zero.mu = BaseMeasure::rademacher();
    WeightArray w(4, 1);
    w.finalize();
    zero.comp.push_back({product_kernel(1, zero.mu), std::move(w), 1.0});
    const auto rep = gammas_con(zero, phi_n_of(zero));
    CHECK(rep.terms.at("gamma3") == 0.0);
    CHECK(rep.terms.at("gamma4") == 0.0);
    CHECK(rep.terms.at("gamma5") == 0.0);
}

TEST_CASE("homsum_diagnostics") {
    // single edge a_12 = a_21 = 1
    Matrix a(3, 3);
    a.at(0, 1) = 1.0;
    a.at(1, 0) = 1.0;
    const auto d = homsum_diagnostics(a);
    CHECK(d.rho == doctest::Approx(1.0));
    CHECK(d.gamma == doctest::Approx(1.0));
    CHECK(d.lambda_star == doctest::Approx(1.0));
    CHECK(d.sigma == doctest::Approx(std::sqrt(2.0)));

    // zero matrix flagged degenerate
    const auto z = homsum_diagnostics(Matrix(3, 3));
    CHECK(z.degenerate);

    // rho <= lambda* <= Gamma on random symmetric matrices
    Rng rng(77);
    for (int inst = 0; inst < 10; ++inst) {
        const int n = 3 + static_cast<int>(rng.below(5));
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const double v = rng.normal();
                m.at(i, j) = v;
                m.at(j, i) = v;
            }
        const auto diag = homsum_diagnostics(m);
        CHECK(diag.rho <= diag.lambda_star + 1e-9);
        CHECK(diag.lambda_star <= diag.gamma + 1e-9);
        CHECK(diag.tr_a4_over_sigma4 >= 0.0);
    }

    Matrix bad(2, 2);
    bad.at(0, 0) = 1.0;
    CHECK_THROWS(homsum_diagnostics(bad));
}

TEST_CASE("prop_m_criterion") {
    CHECK(prop_m_criterion(0.1, 0.01) == doctest::Approx(0.1 * std::log(100.0) * std::log(100.0)));
    CHECK(prop_m_criterion(0.0, 0.5) == 0.0);
    CHECK(prop_m_criterion(3.0, 1.0) == 0.0);
    CHECK_THROWS_AS(prop_m_criterion(1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(prop_m_criterion(1.0, -0.5), std::domain_error);
}

TEST_CASE("epsilon1_mc smoke") {
    auto spec = homsum_complete(8, {1});
    Matrix lambda = Matrix::identity(1);
    lambda.at(0, 0) = 8.0 / 2.0;
    const auto e1 = epsilon1_mc(spec, lambda, 500, 4242);
    CHECK(e1.value > 0.0);
    CHECK(e1.se > 0.0);
    const auto e2 = epsilon1_mc(spec, lambda, 500, 4242);
    CHECK(e1.value == e2.value);  // deterministic given the seed
}

TEST_CASE("empirical epsilon_1 sits below the first pre-limit term") {
    // the first bound term dominates E[||(Y-Y')Lambda|| ||Y-Y'||^2]/6
    for (int n : {10, 16}) {
        auto spec = homsum_complete(n, {1, 2});
        std::vector<double> ld = lambda_weighted_diag(spec);
        Matrix lambda(2, 2);
        lambda.at(0, 0) = ld[0];
        lambda.at(1, 1) = ld[1];
        const auto e1 = epsilon1_mc(spec, lambda, 4000, 991);
        const double term1 = bound_weighted_pre(spec).terms.at("term1_pre");
        CHECK(e1.value <= term1 + 3.0 * e1.se);
    }
}
