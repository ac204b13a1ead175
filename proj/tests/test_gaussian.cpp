#include <doctest.h>

#include <cmath>

#include "fclt/gaussian.hpp"

using namespace fclt;

TEST_CASE("index_bijection") {
    CHECK(index_bijection(1, {1}, 3, 1, 2) == 1);
    CHECK(index_bijection(2, {3}, 3, 1, 2) == 6);           // (2-1)*3 + 3
    CHECK(index_bijection(1, {2, 3}, 3, 2, 2) == 6);        // (2-1)*3 + 3
    CHECK(index_bijection(1, {1, 1}, 5, 2, 4) == 1);
    CHECK_THROWS_AS(index_bijection(3, {1}, 3, 1, 2), std::out_of_range);
    CHECK_THROWS_AS(index_bijection(1, {4}, 3, 1, 2), std::out_of_range);
    // bijectivity over a small box
    std::vector<int> seen(2 * 9, 0);
    for (int k = 1; k <= 2; ++k)
        for (int i1 = 1; i1 <= 3; ++i1)
            for (int i2 = 1; i2 <= 3; ++i2)
                seen[static_cast<std::size_t>(index_bijection(k, {i1, i2}, 3, 2, 2)) - 1]++;
    for (int c : seen) CHECK(c == 1);
}

TEST_CASE("psd_sqrt basics and round trip") {
    CHECK(frobenius_dist(psd_sqrt(Matrix::identity(3)), Matrix::identity(3)) <= 1e-12);

    Matrix d(2, 2);
    d.at(0, 0) = 4.0;
    d.at(1, 1) = 9.0;
    const Matrix sd = psd_sqrt(d);
    CHECK(sd.at(0, 0) == doctest::Approx(2.0));
    CHECK(sd.at(1, 1) == doctest::Approx(3.0));
    CHECK(sd.at(0, 1) == doctest::Approx(0.0));

    Matrix a(2, 2);
    a.at(0, 0) = 2.0;
    a.at(0, 1) = 1.0;
    a.at(1, 0) = 1.0;
    a.at(1, 1) = 2.0;
    const Matrix s = psd_sqrt(a);
    CHECK(frobenius_dist(matmul(s, s), a) <= 1e-10);

    // rank-deficient is fine
    Matrix r(2, 2);
    r.at(0, 0) = 1.0;
    r.at(0, 1) = 1.0;
    r.at(1, 0) = 1.0;
    r.at(1, 1) = 1.0;
    const Matrix sr = psd_sqrt(r);
    CHECK(frobenius_dist(matmul(sr, sr), r) <= 1e-10);

    // genuinely indefinite must throw
    Matrix neg(2, 2);
    neg.at(0, 0) = 1.0;
    neg.at(1, 1) = -1.0;
    CHECK_THROWS_AS(psd_sqrt(neg), NotPsdError);
}

TEST_CASE("CovModel block structure") {
    Matrix b1(1, 1);
    b1.at(0, 0) = 4.0;
    Matrix b2(2, 2);
    b2.at(0, 0) = 2.0;
    b2.at(0, 1) = 1.0;
    b2.at(1, 0) = 1.0;
    b2.at(1, 1) = 2.0;
    const CovModel cm = CovModel::block_diagonal({b1, b2});
    CHECK(cm.dim() == 3);
    cm.validate();
    const Matrix s = cm.sqrt();
    CHECK(s.at(0, 0) == doctest::Approx(2.0));
    CHECK(s.at(0, 1) == 0.0);
    const Matrix dense = cm.to_dense();
    CHECK(frobenius_dist(matmul(s, s), dense) <= 1e-10);

    const CovModel rb = CovModel::rule_based(3, [](int i, int j) { return i == j ? 2.0 : 0.5; });
    rb.validate();
    CHECK(rb.at(0, 1) == 0.5);
}

TEST_CASE("sample_Z_grid: exact Brownian structure") {
    const int grid = 16;
    const int reps = 20000;

    // phi = I (d=1): standard BM; Var Z(1) = 1
    PathSampler bm = sample_Z_grid(PiecewiseMatrix::constant(Matrix::identity(1)), grid);
    double s = 0.0, sq = 0.0, sh = 0.0, sqh = 0.0;
    for (int r = 0; r < reps; ++r) {
        Rng rng(derive_seed(404, static_cast<std::uint64_t>(r)));
        const StepPath p = bm.draw(rng);
        const double v1 = p.row(grid)[0];
        const double vh = p.row(grid / 2)[0];
        s += v1;
        sq += v1 * v1;
        sh += vh;
        sqh += vh * vh;
    }
    const double var1 = sq / reps - (s / reps) * (s / reps);
    CHECK(std::fabs(var1 - 1.0) <= 4.0 * var1 * std::sqrt(2.0 / reps));

    // phi = diag(2): Var Z(t) = 4t, checked at t = 1/2
    Matrix two = Matrix::identity(1);
    two.at(0, 0) = 2.0;
    PathSampler bm2 = sample_Z_grid(PiecewiseMatrix::constant(two), grid);
    double sq2 = 0.0, s2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        Rng rng(derive_seed(405, static_cast<std::uint64_t>(r)));
        const double v = bm2.draw(rng).row(grid / 2)[0];
        s2 += v;
        sq2 += v * v;
    }
    const double var2 = sq2 / reps - (s2 / reps) * (s2 / reps);
    CHECK(std::fabs(var2 - 2.0) <= 4.0 * var2 * std::sqrt(2.0 / reps));

    // zero phi -> zero path
    PathSampler z0 = sample_Z_grid(PiecewiseMatrix::constant(Matrix(1, 1)), grid);
    Rng rng(1);
    CHECK(sup_norm(z0.draw(rng)) == 0.0);

    // misaligned partition refused
    PiecewiseMatrix bad;
    bad.breaks = {0.3, 1.0};
    bad.mats = {Matrix::identity(1), Matrix::identity(1)};
    CHECK_THROWS(sample_Z_grid(bad, grid));
}

TEST_CASE("prelimit ustat sampler: deterministic seed and zero cases") {
    UProcessSpec spec;
    spec.d = 1;
    spec.n = 8;
    spec.mu = BaseMeasure::rademacher();
    spec.comp.push_back({product_kernel(2, spec.mu), complete_weights(8, 2), 2.0});
    const PathSampler d = build_prelimit_ustat(spec);
    Rng r1(33), r2(33);
    const StepPath a = d.draw(r1);
    const StepPath b = d.draw(r2);
    CHECK(sup_norm(combine(1.0, a, -1.0, b)) == 0.0);
    CHECK(a.row(0)[0] == 0.0);

    // empty weights -> zero process
    UProcessSpec empty;
    empty.d = 1;
    empty.n = 5;
    empty.mu = BaseMeasure::rademacher();
    WeightArray w(5, 2);
    w.finalize();
    empty.comp.push_back({product_kernel(2, empty.mu), std::move(w), 1.0});
    Rng rng(2);
    CHECK(sup_norm(build_prelimit_ustat(empty).draw(rng)) == 0.0);
}

TEST_CASE("prelimit ustat: d=1, p=1 complete weights is a Gaussian walk") {
    UProcessSpec spec;
    spec.d = 1;
    spec.n = 10;
    spec.mu = BaseMeasure::rademacher();
    spec.comp.push_back(
        {product_kernel(1, spec.mu), complete_weights(10, 1), std::sqrt(10.0)});
    const PathSampler d = build_prelimit_ustat(spec);
    const int reps = 20000;
    double s = 0.0, sq = 0.0;
    for (int r = 0; r < reps; ++r) {
        Rng rng(derive_seed(11, static_cast<std::uint64_t>(r)));
        const double v = d.draw(rng).row(10)[0];
        s += v;
        sq += v * v;
    }
    const double var = sq / reps - (s / reps) * (s / reps);
    CHECK(std::fabs(var - 1.0) <= 4.0 * std::sqrt(2.0 / reps));
}

TEST_CASE("every Gaussian recipe is centered at all grid times") {
    std::vector<PathSampler> samplers;
    {
        UProcessSpec spec;
        spec.d = 1;
        spec.n = 8;
        spec.mu = BaseMeasure::rademacher();
        spec.comp.push_back({product_kernel(2, spec.mu), complete_weights(8, 2), 2.0});
        samplers.push_back(build_prelimit_ustat(spec));
        samplers.push_back(sample_Z_grid(PiecewiseMatrix::constant(Matrix::identity(1)), 8));
    }
    const int reps = 4000;
    for (std::size_t sidx = 0; sidx < samplers.size(); ++sidx) {
        const auto& s = samplers[sidx];
        std::vector<double> sum(static_cast<std::size_t>(s.n + 1) * s.d, 0.0);
        std::vector<double> sumsq(sum.size(), 0.0);
        for (int r = 0; r < reps; ++r) {
            Rng rng(derive_seed(4242 + sidx, static_cast<std::uint64_t>(r)));
            const StepPath p = s.draw(rng);
            for (std::size_t i = 0; i < p.values.size(); ++i) {
                sum[i] += p.values[i];
                sumsq[i] += p.values[i] * p.values[i];
            }
        }
        for (std::size_t i = 0; i < sum.size(); ++i) {
            const double mean = sum[i] / reps;
            const double var = std::max(0.0, sumsq[i] / reps - mean * mean);
            CHECK(std::fabs(mean) <= 4.0 * std::sqrt(var / reps) + 1e-12);
        }
    }
}

TEST_CASE("toy general-form sampler") {
    // m=1, d=1, J_i = 1_{[i/n, 1]}: Donsker-style partial-sum approximation of BM
    ToyDnSpec toy;
    toy.d = 1;
    toy.n = 8;
    toy.m = 1;
    toy.indicator.resize(8);
    for (int i = 1; i <= 8; ++i) toy.indicator[static_cast<std::size_t>(i - 1)] = {{i, 9}};
    toy.sigma = CovModel::dense(Matrix::identity(8));
    const PathSampler s = toy_dn_sampler(toy);
    const int reps = 20000;
    double acc = 0.0, accsq = 0.0;
    for (int r = 0; r < reps; ++r) {
        Rng rng(derive_seed(1234, static_cast<std::uint64_t>(r)));
        const double v = s.draw(rng).row(8)[0];
        acc += v;
        accsq += v * v;
    }
    // Var = 8 (sum of 8 unit normals at t=1)
    const double var = accsq / reps - (acc / reps) * (acc / reps);
    CHECK(std::fabs(var - 8.0) <= 4.0 * 8.0 * std::sqrt(2.0 / reps));

    ToyDnSpec too_big;
    too_big.d = 2;
    too_big.n = 50;
    too_big.m = 2;
    CHECK_THROWS(toy_dn_sampler(too_big));
}
