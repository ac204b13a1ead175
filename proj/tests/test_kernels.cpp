#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "fclt/kernels.hpp"
#include "fclt/uprocess.hpp"

using namespace fclt;

TEST_CASE("measure validation") {
    CHECK_THROWS(BaseMeasure(FiniteSupport{{1.0, 2.0}, {0.5, 0.6}}));  // masses exceed 1
    CHECK_THROWS(BaseMeasure(FiniteSupport{{1.0}, {-1.0}}));
    const auto m = BaseMeasure::rademacher();
    CHECK(m.mean() == 0.0);
    CHECK(m.variance() == 1.0);
    CHECK(m.abs_moment(3) == 1.0);
}

TEST_CASE("standardized bernoulli moments") {
    const double p = 0.3;
    const auto m = BaseMeasure::standardized_bernoulli(p);
    CHECK(m.mean() == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(m.variance() == doctest::Approx(1.0));
    const double s0 = std::sqrt(p * (1 - p));
    const double expected = p * (1 - p) * ((1 - p) * (1 - p) + p * p) / (s0 * s0 * s0);
    CHECK(m.abs_moment(3) == doctest::Approx(expected));
}

TEST_CASE("check_degenerate exact mode") {
    // product kernel with centered two-point measure: degenerate
    const auto rad = BaseMeasure::rademacher();
    for (int p = 1; p <= 3; ++p) {
        const auto rep = check_degenerate(product_kernel(p, rad));
        CHECK(rep.is_degenerate);
        CHECK(rep.max_residual == doctest::Approx(0.0));
    }

    // psi(x,y) = xy over {0,1} with mass 1/2: residual max_x |x * 0.5| = 0.5
    const auto b = BaseMeasure::bernoulli01(0.5);
    const auto rep = check_degenerate(product_kernel(2, b));
    CHECK_FALSE(rep.is_degenerate);
    CHECK(rep.max_residual == doctest::Approx(0.5));

    // constant-zero kernel
    Kernel zero;
    zero.p = 2;
    zero.mu = b;
    zero.f = [](const double*) { return 0.0; };
    CHECK(check_degenerate(zero).is_degenerate);
}

TEST_CASE("lr_norm") {
    const auto rad = BaseMeasure::rademacher();
    for (int p = 1; p <= 3; ++p) CHECK(lr_norm(product_kernel(p, rad), 3) == doctest::Approx(1.0));

    // psi(x) = x over centered Bernoulli(1/2): values +-1/2 -> (E|x|^3)^{1/3} = 1/2
    const auto cb = BaseMeasure::centered_bernoulli(0.5);
    CHECK(lr_norm(product_kernel(1, cb), 3) == doctest::Approx(0.5));

    Kernel zero;
    zero.p = 2;
    zero.mu = rad;
    zero.f = [](const double*) { return 0.0; };
    CHECK(lr_norm(zero, 2) == 0.0);
    CHECK(lr_norm(zero, 3) == 0.0);
}

TEST_CASE("lr_norm monotone in r on random finite-support kernels") {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        FiniteSupport fs;
        const int s = 2 + static_cast<int>(rng.below(3));
        double total = 0.0;
        for (int i = 0; i < s; ++i) {
            fs.atoms.push_back(rng.normal());
            const double m = 0.1 + rng.uniform01();
            fs.mass.push_back(m);
            total += m;
        }
        for (auto& m : fs.mass) m /= total;
        fs.mass.back() += 1.0 - std::accumulate(fs.mass.begin(), fs.mass.end(), 0.0);
        BaseMeasure mu{fs};
        const auto k = product_kernel(2, mu);
        CHECK(lr_norm(k, 2) <= lr_norm(k, 3) + 1e-12);
    }
}

TEST_CASE("hoeffding decomposition: order 1 centering") {
    const auto b = BaseMeasure::bernoulli01(0.3);
    const auto res = hoeffding_decompose(product_kernel(1, b));
    CHECK(res.mean == doctest::Approx(0.3));
    const double x = 1.0;
    CHECK(res.components[0].f(&x) == doctest::Approx(0.7));
}

TEST_CASE("hoeffding decomposition: p=2 product over {0,1}") {
    const auto b = BaseMeasure::bernoulli01(0.5);
    const auto res = hoeffding_decompose(product_kernel(2, b));
    CHECK(res.mean == doctest::Approx(0.25));
    // psi_1(x) = (x - 1/2)/2
    for (double x : {0.0, 1.0}) {
        CHECK(res.components[0].f(&x) == doctest::Approx((x - 0.5) / 2.0));
    }
    // psi_2(x,y) = (x-1/2)(y-1/2)
    for (double x : {0.0, 1.0})
        for (double y : {0.0, 1.0}) {
            const double args[2] = {x, y};
            CHECK(res.components[1].f(args) == doctest::Approx((x - 0.5) * (y - 0.5)));
        }
}

TEST_CASE("hoeffding components are degenerate and reconstruct the kernel") {
    Rng rng(23);
    for (int trial = 0; trial < 6; ++trial) {
        const int support = 2 + static_cast<int>(rng.below(3));  // <= 4
        const int p = 1 + static_cast<int>(rng.below(3));        // <= 3
        FiniteSupport fs;
        double total = 0.0;
        for (int i = 0; i < support; ++i) {
            fs.atoms.push_back(rng.normal());
            const double m = 0.2 + rng.uniform01();
            fs.mass.push_back(m);
            total += m;
        }
        for (auto& m : fs.mass) m /= total;
        fs.mass.back() += 1.0 - std::accumulate(fs.mass.begin(), fs.mass.end(), 0.0);
        BaseMeasure mu{fs};

        // random symmetric table kernel
        std::vector<std::vector<double>> entries;
        std::vector<int> idx(static_cast<std::size_t>(p), 0);
        while (true) {
            bool sorted = true;
            for (int i = 1; i < p; ++i) sorted = sorted && idx[i - 1] <= idx[i];
            if (sorted) {
                std::vector<double> e;
                for (int i = 0; i < p; ++i) e.push_back(idx[i]);
                e.push_back(rng.normal());
                entries.push_back(e);
            }
            int pos = p - 1;
            while (pos >= 0 && ++idx[pos] == support) idx[pos--] = 0;
            if (pos < 0) break;
        }
        const Kernel k = table_kernel(p, mu, entries);
        const auto res = hoeffding_decompose(k);

        for (const auto& comp : res.components) {
            const auto rep = check_degenerate(comp, 1e-10);
            CHECK(rep.is_degenerate);
        }

        // reconstruction identity on every support tuple
        std::vector<int> tup(static_cast<std::size_t>(p), 0);
        std::vector<double> args(static_cast<std::size_t>(p));
        while (true) {
            for (int i = 0; i < p; ++i) args[i] = fs.atoms[tup[i]];
            double recon = res.mean;
            for (int q = 1; q <= p; ++q) {
                enumerate_subsets(p, q, [&](const std::vector<int>& sel) {
                    std::vector<double> sub;
                    for (int s : sel) sub.push_back(args[s - 1]);
                    recon += res.components[q - 1].f(sub.data());
                });
            }
            CHECK(std::fabs(recon - k.f(args.data())) <= 1e-10);
            int pos = p - 1;
            while (pos >= 0 && ++tup[pos] == support) tup[pos--] = 0;
            if (pos < 0) break;
        }
    }
}

TEST_CASE("already-degenerate kernel is a projection fixed point") {
    const auto rad = BaseMeasure::rademacher();
    const auto res = hoeffding_decompose(product_kernel(2, rad));
    CHECK(res.mean == doctest::Approx(0.0));
    // psi_1 is identically 0, psi_2 = psi
    for (double x : {-1.0, 1.0}) {
        CHECK(res.components[0].f(&x) == doctest::Approx(0.0));
        for (double y : {-1.0, 1.0}) {
            const double args[2] = {x, y};
            CHECK(res.components[1].f(args) == doctest::Approx(x * y));
        }
    }
}

TEST_CASE("process-level Hoeffding reconstruction of a non-degenerate U-statistic") {
    // U(M) = sum_{J subseteq [M]} a_J psi(X_J) must equal
    // mean * sum_J a_J + sum_q sum_{K subseteq [M]} (sum_{J supseteq K} a_J) psi_q(X_K)
    Rng rng(1212);
    const int n = 6, p = 2;
    FiniteSupport fs{{-1.2, 0.3, 1.0}, {0.3, 0.4, 0.3}};
    BaseMeasure mu{fs};
    std::vector<std::vector<double>> entries;
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j)
            entries.push_back({static_cast<double>(i), static_cast<double>(j), rng.normal()});
    const Kernel psi = table_kernel(p, mu, entries);
    const auto dec = hoeffding_decompose(psi);

    // random sparse weights over D_2(n)
    std::map<std::pair<int, int>, double> a;
    enumerate_subsets(n, p, [&](const std::vector<int>& s) {
        if (rng.bernoulli(0.7)) a[{s[0], s[1]}] = rng.normal();
    });
    std::vector<double> x(n);
    for (auto& v : x) v = mu.draw(rng);

    for (int m = 0; m <= n; ++m) {
        double direct = 0.0;
        double weight_total = 0.0;
        for (const auto& [key, w] : a) {
            if (key.second > m) continue;
            const double args[2] = {x[static_cast<std::size_t>(key.first - 1)],
                                    x[static_cast<std::size_t>(key.second - 1)]};
            direct += w * psi.f(args);
            weight_total += w;
        }
        double recon = dec.mean * weight_total;
        // q = 1 layer
        for (int k = 1; k <= m; ++k) {
            double bk = 0.0;
            for (const auto& [key, w] : a)
                if (key.second <= m && (key.first == k || key.second == k)) bk += w;
            recon += bk * dec.components[0].f(&x[static_cast<std::size_t>(k - 1)]);
        }
        // q = 2 layer
        for (const auto& [key, w] : a) {
            if (key.second > m) continue;
            const double args[2] = {x[static_cast<std::size_t>(key.first - 1)],
                                    x[static_cast<std::size_t>(key.second - 1)]};
            recon += w * dec.components[1].f(args);
        }
        CHECK(std::fabs(direct - recon) <= 1e-10);
    }
}

TEST_CASE("symmetry spot check") {
    const auto rad = BaseMeasure::rademacher();
    CHECK(check_symmetry(product_kernel(3, rad)));
    Kernel asym;
    asym.p = 2;
    asym.mu = rad;
    asym.f = [](const double* x) { return x[0] - 0.5 * x[1]; };
    CHECK_FALSE(check_symmetry(asym));
}

TEST_CASE("kernel json configs") {
    const auto mu = BaseMeasure::from_json_string(R"({"atoms":[[-1.0,0.5],[1.0,0.5]]})");
    CHECK(mu.mean() == 0.0);
    const auto k = kernel_from_json_string(R"({"type":"product","p":2})", mu);
    const double args[2] = {-1.0, 1.0};
    CHECK(k.f(args) == -1.0);
    CHECK_THROWS(kernel_from_json_string(R"({"type":"nope"})", mu));
}

TEST_CASE("enumeration cap triggers the MC-mode advisory") {
    FiniteSupport fs;
    for (int i = 0; i < 10; ++i) {
        fs.atoms.push_back(i);
        fs.mass.push_back(0.1);
    }
    const Kernel k = product_kernel(8, BaseMeasure(fs));  // 10^8 tuples
    CHECK_THROWS_WITH_AS(lr_norm(k, 3), doctest::Contains("MC mode"), std::runtime_error);
}

TEST_CASE("MC norm estimate carries a standard error") {
    SamplerMeasure sm;
    sm.draw = [](Rng& rng) { return rng.normal(); };
    sm.abs3 = 2.0;
    const Kernel k = product_kernel(1, BaseMeasure(sm));
    const auto est = lr_norm_mc(k, 2, 50000, 11);
    // L2 norm of a standard normal is 1
    CHECK(std::fabs(est.value - 1.0) <= 4.0 * est.se);
    CHECK(est.se > 0.0);
    CHECK(est.se < 0.05);
}

TEST_CASE("MC degeneracy check on a sampler measure") {
    SamplerMeasure sm;
    sm.draw = [](Rng& rng) { return rng.normal(); };
    sm.mean = 0.0;
    sm.variance = 1.0;
    sm.abs3 = 2.0;
    Kernel k = product_kernel(2, BaseMeasure(sm));
    const auto rep = check_degenerate(k, 1e-3, 20000, 99);
    CHECK_FALSE(rep.exact);
    CHECK(rep.is_degenerate);
}
