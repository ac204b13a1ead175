#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fclt/path.hpp"
#include "fclt/rng.hpp"

using namespace fclt;

namespace {

StepPath ramp_path() {
    // n=4, d=1, values 0,1,2,3,4
    StepPath p(1, 4);
    for (int m = 0; m <= 4; ++m) p.row(m)[0] = m;
    return p;
}

StepPath random_path(int d, int n, Rng& rng) {
    StepPath p(d, n);
    for (auto& v : p.values) v = rng.normal();
    return p;
}

}  // namespace

TEST_CASE("eval floor-index semantics") {
    const StepPath zero = StepPath::zero(3, 10);
    for (double v : eval(zero, 0.7)) CHECK(v == 0.0);

    const StepPath p = ramp_path();
    CHECK(eval(p, 0.5)[0] == 2.0);   // floor(4*0.5) = 2
    CHECK(eval(p, 0.49)[0] == 1.0);  // floor(4*0.49) = 1
    CHECK(eval(p, 1.0)[0] == 4.0);
    CHECK_THROWS_AS(eval(p, -0.1), std::domain_error);
    CHECK_THROWS_AS(eval(p, 1.1), std::domain_error);
}

TEST_CASE("eval hits grid points exactly") {
    Rng rng(5);
    for (int n : {3, 7, 11, 64}) {
        StepPath p = random_path(2, n, rng);
        for (int m = 0; m <= n; ++m) {
            const double t = static_cast<double>(m) / n;
            const auto v = eval(p, t);
            CHECK(v[0] == p.row(m)[0]);
            CHECK(v[1] == p.row(m)[1]);
        }
    }
}

TEST_CASE("sup_norm") {
    CHECK(sup_norm(StepPath::zero(2, 5)) == 0.0);

    StepPath c(2, 3);
    for (int m = 0; m <= 3; ++m) {
        c.row(m)[0] = 3.0;
        c.row(m)[1] = 4.0;
    }
    CHECK(sup_norm(c) == doctest::Approx(5.0));

    StepPath d1(1, 2);
    d1.row(0)[0] = 1.0;
    d1.row(1)[0] = -3.0;
    d1.row(2)[0] = 2.0;
    CHECK(sup_norm(d1) == 3.0);
}

TEST_CASE("combine algebra") {
    Rng rng(11);
    StepPath p = random_path(3, 8, rng);
    StepPath q = random_path(3, 8, rng);

    CHECK(sup_norm(combine(1.0, p, -1.0, p)) == 0.0);

    const StepPath zq = combine(2.0, StepPath::zero(3, 8), 1.0, q);
    for (std::size_t i = 0; i < q.values.size(); ++i) CHECK(zq.values[i] == q.values[i]);

    const StepPath s = combine(1.0, p, 1.0, q);
    for (int m = 0; m <= 8; ++m)
        for (int c = 0; c < 3; ++c)
            CHECK(s.row(m)[c] == doctest::Approx(p.row(m)[c] + q.row(m)[c]));

    // subadditivity on random instances
    CHECK(sup_norm(s) <= sup_norm(p) + sup_norm(q) + 1e-12);

    CHECK_THROWS(combine(1.0, p, 1.0, random_path(3, 9, rng)));
}

TEST_CASE("csv round trip") {
    Rng rng(3);
    StepPath p = random_path(2, 6, rng);
    std::stringstream ss;
    write_csv(p, ss);
    const std::string header = ss.str().substr(0, ss.str().find('\n'));
    CHECK(header == "t,v1,v2");
    StepPath q = read_csv(ss);
    REQUIRE(q.d == p.d);
    REQUIRE(q.n == p.n);
    for (std::size_t i = 0; i < p.values.size(); ++i)
        CHECK(q.values[i] == doctest::Approx(p.values[i]).epsilon(1e-15));
}
