#include "fclt/mc.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "fclt/simd.hpp"

namespace fclt {

double TestFunctional::operator()(const StepPath& w) const {
    double arg = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j) {
        const int m = std::min(w.grid_index(times[j]), w.n);
        const double* row = w.row(m);
        arg += vec::dot(row, thetas.row(static_cast<int>(j)), static_cast<std::size_t>(w.d));
    }
    return amplitude * std::cos(arg);
}

TestFunctional make_test_functional(const std::vector<double>& times, const Matrix& thetas) {
    if (times.empty() || static_cast<int>(times.size()) != thetas.rows)
        throw std::invalid_argument("test functional: times/thetas arity");
    for (double t : times)
        if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("test functional: t outside [0,1]");
    TestFunctional g;
    g.times = times;
    g.thetas = thetas;
    double s = 0.0;
    for (int j = 0; j < thetas.rows; ++j)
        s += std::sqrt(vec::sumsq(thetas.row(j), static_cast<std::size_t>(thetas.cols)));
    if (s == 0.0)
        throw std::invalid_argument("test functional: all-zero directions (constant functional)");
    g.theta_abs_sum = s;
    // |g| <= a, ||Dg|| <= aS, ||D^2 g|| <= aS^2, Lipschitz(D^2 g) <= aS^3
    g.amplitude = 1.0 / (1.0 + s + s * s + s * s * s);
    g.certified_norm = 1.0;
    return g;
}

std::vector<TestFunctional> default_functionals(int d, int count, std::uint64_t seed) {
    std::vector<TestFunctional> out;
    Rng rng(seed);
    for (int c = 0; c < count; ++c) {
        const int k = 1 + static_cast<int>(rng.below(3));
        std::vector<double> times;
        Matrix thetas(k, d);
        for (int j = 0; j < k; ++j) {
            times.push_back(0.25 + 0.75 * rng.uniform01());
            for (int i = 0; i < d; ++i) thetas.at(j, i) = rng.normal();
        }
        out.push_back(make_test_functional(times, thetas));
    }
    return out;
}

void parallel_replicate(int reps, std::uint64_t master_seed, int threads,
                        const std::function<void(int, Rng&)>& fn) {
    if (threads < 1) threads = 1;
    if (threads == 1) {
        Rng rng;
        for (int r = 0; r < reps; ++r) {
            rng.reseed(derive_seed(master_seed, static_cast<std::uint64_t>(r)));
            fn(r, rng);
        }
        return;
    }
    // fixed-size chunks claimed by an atomic cursor; every rep writes only its
    // own slot with its own derived seed, so the thread count cannot change
    // the result
    constexpr int kChunk = 64;
    std::atomic<int> cursor{0};
    auto worker = [&]() {
        Rng rng;
        while (true) {
            const int base = cursor.fetch_add(kChunk);
            if (base >= reps) break;
            const int end = std::min(base + kChunk, reps);
            for (int r = base; r < end; ++r) {
                rng.reseed(derive_seed(master_seed, static_cast<std::uint64_t>(r)));
                fn(r, rng);
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

namespace {

struct MeanSe {
    double mean, se;
};

MeanSe mean_se(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += x;
    const double m = s / n;
    double q = 0.0;
    for (double x : v) q += (x - m) * (x - m);
    return {m, std::sqrt(q / (n - 1.0) / n)};
}

}  // namespace

DistanceEstimate estimate_distance(const PathSampler& a, const PathSampler& b,
                                   const TestFunctional& g, int reps, std::uint64_t master_seed,
                                   int threads, bool coupled) {
    if (reps < 2) throw std::invalid_argument("estimate_distance: reps >= 2 required");
    if (a.d != b.d || a.n != b.n)
        throw std::invalid_argument("estimate_distance: samplers must share d and grid");
    std::vector<double> va(static_cast<std::size_t>(reps)), vb(static_cast<std::size_t>(reps));
    parallel_replicate(reps, master_seed, threads, [&](int r, Rng& rng) {
        const std::uint64_t sa = rng.next_u64();
        const std::uint64_t sb = coupled ? sa : rng.next_u64();
        Rng ra(sa), rb(sb);
        va[static_cast<std::size_t>(r)] = g(a.draw(ra));
        vb[static_cast<std::size_t>(r)] = g(b.draw(rb));
    });
    const auto [ma, sa] = mean_se(va);
    const auto [mb, sb] = mean_se(vb);
    DistanceEstimate out;
    out.mean_a = ma;
    out.mean_b = mb;
    out.se_a = sa;
    out.se_b = sb;
    out.estimate = std::fabs(ma - mb);
    out.se = std::sqrt(sa * sa + sb * sb);
    out.reps = reps;
    return out;
}

CovEstimate empirical_covariance(const PathSampler& sampler, const std::vector<double>& times,
                                 int reps, std::uint64_t master_seed, int threads) {
    if (reps < 3) throw std::invalid_argument("empirical_covariance: reps >= 3 required");
    const int k = static_cast<int>(times.size()) * sampler.d;
    std::vector<double> vals(static_cast<std::size_t>(reps) * k);
    parallel_replicate(reps, master_seed, threads, [&](int r, Rng& rng) {
        const StepPath w = sampler.draw(rng);
        double* slot = vals.data() + static_cast<std::size_t>(r) * k;
        for (std::size_t j = 0; j < times.size(); ++j) {
            const int m = std::min(w.grid_index(times[j]), w.n);
            const double* row = w.row(m);
            for (int c = 0; c < sampler.d; ++c) slot[j * sampler.d + c] = row[c];
        }
    });

    CovEstimate out;
    out.mean.assign(static_cast<std::size_t>(k), 0.0);
    for (int r = 0; r < reps; ++r)
        for (int i = 0; i < k; ++i)
            out.mean[static_cast<std::size_t>(i)] += vals[static_cast<std::size_t>(r) * k + i];
    for (auto& m : out.mean) m /= reps;

    out.cov = Matrix(k, k);
    out.se = Matrix(k, k);
    const double r_count = static_cast<double>(reps);
    std::vector<double> jack(static_cast<std::size_t>(reps));
    for (int i = 0; i < k; ++i) {
        for (int j = i; j < k; ++j) {
            double sxy = 0.0, sx = 0.0, sy = 0.0;
            for (int r = 0; r < reps; ++r) {
                const double x = vals[static_cast<std::size_t>(r) * k + i];
                const double y = vals[static_cast<std::size_t>(r) * k + j];
                sxy += x * y;
                sx += x;
                sy += y;
            }
            const double cov = (sxy - sx * sy / r_count) / (r_count - 1.0);
            // delete-one jackknife
            double jmean = 0.0;
            for (int r = 0; r < reps; ++r) {
                const double x = vals[static_cast<std::size_t>(r) * k + i];
                const double y = vals[static_cast<std::size_t>(r) * k + j];
                const double c_r = (sxy - x * y - (sx - x) * (sy - y) / (r_count - 1.0)) /
                                   (r_count - 2.0);
                jack[static_cast<std::size_t>(r)] = c_r;
                jmean += c_r;
            }
            jmean /= r_count;
            double jvar = 0.0;
            for (int r = 0; r < reps; ++r) {
                const double dlt = jack[static_cast<std::size_t>(r)] - jmean;
                jvar += dlt * dlt;
            }
            const double se = std::sqrt((r_count - 1.0) / r_count * jvar);
            out.cov.at(i, j) = cov;
            out.cov.at(j, i) = cov;
            out.se.at(i, j) = se;
            out.se.at(j, i) = se;
        }
    }
    return out;
}

RateFit rate_fit(const std::vector<double>& ns, const std::vector<double>& values) {
    if (ns.size() != values.size() || ns.size() < 3)
        throw std::invalid_argument("rate_fit: need >= 3 aligned points");
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (!(values[i] > 0.0)) throw std::invalid_argument("rate_fit: values must be positive");
        if (i > 0 && !(ns[i] > ns[i - 1]))
            throw std::invalid_argument("rate_fit: ns must be strictly increasing");
    }
    const double n = static_cast<double>(ns.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const double x = std::log(ns[i]);
        const double y = std::log(values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    RateFit f;
    const double den = n * sxx - sx * sx;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const double e = std::log(values[i]) - (f.intercept + f.slope * std::log(ns[i]));
        ss_res += e * e;
    }
    f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

DominanceResult dominance_check(const PathSampler& a, const PathSampler& b,
                                const TestFunctional& g, double bound, int reps,
                                std::uint64_t master_seed, int threads) {
    const DistanceEstimate d = estimate_distance(a, b, g, reps, master_seed, threads);
    DominanceResult out;
    out.estimate = d.estimate;
    out.se = d.se;
    out.bound = bound;
    out.dominated = d.estimate <= bound + 4.0 * d.se;
    return out;
}

}  // namespace fclt
