#include "fclt/runs.hpp"

#include "fclt/simd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

namespace fclt {

double RunsSpec::sigma(int i) const {
    return std::sqrt(n * std::pow(p, rs[static_cast<std::size_t>(i)]) * (1.0 - p));
}

void RunsSpec::validate() const {
    if (rs.empty()) throw std::invalid_argument("runs: empty rs");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("runs: p outside (0,1)");
    for (std::size_t i = 0; i < rs.size(); ++i) {
        if (rs[i] < 1) throw std::invalid_argument("runs: r_i >= 1 required");
        if (i > 0 && rs[i] > rs[i - 1])
            throw std::invalid_argument("runs: rs must be non-increasing");
    }
    if (!(2 * rs.front() < n)) throw std::invalid_argument("runs: r_1 < n/2 required");
}

std::vector<std::uint8_t> runs_draw_bits(const RunsSpec& spec, Rng& rng) {
    std::vector<std::uint8_t> xi(static_cast<std::size_t>(spec.n));
    for (auto& b : xi) b = rng.bernoulli(spec.p) ? 1 : 0;
    return xi;
}

StepPath runs_path_from_bits(const RunsSpec& spec, const std::vector<std::uint8_t>& xi) {
    if (static_cast<int>(xi.size()) != spec.n) throw std::invalid_argument("runs: bit size");
    const int d = spec.d(), n = spec.n;
    StepPath path(d, n);
    for (int i = 0; i < d; ++i) {
        const int r = spec.rs[static_cast<std::size_t>(i)];
        const double pr = std::pow(spec.p, r);
        const double inv_sigma = 1.0 / spec.sigma(i);
        double acc = 0.0;
        for (int m = 1; m <= n; ++m) {
            double prod = 1.0;
            for (int k = 0; k < r; ++k) prod *= xi[static_cast<std::size_t>((m - 1 + k) % n)];
            acc += prod - pr;
            path.row(m)[i] = inv_sigma * acc;
        }
    }
    return path;
}

StepPath simulate_runs(const RunsSpec& spec, Rng& rng) {
    return runs_path_from_bits(spec, runs_draw_bits(spec, rng));
}

double runs_weight(const std::vector<int>& J, int r, int n, double p) {
    if (J.empty()) throw std::invalid_argument("runs_weight: empty subset");
    const int j = static_cast<int>(J.size());
    const int mn = *std::min_element(J.begin(), J.end());
    const int mx = *std::max_element(J.begin(), J.end());
    double count = std::max(r - mx + mn, 0);
    // wrap-around term: J meets both [1, n/2) and (n/2, n]
    const double half = n / 2.0;
    int max_lo = 0, min_hi = 0;
    bool has_lo = false, has_hi = false;
    for (int v : J) {
        if (v < half) {
            has_lo = true;
            max_lo = std::max(max_lo, v);
        }
        if (v > half) {
            min_hi = has_hi ? std::min(min_hi, v) : v;
            has_hi = true;
        }
    }
    if (has_lo && has_hi) count += std::max(r + min_hi - max_lo - n, 0);
    return std::pow(p, r - j) * count;
}

namespace {

// Canonical torus monomial table: every window m (1..n) of length r_i and
// every nonempty offset subset S contributes coefficient p^{r_i-|S|} (times
// the standardization scale) at increment bucket m, referencing the shared
// wrapped index set K = {((m+s-1) mod n)+1 : s in S}.
struct MonomialTable {
    struct Entry {
        int bucket;     // window index m
        int key_id;     // shared monomial id
        double coeff;   // p^{r-|S|} (p(1-p))^{|S|/2} / sigma_i
    };
    std::vector<std::vector<Entry>> per_component;
    std::vector<std::vector<std::int32_t>> keys;  // id -> sorted wrapped subset
};

MonomialTable build_monomial_table(const RunsSpec& spec) {
    MonomialTable table;
    std::map<std::vector<std::int32_t>, int> key_ids;
    const int n = spec.n;
    const double scale1 = std::sqrt(spec.p * (1.0 - spec.p));
    table.per_component.resize(static_cast<std::size_t>(spec.d()));
    for (int i = 0; i < spec.d(); ++i) {
        const int r = spec.rs[static_cast<std::size_t>(i)];
        const double inv_sigma = 1.0 / spec.sigma(i);
        auto& entries = table.per_component[static_cast<std::size_t>(i)];
        std::vector<std::int32_t> key;
        for (int m = 1; m <= n; ++m) {
            for (std::uint32_t mask = 1; mask < (1u << r); ++mask) {
                key.clear();
                for (int s = 0; s < r; ++s)
                    if (mask & (1u << s)) key.push_back(static_cast<std::int32_t>((m - 1 + s) % n + 1));
                std::sort(key.begin(), key.end());
                auto [it, fresh] = key_ids.try_emplace(key, static_cast<int>(table.keys.size()));
                if (fresh) table.keys.push_back(key);
                const int j = __builtin_popcount(mask);
                const double coeff =
                    std::pow(spec.p, r - j) * std::pow(scale1, j) * inv_sigma;
                entries.push_back({m, it->second, coeff});
            }
        }
    }
    return table;
}

}  // namespace

RunsDecomposition runs_decompose(const RunsSpec& spec) {
    spec.validate();
    const int n = spec.n;
    const double scale1 = std::sqrt(spec.p * (1.0 - spec.p));
    const BaseMeasure mu = BaseMeasure::standardized_bernoulli(spec.p);

    struct Item {
        int i, j;
        WeightArray w;
    };
    std::vector<Item> items;
    for (int i = 1; i <= spec.d(); ++i) {
        const int r = spec.rs[static_cast<std::size_t>(i - 1)];
        for (int j = 1; j <= r; ++j) {
            // collect the distinct wrapped subsets reachable from any window
            std::map<std::vector<int>, double> weights;
            std::vector<int> key;
            for (int m = 1; m <= n; ++m) {
                // iterate offset subsets of size j
                std::vector<int> off(static_cast<std::size_t>(j));
                for (int t = 0; t < j; ++t) off[static_cast<std::size_t>(t)] = t;
                while (true) {
                    key.clear();
                    for (int t = 0; t < j; ++t) key.push_back((m - 1 + off[static_cast<std::size_t>(t)]) % n + 1);
                    std::sort(key.begin(), key.end());
                    weights.emplace(key, 0.0);
                    int pos = j - 1;
                    while (pos >= 0 && off[static_cast<std::size_t>(pos)] == r - (j - pos)) --pos;
                    if (pos < 0) break;
                    ++off[static_cast<std::size_t>(pos)];
                    for (int t = pos + 1; t < j; ++t) off[static_cast<std::size_t>(t)] = off[static_cast<std::size_t>(t - 1)] + 1;
                }
            }
            WeightArray w(n, j);
            const double scale = std::pow(scale1, j);
            for (auto& [k, unused] : weights) {
                (void)unused;
                const double a = runs_weight(k, r, n, spec.p);
                if (a != 0.0) w.add(k, a * scale);
            }
            w.finalize();
            items.push_back({i, j, std::move(w)});
        }
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        return a.j != b.j ? a.j < b.j : a.i < b.i;
    });

    RunsDecomposition out;
    out.uspec.d = static_cast<int>(items.size());
    out.uspec.n = n;
    out.uspec.mu = mu;
    for (auto& it : items) {
        out.uspec.comp.push_back(
            {product_kernel(it.j, mu), std::move(it.w), spec.sigma(it.i - 1)});
        out.component_map.emplace_back(it.i, it.j);
    }
    return out;
}

PathSampler runs_prelimit_sampler(const RunsSpec& spec) {
    spec.validate();
    auto table = std::make_shared<MonomialTable>(build_monomial_table(spec));
    PathSampler s;
    s.d = spec.d();
    s.n = spec.n;
    s.draw = [table, d = spec.d(), n = spec.n](Rng& rng) {
        std::vector<double> z(table->keys.size());
        for (auto& v : z) v = rng.normal();
        StepPath path(d, n);
        std::vector<double> bucket(static_cast<std::size_t>(n) + 1);
        for (int i = 0; i < d; ++i) {
            std::fill(bucket.begin(), bucket.end(), 0.0);
            for (const auto& e : table->per_component[static_cast<std::size_t>(i)])
                bucket[static_cast<std::size_t>(e.bucket)] += e.coeff * z[static_cast<std::size_t>(e.key_id)];
            double acc = 0.0;
            for (int m = 0; m <= n; ++m) {
                acc += bucket[static_cast<std::size_t>(m)];
                path.row(m)[i] = acc;
            }
        }
        return path;
    };
    return s;
}

StepPath runs_reconstruct(const RunsSpec& spec, const std::vector<std::uint8_t>& xi) {
    spec.validate();
    if (static_cast<int>(xi.size()) != spec.n) throw std::invalid_argument("runs: bit size");
    const MonomialTable table = build_monomial_table(spec);
    const double scale1 = std::sqrt(spec.p * (1.0 - spec.p));
    // standardized variables
    std::vector<double> x(static_cast<std::size_t>(spec.n));
    for (int k = 0; k < spec.n; ++k)
        x[static_cast<std::size_t>(k)] = (xi[static_cast<std::size_t>(k)] - spec.p) / scale1;
    std::vector<double> monomial(table.keys.size());
    for (std::size_t id = 0; id < table.keys.size(); ++id) {
        double prod = 1.0;
        for (std::int32_t e : table.keys[id]) prod *= x[static_cast<std::size_t>(e - 1)];
        monomial[id] = prod;
    }
    const int d = spec.d(), n = spec.n;
    StepPath path(d, n);
    std::vector<double> bucket(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i < d; ++i) {
        std::fill(bucket.begin(), bucket.end(), 0.0);
        for (const auto& e : table.per_component[static_cast<std::size_t>(i)])
            bucket[static_cast<std::size_t>(e.bucket)] += e.coeff * monomial[static_cast<std::size_t>(e.key_id)];
        double acc = 0.0;
        for (int m = 0; m <= n; ++m) {
            acc += bucket[static_cast<std::size_t>(m)];
            path.row(m)[i] = acc;
        }
    }
    return path;
}

namespace {

// binomial with the C(-1,-1) = 1 edge so one formula covers q = 1
double binom_ext(int n, int k) {
    if (n == -1 && k == -1) return 1.0;
    if (k < 0 || n < 0 || k > n) return 0.0;
    return static_cast<double>(binomial(n, k));
}

}  // namespace

RunsSigma runs_sigma_blocks(const RunsSpec& spec) {
    spec.validate();
    const int r1 = spec.rs.front();
    RunsSigma out;
    for (int q = 1; q <= r1; ++q) {
        int nq = 0;
        for (int r : spec.rs)
            if (r >= q) ++nq;
        out.nq.push_back(nq);
        Matrix block(nq, nq);
        for (int i = 0; i < nq; ++i)
            for (int l = 0; l < nq; ++l) {
                const int ri = spec.rs[static_cast<std::size_t>(i)];
                const int rl = spec.rs[static_cast<std::size_t>(l)];
                double s = 0.0;
                for (int k = q - 1; k <= std::min(ri, rl) - 1; ++k)
                    s += binom_ext(k - 1, q - 2) * (ri - k) * (rl - k);
                block.at(i, l) = std::pow(spec.p, 0.5 * (ri + rl) - q) *
                                 std::pow(1.0 - spec.p, q - 1) * s;
            }
        out.blocks.push_back(std::move(block));
    }
    return out;
}

CovModel runs_sigma_covmodel(const RunsSpec& spec) {
    return CovModel::block_diagonal(runs_sigma_blocks(spec).blocks);
}

BoundReport runs_bound_pre(const RunsSpec& spec) {
    spec.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const int d = spec.d();
    const double p = spec.p;
    const double mclt = 1.0 + p * p * p - 2.0 * p * p * p * p;  // (1 + p^3 - 2p^4)
    const double r1 = spec.rs.front();
    const double rd = spec.rs.back();
    double rsum = 0.0;
    for (int r : spec.rs) rsum += r;

    double g1 = 0.0;
    for (int i = 0; i < d; ++i) {
        const int ri = spec.rs[static_cast<std::size_t>(i)];
        for (int j = 1; j <= ri; ++j) {
            const double b = binom_ext(ri - 1, j - 1);
            g1 += std::pow(mclt, j) * std::pow(p, 1.5 * ri - 3.0 * j) /
                  std::pow(1.0 - p, 1.5) * b * b * b;
        }
    }
    g1 *= 2.0 * std::sqrt(d * r1) * std::pow(rsum, 1.5) / (3.0 * rd);

    double g2 = 0.0;
    for (int u = 0; u < d; ++u)
        for (int v = 0; v < d; ++v)
            for (int w = 0; w < d; ++w) {
                const int ru = spec.rs[static_cast<std::size_t>(u)];
                const int rv = spec.rs[static_cast<std::size_t>(v)];
                const int rw = spec.rs[static_cast<std::size_t>(w)];
                const double shape = rw * std::pow(std::max(ru, rv), 2);
                for (int j1 = 1; j1 <= ru; ++j1)
                    for (int j2 = 1; j2 <= rv; ++j2)
                        for (int j3 = 1; j3 <= rw; ++j3) {
                            g2 += std::pow(mclt, (j1 + j2 + j3) / 3.0) *
                                  std::pow(p, 0.5 * (ru + rv + rw) - j1 - j2 - j3) /
                                  std::pow(1.0 - p, 1.5) * shape * binom_ext(ru - 1, j1 - 1) *
                                  binom_ext(rv - 1, j2 - 1) * binom_ext(rw - 1, j3 - 1);
                        }
            }
    g2 *= 2.0 * std::sqrt(d * r1) * rsum;

    BoundReport rep;
    rep.theorem = "runs-pre";
    rep.norm_unit = "M0";
    rep.n = spec.n;
    rep.d = d;
    rep.terms["gamma1"] = g1;
    rep.terms["gamma2"] = g2;
    rep.total = (g1 + g2) / std::sqrt(static_cast<double>(spec.n));
    rep.terms["total"] = rep.total;
    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

BoundReport runs_bound_con(const RunsSpec& spec) {
    BoundReport rep = runs_bound_pre(spec);
    rep.theorem = "runs-con";
    const int d = spec.d();
    const double p = spec.p;
    const int r1 = spec.rs.front();
    double rsum = 0.0;
    for (int r : spec.rs) rsum += r;

    double inner = 0.0;
    for (int q = 2; q <= r1; ++q) {
        int nq = 0;
        for (int r : spec.rs)
            if (r >= q) ++nq;
        for (int i = 0; i < nq; ++i) {
            const int ri = spec.rs[static_cast<std::size_t>(i)];
            for (int k = q - 1; k <= ri - 1; ++k)
                inner += binom_ext(k - 1, q - 2) * std::pow(p, ri - q) / (1.0 - p) *
                         (ri - k) * (ri - k);
        }
    }
    for (int i = 0; i < d; ++i) {
        const int ri = spec.rs[static_cast<std::size_t>(i)];
        inner += std::pow(p, ri - 1) / (1.0 - p) * ri * ri;
    }
    const double g3 = 22.0 * std::sqrt(static_cast<double>(d)) * r1 * r1 * rsum * std::sqrt(inner);
    rep.terms["gamma3"] = g3;
    const double g1 = rep.terms.at("gamma1");
    const double g2 = rep.terms.at("gamma2");
    rep.total = (g1 + g2 + g3 * std::sqrt(std::log(static_cast<double>(spec.n)))) /
                std::sqrt(static_cast<double>(spec.n));
    rep.terms["total"] = rep.total;
    return rep;
}

PathSampler runs_limit_sampler(const RunsSpec& spec, int grid) {
    spec.validate();
    if (grid <= 0) grid = spec.n;
    const RunsSigma sig = runs_sigma_blocks(spec);
    auto sqrt_sigma = std::make_shared<Matrix>(runs_sigma_covmodel(spec).sqrt());
    const int d = spec.d();
    const int dim = sqrt_sigma->rows;

    // component i sums coordinates off(q) + i for q = 1..r_i
    auto coords = std::make_shared<std::vector<std::vector<int>>>();
    {
        std::vector<int> off(sig.nq.size() + 1, 0);
        for (std::size_t q = 0; q < sig.nq.size(); ++q) off[q + 1] = off[q] + sig.nq[q];
        for (int i = 0; i < d; ++i) {
            std::vector<int> c;
            for (int q = 1; q <= spec.rs[static_cast<std::size_t>(i)]; ++q)
                c.push_back(off[static_cast<std::size_t>(q - 1)] + i);
            coords->push_back(std::move(c));
        }
    }
    // grid-unit time shifts (r_i - 1)/n, required to be grid-aligned
    auto shifts = std::make_shared<std::vector<int>>();
    for (int i = 0; i < d; ++i) {
        const double s = static_cast<double>(spec.rs[static_cast<std::size_t>(i)] - 1) * grid / spec.n;
        if (std::fabs(s - std::nearbyint(s)) > 1e-9)
            throw std::invalid_argument("runs_limit_sampler: time shift not grid-aligned");
        shifts->push_back(static_cast<int>(std::nearbyint(s)));
    }

    PathSampler out;
    out.d = d;
    out.n = grid;
    out.draw = [sqrt_sigma, coords, shifts, d, dim, grid](Rng& rng) {
        // W: dim-dimensional standard BM on the grid; Z' = Sigma^{1/2} W
        const double sdt = std::sqrt(1.0 / grid);
        std::vector<double> w(static_cast<std::size_t>(dim), 0.0);
        std::vector<double> zp(static_cast<std::size_t>(dim));
        Matrix zvals(grid + 1, d);  // un-shifted component sums
        for (int m = 1; m <= grid; ++m) {
            for (auto& v : w) v += sdt * rng.normal();
            vec::matvec(sqrt_sigma->a.data(), w.data(), zp.data(), static_cast<std::size_t>(dim),
                        static_cast<std::size_t>(dim));
            for (int i = 0; i < d; ++i) {
                double acc = 0.0;
                for (int c : (*coords)[static_cast<std::size_t>(i)]) acc += zp[static_cast<std::size_t>(c)];
                zvals.at(m, i) = acc;
            }
        }
        StepPath path(d, grid);
        for (int m = 0; m <= grid; ++m)
            for (int i = 0; i < d; ++i)
                path.row(m)[i] = zvals.at(std::min(m + (*shifts)[static_cast<std::size_t>(i)], grid), i);
        return path;
    };
    return out;
}

}  // namespace fclt
