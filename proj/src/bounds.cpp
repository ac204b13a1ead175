#include "fclt/bounds.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "fclt/simd.hpp"

namespace fclt {

std::string BoundReport::to_json_string() const {
    nlohmann::json j;
    j["theorem"] = theorem;
    j["norm_unit"] = norm_unit;
    j["terms"] = terms;
    j["total"] = total;
    j["metadata"] = {{"n", n}, {"d", d}, {"spec_hash", spec_hash}, {"wall_ms", wall_ms}};
    return j.dump(2);
}

double cubic_weight_sum(const WeightArray& w) {
    std::vector<double> per_element(static_cast<std::size_t>(w.n()), 0.0);
    for (int l = 1; l <= w.n(); ++l) {
        double s = 0.0;
        for (std::int32_t id : w.containing(l)) s += std::fabs(w.weight(static_cast<std::size_t>(id)));
        per_element[static_cast<std::size_t>(l - 1)] = s;
    }
    return vec::abs_cube_sum(per_element.data(), per_element.size());
}

namespace {

// Superset-sum tables for a weight array: M(T) = sum_{L superset of T} |a_L|
// for tuples T of size 1..3, with exact 64-bit keys (n < 2^21).
struct SupersetMass {
    std::vector<double> m1;                      // by element
    std::unordered_map<std::uint64_t, double> m2;
    std::unordered_map<std::uint64_t, double> m3;
    double total = 0.0;
    int max_t = 0;

    static std::uint64_t key2(int a, int b) {
        return (static_cast<std::uint64_t>(a) << 21) | static_cast<std::uint64_t>(b);
    }
    static std::uint64_t key3(int a, int b, int c) {
        return (static_cast<std::uint64_t>(a) << 42) | (static_cast<std::uint64_t>(b) << 21) |
               static_cast<std::uint64_t>(c);
    }

    explicit SupersetMass(const WeightArray& w) {
        m1.assign(static_cast<std::size_t>(w.n()) + 1, 0.0);
        total = w.abs_total();
        const int p = w.p();
        max_t = std::min(p, 3);
        for (std::size_t k = 0; k < w.count(); ++k) {
            const double a = std::fabs(w.weight(k));
            const std::int32_t* s = w.subset(k);
            for (int i = 0; i < p; ++i) {
                m1[static_cast<std::size_t>(s[i])] += a;
                if (max_t >= 2)
                    for (int j = i + 1; j < p; ++j) {
                        m2[key2(s[i], s[j])] += a;
                        if (max_t >= 3)
                            for (int l = j + 1; l < p; ++l) m3[key3(s[i], s[j], s[l])] += a;
                    }
            }
        }
    }

    double lookup2(int a, int b) const {
        const auto it = m2.find(key2(a, b));
        return it == m2.end() ? 0.0 : it->second;
    }
    double lookup3(int a, int b, int c) const {
        const auto it = m3.find(key3(a, b, c));
        return it == m3.end() ? 0.0 : it->second;
    }

    // mass of L with L cap U nonempty, by inclusion-exclusion over tuples
    // T subseteq U of size <= max_t (subsets larger than the kernel order
    // cannot be contained in any L).
    double intersect_mass(const std::vector<std::int32_t>& u) const {
        const int usz = static_cast<int>(u.size());
        double acc = 0.0;
        for (int i = 0; i < usz; ++i) acc += m1[static_cast<std::size_t>(u[i])];
        if (max_t >= 2)
            for (int i = 0; i < usz; ++i)
                for (int j = i + 1; j < usz; ++j) acc -= lookup2(u[i], u[j]);
        if (max_t >= 3)
            for (int i = 0; i < usz; ++i)
                for (int j = i + 1; j < usz; ++j)
                    for (int l = j + 1; l < usz; ++l) acc += lookup3(u[i], u[j], u[l]);
        return acc;
    }
};

}  // namespace

double triple_intersect_sum(const WeightArray& wi, const WeightArray& wj, const WeightArray& wk) {
    if (wi.n() != wj.n() || wi.n() != wk.n())
        throw std::invalid_argument("triple_intersect_sum: arrays must share n");
    if (wi.n() >= (1 << 21)) throw std::invalid_argument("triple_intersect_sum: n too large");

    SupersetMass mass_k(wk);
    const bool exact_ie = wk.p() <= 3;
    // memoized avoid-mass scans for kernel orders above 3
    std::map<std::vector<std::int32_t>, double> memo;

    const int pi = wi.p(), pj = wj.p();
    std::vector<std::uint32_t> stamp(wj.count(), 0);
    std::uint32_t epoch = 0;
    std::vector<std::int32_t> uni;
    uni.reserve(static_cast<std::size_t>(pi + pj));

    double total = 0.0;
    for (std::size_t a = 0; a < wi.count(); ++a) {
        const double wa = std::fabs(wi.weight(a));
        if (wa == 0.0) continue;
        const std::int32_t* J = wi.subset(a);
        ++epoch;
        for (int e = 0; e < pi; ++e) {
            for (std::int32_t b : wj.containing(J[e])) {
                if (stamp[static_cast<std::size_t>(b)] == epoch) continue;
                stamp[static_cast<std::size_t>(b)] = epoch;
                const double wb = std::fabs(wj.weight(static_cast<std::size_t>(b)));
                if (wb == 0.0) continue;
                const std::int32_t* K = wj.subset(static_cast<std::size_t>(b));
                uni.clear();
                std::set_union(J, J + pi, K, K + pj, std::back_inserter(uni));
                double lm;
                if (exact_ie) {
                    lm = mass_k.intersect_mass(uni);
                } else {
                    auto it = memo.find(uni);
                    if (it == memo.end()) {
                        double avoid = 0.0;
                        for (std::size_t c = 0; c < wk.count(); ++c) {
                            const std::int32_t* L = wk.subset(c);
                            bool hit = false;
                            for (int e2 = 0; e2 < wk.p() && !hit; ++e2)
                                hit = std::binary_search(uni.begin(), uni.end(), L[e2]);
                            if (!hit) avoid += std::fabs(wk.weight(c));
                        }
                        it = memo.emplace(uni, wk.abs_total() - avoid).first;
                    }
                    lm = it->second;
                }
                total += wa * wb * lm;
            }
        }
    }
    return total;
}

std::string spec_hash(const UProcessSpec& spec) {
    // FNV-1a over a canonical serialization
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t len) {
        const auto* b = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    mix(&spec.d, sizeof spec.d);
    mix(&spec.n, sizeof spec.n);
    for (const auto& c : spec.comp) {
        mix(&c.psi.p, sizeof c.psi.p);
        mix(&c.sigma, sizeof c.sigma);
        for (std::size_t k = 0; k < c.weights.count(); ++k) {
            mix(c.weights.subset(k), sizeof(std::int32_t) * static_cast<std::size_t>(c.weights.p()));
            const double w = c.weights.weight(k);
            mix(&w, sizeof w);
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

BoundReport bound_weighted_pre(const UProcessSpec& spec, PreVariant variant) {
    const auto t0 = std::chrono::steady_clock::now();
    BoundReport rep;
    rep.theorem = "weighted-pre";
    rep.norm_unit = "M";
    rep.n = spec.n;
    rep.d = spec.d;
    rep.spec_hash = spec_hash(spec);

    const int d = spec.d;
    const double p1 = spec.comp.front().psi.p;
    std::vector<double> l3(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) l3[static_cast<std::size_t>(i)] = lr_norm(spec.comp[static_cast<std::size_t>(i)].psi, 3);

    double term1 = 0.0;
    for (int i = 0; i < d; ++i) {
        const auto& c = spec.comp[static_cast<std::size_t>(i)];
        const double cws = cubic_weight_sum(c.weights);
        const double s3 = c.sigma * c.sigma * c.sigma;
        if (variant == PreVariant::Simple) {
            const double m3 = std::pow(l3[static_cast<std::size_t>(i)], 3);
            term1 += 2.0 * std::sqrt(static_cast<double>(d)) / (3.0 * p1) * m3 / s3 * cws;
        } else {
            const double mdiff = overlap_diff_cube_moment(c.psi);
            term1 += std::sqrt(static_cast<double>(d)) / (12.0 * p1) * mdiff / s3 * cws;
        }
    }

    double term2 = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) {
                const auto& ci = spec.comp[static_cast<std::size_t>(i)];
                const auto& cj = spec.comp[static_cast<std::size_t>(j)];
                const auto& ck = spec.comp[static_cast<std::size_t>(k)];
                const double tis = triple_intersect_sum(ci.weights, cj.weights, ck.weights);
                term2 += l3[static_cast<std::size_t>(i)] * l3[static_cast<std::size_t>(j)] *
                         l3[static_cast<std::size_t>(k)] / (ci.sigma * cj.sigma * ck.sigma) * tis;
            }

    rep.terms["term1_pre"] = term1;
    rep.terms["term2_pre"] = term2;
    rep.total = term1 + term2;
    rep.terms["total"] = rep.total;
    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

namespace {

// One-pass assembly of all Sigma_n^(m), m = 0..n.
std::vector<Matrix> sigma_n_all(const UProcessSpec& spec) {
    const int d = spec.d, n = spec.n;
    std::vector<Matrix> out(static_cast<std::size_t>(n) + 1, Matrix(d, d));

    int i = 0;
    while (i < d) {
        int j = i;
        const int q = spec.comp[static_cast<std::size_t>(i)].psi.p;
        while (j < d && spec.comp[static_cast<std::size_t>(j)].psi.p == q) ++j;
        const int dq = j - i;

        Matrix cross(dq, dq);
        for (int a = 0; a < dq; ++a)
            for (int b = a; b < dq; ++b) {
                const double m2 = cross_moment(spec.comp[static_cast<std::size_t>(i + a)].psi,
                                               spec.comp[static_cast<std::size_t>(i + b)].psi);
                cross.at(a, b) = m2;
                cross.at(b, a) = m2;
            }

        std::map<std::vector<std::int32_t>, std::vector<double>> merged;
        for (int a = 0; a < dq; ++a) {
            const auto& w = spec.comp[static_cast<std::size_t>(i + a)].weights;
            for (std::size_t k = 0; k < w.count(); ++k) {
                std::vector<std::int32_t> key(w.subset(k), w.subset(k) + q);
                auto& slot = merged[key];
                if (slot.empty()) slot.assign(static_cast<std::size_t>(dq), 0.0);
                slot[static_cast<std::size_t>(a)] = w.weight(k);
            }
        }
        for (const auto& [key, ws] : merged) {
            const int m = key.back();
            for (int a = 0; a < dq; ++a)
                for (int b = 0; b < dq; ++b)
                    out[static_cast<std::size_t>(m)].at(i + a, i + b) +=
                        ws[static_cast<std::size_t>(a)] * ws[static_cast<std::size_t>(b)] * cross.at(a, b);
        }
        i = j;
    }

    for (int m = 0; m <= n; ++m)
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                out[static_cast<std::size_t>(m)].at(a, b) *=
                    n / (spec.comp[static_cast<std::size_t>(a)].sigma * spec.comp[static_cast<std::size_t>(b)].sigma);
    return out;
}

}  // namespace

Matrix sigma_n_m(const UProcessSpec& spec, int m) {
    if (m < 0 || m > spec.n) throw std::out_of_range("sigma_n_m: m outside [0,n]");
    return sigma_n_all(spec)[static_cast<std::size_t>(m)];
}

DeltaT delta_T(const UProcessSpec& spec, int i) {
    const auto& c = spec.comp[static_cast<std::size_t>(i)];
    const double m2 = cross_moment(c.psi, c.psi);
    std::vector<double> bucket(static_cast<std::size_t>(spec.n) + 1, 0.0);
    for (std::size_t k = 0; k < c.weights.count(); ++k) {
        const double a = c.weights.weight(k);
        bucket[static_cast<std::size_t>(c.weights.subset(k)[c.weights.p() - 1])] += a * a;
    }
    double sup = 0.0, tot = 0.0;
    for (double b : bucket) {
        sup = std::max(sup, b);
        tot += b;
    }
    const double s2 = c.sigma * c.sigma;
    return {sup * m2 / s2, tot * m2 / s2};
}

PiecewiseMatrix phi_n_of(const UProcessSpec& spec) {
    const int n = spec.n, d = spec.d;
    const int p1 = spec.comp.front().psi.p;
    const auto sig = sigma_n_all(spec);
    PiecewiseMatrix pm;
    if (p1 > 1) {
        pm.breaks.push_back(static_cast<double>(p1 - 1) / n);
        pm.mats.push_back(Matrix(d, d));  // zero before the first bucket
    }
    for (int m = p1; m <= n; ++m) {
        pm.breaks.push_back(static_cast<double>(m) / n);
        pm.mats.push_back(psd_sqrt(sig[static_cast<std::size_t>(m)]));
    }
    return pm;
}

BoundReport gammas_con(const UProcessSpec& spec, const PiecewiseMatrix& phi) {
    const auto t0 = std::chrono::steady_clock::now();
    const int n = spec.n, d = spec.d;
    if (phi.dim() != d) throw std::invalid_argument("gammas_con: phi dimension mismatch");
    for (double b : phi.breaks) {
        const double g = b * n;
        if (std::fabs(g - std::nearbyint(g)) > 1e-12)
            throw std::invalid_argument("gammas_con: phi partition not aligned with the spec grid");
    }

    const PiecewiseMatrix phin = phi_n_of(spec);
    const int p1 = spec.comp.front().psi.p;

    // exact cell-wise integrals over the n grid cells
    double int_frob_diff = 0.0;  // int ||phi_n - phi||_F^2
    double int_frob_phi = 0.0;   // int ||phi||_F^2
    std::vector<double> row_int(static_cast<std::size_t>(d), 0.0);  // per i: sum_j int (phi_n-phi)_ij^2
    const double dt = 1.0 / n;
    for (int m = 1; m <= n; ++m) {
        const double mid = (m - 0.5) / n;
        const Matrix& pn = (m < p1) ? phin.mats.front() : phin.value_at(mid);
        const Matrix& pv = phi.value_at(mid);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const double diff = pn.at(i, j) - pv.at(i, j);
                int_frob_diff += diff * diff * dt;
                row_int[static_cast<std::size_t>(i)] += diff * diff * dt;
                int_frob_phi += pv.at(i, j) * pv.at(i, j) * dt;
            }
    }

    std::vector<double> dlog(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < d; ++i) {
        const auto [delta, t] = delta_T(spec, i);
        // delta log(2T/delta) := 0 at delta = 0 by continuity
        dlog[static_cast<std::size_t>(i)] = (delta > 0.0) ? delta * std::log(2.0 * t / delta) : 0.0;
    }

    BoundReport pre = bound_weighted_pre(spec, PreVariant::Simple);
    const double g1 = pre.terms.at("term1_pre");
    const double g2 = pre.terms.at("term2_pre");

    double sum_dlog = 0.0;
    for (double v : dlog) sum_dlog += v;
    const double sqd = std::sqrt(static_cast<double>(d));

    const double g3 = 2.0 * std::sqrt(int_frob_diff) + 12.0 * std::sqrt(sum_dlog);
    double g4 = 0.0, g5 = 0.0;
    for (int i = 0; i < d; ++i) {
        const double dl = dlog[static_cast<std::size_t>(i)];
        const double ri = row_int[static_cast<std::size_t>(i)];
        g4 += 8447.0 * std::pow(dl, 1.5) + 44.0 * std::pow(ri, 1.5);
        g5 += 50.0 * std::sqrt(dl) + 19.0 * std::sqrt(ri);
    }
    g4 *= sqd;
    g5 *= sqd * int_frob_phi;

    BoundReport rep;
    rep.theorem = "weighted-con";
    rep.norm_unit = "M";
    rep.n = n;
    rep.d = d;
    rep.spec_hash = pre.spec_hash;
    rep.terms["gamma1"] = g1;
    rep.terms["gamma2"] = g2;
    rep.terms["gamma3"] = g3;
    rep.terms["gamma4"] = g4;
    rep.terms["gamma5"] = g5;
    rep.terms["int_frob_diff"] = int_frob_diff;
    rep.terms["int_frob_phi"] = int_frob_phi;
    rep.terms["total_m0"] = g1 + g2 + g3;
    rep.total = g1 + g2 + g3 + g4 + g5;
    rep.terms["total"] = rep.total;
    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

HomsumDiagnostics homsum_diagnostics(const Matrix& A) {
    if (A.rows != A.cols) throw std::invalid_argument("homsum_diagnostics: square matrix required");
    const int n = A.rows;
    for (int i = 0; i < n; ++i) {
        if (A.at(i, i) != 0.0)
            throw std::invalid_argument("homsum_diagnostics: diagonal must be zero");
        for (int j = i + 1; j < n; ++j)
            if (std::fabs(A.at(i, j) - A.at(j, i)) > 1e-12)
                throw std::invalid_argument("homsum_diagnostics: matrix must be symmetric");
    }
    HomsumDiagnostics out;
    double sum_abs = 0.0, sig2 = 0.0, rho2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double row_abs = 0.0, row_sq = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double a = A.at(i, j);
            row_abs += std::fabs(a);
            row_sq += a * a;
        }
        out.gamma = std::max(out.gamma, row_abs);
        rho2 = std::max(rho2, row_sq);
        sum_abs += row_abs;
        sig2 += row_sq;
    }
    out.rho = std::sqrt(rho2);
    out.sigma = std::sqrt(sig2);
    const auto eig = sym_eig(A);
    double tr4 = 0.0;
    for (double v : eig.values) {
        out.lambda_star = std::max(out.lambda_star, std::fabs(v));
        tr4 += v * v * v * v;
    }
    if (out.sigma > 0.0) {
        out.tr_a4_over_sigma4 = tr4 / (sig2 * sig2);
        out.ratio_terms = {out.rho / out.sigma, out.gamma / out.sigma,
                           (out.gamma * out.gamma / sig2) * (sum_abs / out.sigma)};
    } else {
        out.degenerate = true;
        out.ratio_terms = {0.0, 0.0, 0.0};
    }
    return out;
}

double prop_m_criterion(double t_n, double r_n) {
    if (!(r_n > 0.0 && r_n <= 1.0)) throw std::domain_error("prop_m_criterion: r_n outside (0,1]");
    const double lg = std::log(1.0 / r_n);
    return t_n * lg * lg;
}

Eps1Estimate epsilon1_mc(const UProcessSpec& spec, const Matrix& lambda, int reps,
                         std::uint64_t seed) {
    if (lambda.rows != spec.d || lambda.cols != spec.d)
        throw std::invalid_argument("epsilon1_mc: lambda shape");
    double s1 = 0.0, s2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        auto sim = simulate_Y(spec, rng);
        auto pair = exchangeable_pair(spec, sim.sample, rng);
        StepPath diff = combine(1.0, pair.y, -1.0, pair.yp);
        // (Y - Y') Lambda as a path: row vector times matrix at each grid point
        StepPath dl(spec.d, spec.n);
        for (int m = 0; m <= spec.n; ++m) {
            const double* src = diff.row(m);
            double* dst = dl.row(m);
            for (int j = 0; j < spec.d; ++j) {
                double acc = 0.0;
                for (int i = 0; i < spec.d; ++i) acc += src[i] * lambda.at(i, j);
                dst[j] = acc;
            }
        }
        const double nd = sup_norm(diff);
        const double v = sup_norm(dl) * nd * nd / 6.0;
        s1 += v;
        s2 += v * v;
    }
    const double mean = s1 / reps;
    const double var = std::max(0.0, s2 / reps - mean * mean);
    return {mean, std::sqrt(var / reps)};
}

}  // namespace fclt
