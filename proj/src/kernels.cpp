#include "fclt/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace fclt {

namespace {

// Iterates all tuples in support^k, calling fn(args, mass_product).
template <typename F>
void for_each_tuple(const FiniteSupport& fs, int k, F&& fn) {
    const int s = static_cast<int>(fs.atoms.size());
    std::vector<int> idx(static_cast<std::size_t>(std::max(k, 1)), 0);
    std::vector<double> args(static_cast<std::size_t>(std::max(k, 1)), 0.0);
    if (k == 0) {
        fn(args.data(), 1.0);
        return;
    }
    while (true) {
        double m = 1.0;
        for (int i = 0; i < k; ++i) {
            args[i] = fs.atoms[idx[i]];
            m *= fs.mass[idx[i]];
        }
        fn(args.data(), m);
        int pos = k - 1;
        while (pos >= 0 && ++idx[pos] == s) idx[pos--] = 0;
        if (pos < 0) break;
    }
}

std::uint64_t tuple_count(const FiniteSupport& fs, int k) {
    std::uint64_t c = 1;
    for (int i = 0; i < k; ++i) {
        c *= fs.atoms.size();
        if (c > (1ull << 62)) return c;
    }
    return c;
}

}  // namespace

BaseMeasure::BaseMeasure(FiniteSupport fs) : fs_(std::move(fs)) {
    if (fs_.atoms.size() != fs_.mass.size() || fs_.atoms.empty())
        throw std::invalid_argument("measure: atoms/mass size mismatch");
    double total = 0.0;
    for (double m : fs_.mass) {
        if (!(m > 0.0)) throw std::invalid_argument("measure: masses must be positive");
        total += m;
    }
    if (std::fabs(total - 1.0) > 1e-12)
        throw std::invalid_argument("measure: masses must sum to 1 within 1e-12");
    cdf_.resize(fs_.mass.size());
    std::partial_sum(fs_.mass.begin(), fs_.mass.end(), cdf_.begin());
    cdf_.back() = 1.0;
}

const FiniteSupport& BaseMeasure::support() const {
    if (!finite_) throw std::logic_error("measure: not finite-support");
    return fs_;
}

double BaseMeasure::draw(Rng& rng) const {
    if (!finite_) return sampler_->draw(rng);
    const double u = rng.uniform01();
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    return fs_.atoms[static_cast<std::size_t>(it - cdf_.begin())];
}

double BaseMeasure::mean() const {
    if (!finite_) return sampler_->mean;
    double s = 0.0;
    for (std::size_t i = 0; i < fs_.atoms.size(); ++i) s += fs_.atoms[i] * fs_.mass[i];
    return s;
}

double BaseMeasure::variance() const {
    if (!finite_) return sampler_->variance;
    const double m = mean();
    double s = 0.0;
    for (std::size_t i = 0; i < fs_.atoms.size(); ++i) {
        const double c = fs_.atoms[i] - m;
        s += c * c * fs_.mass[i];
    }
    return s;
}

double BaseMeasure::abs_moment(int r) const {
    if (!finite_) {
        if (r == 3) return sampler_->abs3;
        throw std::logic_error("sampler measure: only E|X|^3 bound available");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < fs_.atoms.size(); ++i)
        s += std::pow(std::fabs(fs_.atoms[i]), r) * fs_.mass[i];
    return s;
}

double BaseMeasure::moment(int r) const {
    double s = 0.0;
    for (std::size_t i = 0; i < support().atoms.size(); ++i)
        s += std::pow(fs_.atoms[i], r) * fs_.mass[i];
    return s;
}

BaseMeasure BaseMeasure::rademacher() { return BaseMeasure(FiniteSupport{{-1.0, 1.0}, {0.5, 0.5}}); }

BaseMeasure BaseMeasure::bernoulli01(double p) {
    return BaseMeasure(FiniteSupport{{0.0, 1.0}, {1.0 - p, p}});
}

BaseMeasure BaseMeasure::centered_bernoulli(double p) {
    return BaseMeasure(FiniteSupport{{-p, 1.0 - p}, {1.0 - p, p}});
}

BaseMeasure BaseMeasure::standardized_bernoulli(double p) {
    const double s0 = std::sqrt(p * (1.0 - p));
    return BaseMeasure(FiniteSupport{{-p / s0, (1.0 - p) / s0}, {1.0 - p, p}});
}

BaseMeasure BaseMeasure::from_json_string(const std::string& js) {
    const auto j = nlohmann::json::parse(js);
    if (!j.contains("atoms")) throw std::invalid_argument("measure json: missing \"atoms\"");
    FiniteSupport fs;
    for (const auto& av : j.at("atoms")) {
        fs.atoms.push_back(av.at(0).get<double>());
        fs.mass.push_back(av.at(1).get<double>());
    }
    return BaseMeasure(fs);
}

Kernel product_kernel(int p, BaseMeasure mu) {
    Kernel k;
    k.p = p;
    k.mu = std::move(mu);
    k.f = [p](const double* x) {
        double r = 1.0;
        for (int i = 0; i < p; ++i) r *= x[i];
        return r;
    };
    return k;
}

Kernel table_kernel(int p, BaseMeasure mu, const std::vector<std::vector<double>>& entries) {
    const auto& fs = mu.support();
    const int s = static_cast<int>(fs.atoms.size());
    std::uint64_t cells = 1;
    for (int i = 0; i < p; ++i) cells *= s;
    auto table = std::make_shared<std::vector<double>>(cells, 0.0);
    std::vector<int> idx(p);
    for (const auto& e : entries) {
        if (static_cast<int>(e.size()) != p + 1)
            throw std::invalid_argument("table kernel: entry arity mismatch");
        for (int i = 0; i < p; ++i) {
            idx[i] = static_cast<int>(e[i]);
            if (idx[i] < 0 || idx[i] >= s) throw std::invalid_argument("table kernel: index range");
        }
        std::sort(idx.begin(), idx.end());
        // write all permutations to enforce symmetry
        do {
            std::uint64_t flat = 0;
            for (int i = 0; i < p; ++i) flat = flat * s + idx[i];
            (*table)[flat] = e[p];
        } while (std::next_permutation(idx.begin(), idx.end()));
    }
    Kernel k;
    k.p = p;
    k.mu = mu;
    auto atoms = std::make_shared<std::vector<double>>(fs.atoms);
    k.f = [table, atoms, p, s](const double* x) {
        std::uint64_t flat = 0;
        for (int i = 0; i < p; ++i) {
            int best = 0;
            double dist = std::fabs(x[i] - (*atoms)[0]);
            for (int a = 1; a < s; ++a) {
                const double d2 = std::fabs(x[i] - (*atoms)[a]);
                if (d2 < dist) {
                    dist = d2;
                    best = a;
                }
            }
            flat = flat * s + best;
        }
        return (*table)[flat];
    };
    return k;
}

Kernel kernel_from_json_string(const std::string& js, BaseMeasure mu) {
    const auto j = nlohmann::json::parse(js);
    const std::string type = j.at("type").get<std::string>();
    if (type == "product") {
        return product_kernel(j.value("p", 1), std::move(mu));
    }
    if (type == "runs_builtin") {
        // decomposition layers of the runs example are product kernels over
        // the standardized Bernoulli measure
        return product_kernel(j.at("j").get<int>(), std::move(mu));
    }
    if (type == "table") {
        if (j.contains("support")) {
            const auto sup = j.at("support").get<std::vector<double>>();
            const auto& atoms = mu.support().atoms;
            if (sup.size() != atoms.size())
                throw std::invalid_argument("table kernel: support does not match the measure");
            for (std::size_t i = 0; i < sup.size(); ++i)
                if (std::fabs(sup[i] - atoms[i]) > 1e-12)
                    throw std::invalid_argument("table kernel: support does not match the measure");
        }
        std::vector<std::vector<double>> entries;
        for (const auto& e : j.at("values")) entries.push_back(e.get<std::vector<double>>());
        return table_kernel(j.at("p").get<int>(), std::move(mu), entries);
    }
    throw std::invalid_argument("kernel json: unknown type \"" + type + "\"");
}

DegeneracyReport check_degenerate(const Kernel& k, double tol, int mc_reps, std::uint64_t seed) {
    DegeneracyReport rep;
    if (k.mu.finite()) {
        const auto& fs = k.mu.support();
        double worst = 0.0;
        std::vector<double> args(static_cast<std::size_t>(k.p));
        for_each_tuple(fs, k.p - 1, [&](const double* prefix, double) {
            for (int i = 0; i + 1 < k.p; ++i) args[i] = prefix[i];
            double cm = 0.0;
            for (std::size_t a = 0; a < fs.atoms.size(); ++a) {
                args[k.p - 1] = fs.atoms[a];
                cm += fs.mass[a] * k.f(args.data());
            }
            worst = std::max(worst, std::fabs(cm));
        });
        rep.max_residual = worst;
        rep.is_degenerate = worst <= tol;
        return rep;
    }
    // MC: E[psi(X_1..X_{p-1},X)psi(X_1..X_{p-1},X')] = E[(E[psi|X_1..X_{p-1}])^2]
    rep.exact = false;
    Rng rng(seed);
    std::vector<double> args(static_cast<std::size_t>(k.p));
    double s1 = 0.0, s2 = 0.0;
    for (int r = 0; r < mc_reps; ++r) {
        for (int i = 0; i + 1 < k.p; ++i) args[i] = k.mu.draw(rng);
        args[k.p - 1] = k.mu.draw(rng);
        const double va = k.f(args.data());
        args[k.p - 1] = k.mu.draw(rng);
        const double vb = k.f(args.data());
        const double prod = va * vb;
        s1 += prod;
        s2 += prod * prod;
    }
    const double mean = s1 / mc_reps;
    const double var = std::max(0.0, s2 / mc_reps - mean * mean);
    const double se = std::sqrt(var / mc_reps);
    rep.max_residual = std::sqrt(std::max(0.0, mean));
    rep.se = se;
    rep.is_degenerate = mean <= tol * tol;
    rep.conclusive = std::fabs(mean - tol * tol) > 3.0 * se;
    return rep;
}

double lr_norm(const Kernel& k, int r, std::uint64_t tuple_cap, int mc_reps, std::uint64_t seed) {
    if (r < 1) throw std::invalid_argument("lr_norm: r must be >= 1");
    if (k.mu.finite()) {
        const auto& fs = k.mu.support();
        if (tuple_count(fs, k.p) > tuple_cap)
            throw std::runtime_error(
                "lr_norm: support^p exceeds the enumeration cap; use a sampler measure (MC mode)");
        double acc = 0.0;
        for_each_tuple(fs, k.p, [&](const double* args, double mass) {
            acc += mass * std::pow(std::fabs(k.f(args)), r);
        });
        return std::pow(acc, 1.0 / r);
    }
    Rng rng(seed);
    std::vector<double> args(static_cast<std::size_t>(k.p));
    double acc = 0.0;
    for (int i = 0; i < mc_reps; ++i) {
        for (int j = 0; j < k.p; ++j) args[j] = k.mu.draw(rng);
        acc += std::pow(std::fabs(k.f(args.data())), r);
    }
    return std::pow(acc / mc_reps, 1.0 / r);
}

McNorm lr_norm_mc(const Kernel& k, int r, int reps, std::uint64_t seed) {
    if (r < 1 || reps < 2) throw std::invalid_argument("lr_norm_mc: bad arguments");
    Rng rng(seed);
    std::vector<double> args(static_cast<std::size_t>(k.p));
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < reps; ++i) {
        for (int j = 0; j < k.p; ++j) args[j] = k.mu.draw(rng);
        const double v = std::pow(std::fabs(k.f(args.data())), r);
        s1 += v;
        s2 += v * v;
    }
    const double mean = s1 / reps;
    const double var = std::max(0.0, s2 / reps - mean * mean);
    const double se_mean = std::sqrt(var / reps);
    McNorm out;
    out.value = std::pow(mean, 1.0 / r);
    // delta method for m -> m^{1/r}
    out.se = mean > 0.0 ? se_mean * std::pow(mean, 1.0 / r - 1.0) / r : se_mean;
    return out;
}

double overlap_diff_cube_moment(const Kernel& k, std::uint64_t tuple_cap) {
    const auto& fs = k.mu.support();
    if (tuple_count(fs, k.p + 1) > tuple_cap)
        throw std::runtime_error("overlap_diff_cube_moment: enumeration cap exceeded");
    double acc = 0.0;
    for_each_tuple(fs, k.p + 1, [&](const double* args, double mass) {
        const double a = k.f(args);      // psi(x_1..x_p)
        const double b = k.f(args + 1);  // psi(x_2..x_{p+1})
        acc += mass * std::pow(std::fabs(a - b), 3);
    });
    return acc;
}

double cross_moment(const Kernel& a, const Kernel& b, std::uint64_t tuple_cap) {
    if (a.p != b.p) throw std::invalid_argument("cross_moment: kernel orders differ");
    const auto& fs = a.mu.support();
    if (tuple_count(fs, a.p) > tuple_cap)
        throw std::runtime_error("cross_moment: enumeration cap exceeded");
    double acc = 0.0;
    for_each_tuple(fs, a.p,
                   [&](const double* args, double mass) { acc += mass * a.f(args) * b.f(args); });
    return acc;
}

HoeffdingResult hoeffding_decompose(const Kernel& k) {
    if (!k.mu.finite())
        throw std::invalid_argument("hoeffding_decompose: finite-support measure required");
    const int p = k.p;
    const auto fs = std::make_shared<FiniteSupport>(k.mu.support());
    auto base = std::make_shared<std::function<double(const double*)>>(k.f);

    // E[psi(x_1..x_m, X_{m+1}..X_p)] as a function of the fixed prefix.
    auto cond_mean = [fs, base, p](const double* fixed, int m) {
        double acc = 0.0;
        std::vector<double> args(static_cast<std::size_t>(p));
        for (int i = 0; i < m; ++i) args[i] = fixed[i];
        const int rest = p - m;
        for_each_tuple(*fs, rest, [&](const double* tail, double mass) {
            for (int i = 0; i < rest; ++i) args[m + i] = tail[i];
            acc += mass * (*base)(args.data());
        });
        return acc;
    };

    HoeffdingResult out;
    out.mean = cond_mean(nullptr, 0);

    for (int q = 1; q <= p; ++q) {
        Kernel comp;
        comp.p = q;
        comp.mu = k.mu;
        comp.f = [cond_mean, q](const double* x) {
            double acc = 0.0;
            // inclusion-exclusion over subsets A of [q]
            for (std::uint32_t maskq = 0; maskq < (1u << q); ++maskq) {
                std::vector<double> fixed;
                fixed.reserve(static_cast<std::size_t>(q));
                for (int i = 0; i < q; ++i)
                    if (maskq & (1u << i)) fixed.push_back(x[i]);
                const int sz = static_cast<int>(fixed.size());
                const double sign = ((q - sz) % 2 == 0) ? 1.0 : -1.0;
                acc += sign * cond_mean(fixed.data(), sz);
            }
            return acc;
        };
        out.components.push_back(std::move(comp));
    }
    return out;
}

bool check_symmetry(const Kernel& k, int trials, std::uint64_t seed, double tol) {
    if (k.p == 1) return true;
    Rng rng(seed);
    std::vector<double> args(static_cast<std::size_t>(k.p));
    std::vector<double> perm(static_cast<std::size_t>(k.p));
    for (int t = 0; t < trials; ++t) {
        for (int i = 0; i < k.p; ++i) args[i] = k.mu.finite() ? k.mu.draw(rng) : k.mu.draw(rng);
        perm = args;
        // Fisher-Yates
        for (int i = k.p - 1; i > 0; --i)
            std::swap(perm[i], perm[static_cast<std::size_t>(rng.below(i + 1))]);
        if (std::fabs(k.f(args.data()) - k.f(perm.data())) > tol) return false;
    }
    return true;
}

}  // namespace fclt
