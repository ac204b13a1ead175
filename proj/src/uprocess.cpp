#include "fclt/uprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace fclt {

void WeightArray::add(const std::vector<int>& subset, double weight) {
    if (static_cast<int>(subset.size()) != p_) throw std::invalid_argument("weight add: arity");
    add(subset.data(), weight);
}

void WeightArray::add(const int* subset, double weight) {
    for (int i = 0; i < p_; ++i) {
        if (subset[i] < 1 || subset[i] > n_)
            throw std::invalid_argument("weight add: index outside [1,n]");
        if (i > 0 && subset[i] <= subset[i - 1])
            throw std::invalid_argument("weight add: tuple not strictly increasing");
    }
    for (int i = 0; i < p_; ++i) flat_.push_back(subset[i]);
    w_.push_back(weight);
    finalized_ = false;
}

void WeightArray::finalize() {
    const std::size_t cnt = w_.size();
    std::vector<std::size_t> order(cnt);
    std::iota(order.begin(), order.end(), 0);
    const auto less = [&](std::size_t a, std::size_t b) {
        const std::int32_t* sa = flat_.data() + a * p_;
        const std::int32_t* sb = flat_.data() + b * p_;
        return std::lexicographical_compare(sa, sa + p_, sb, sb + p_);
    };
    std::sort(order.begin(), order.end(), less);
    std::vector<std::int32_t> nf(flat_.size());
    std::vector<double> nw(cnt);
    for (std::size_t k = 0; k < cnt; ++k) {
        const std::int32_t* s = flat_.data() + order[k] * p_;
        std::copy(s, s + p_, nf.begin() + static_cast<std::ptrdiff_t>(k * p_));
        nw[k] = w_[order[k]];
    }
    for (std::size_t k = 1; k < cnt; ++k) {
        const std::int32_t* a = nf.data() + (k - 1) * p_;
        const std::int32_t* b = nf.data() + k * p_;
        if (std::equal(a, a + p_, b)) throw std::invalid_argument("weights: duplicate subset key");
    }
    flat_ = std::move(nf);
    w_ = std::move(nw);
    inv_.assign(static_cast<std::size_t>(n_) + 1, {});
    abs_total_ = 0.0;
    for (std::size_t k = 0; k < cnt; ++k) {
        const std::int32_t* s = subset(k);
        for (int i = 0; i < p_; ++i) inv_[s[i]].push_back(static_cast<std::int32_t>(k));
        abs_total_ += std::fabs(w_[k]);
    }
    finalized_ = true;
}

std::string WeightArray::to_json_string() const {
    nlohmann::json j;
    j["n"] = n_;
    j["p"] = p_;
    auto& e = j["entries"] = nlohmann::json::array();
    for (std::size_t k = 0; k < count(); ++k) {
        nlohmann::json tuple = nlohmann::json::array();
        for (int i = 0; i < p_; ++i) tuple.push_back(subset(k)[i]);
        e.push_back(nlohmann::json::array({tuple, w_[k]}));
    }
    return j.dump();
}

WeightArray WeightArray::from_json_string(const std::string& js) {
    const auto j = nlohmann::json::parse(js);
    WeightArray w(j.at("n").get<int>(), j.at("p").get<int>());
    for (const auto& e : j.at("entries")) {
        std::vector<int> tuple = e.at(0).get<std::vector<int>>();
        w.add(tuple, e.at(1).get<double>());
    }
    w.finalize();
    return w;
}

void enumerate_subsets(int n, int p, const std::function<void(const std::vector<int>&)>& fn) {
    if (p < 1) throw std::invalid_argument("enumerate_subsets: p >= 1 required");
    if (p > n) return;  // D_p(n) empty by convention
    std::vector<int> idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), 1);
    while (true) {
        fn(idx);
        int pos = p - 1;
        while (pos >= 0 && idx[pos] == n - (p - 1 - pos)) --pos;
        if (pos < 0) break;
        ++idx[pos];
        for (int i = pos + 1; i < p; ++i) idx[i] = idx[i - 1] + 1;
    }
}

std::vector<std::vector<int>> subsets_vector(int n, int p) {
    std::vector<std::vector<int>> out;
    enumerate_subsets(n, p, [&](const std::vector<int>& s) { out.push_back(s); });
    return out;
}

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
    return r;
}

WeightArray complete_weights(int n, int p) {
    WeightArray w(n, p);
    enumerate_subsets(n, p, [&](const std::vector<int>& s) { w.add(s, 1.0); });
    w.finalize();
    return w;
}

WeightArray incomplete_random_weights(int n, int p, double keep_prob, std::uint64_t seed) {
    WeightArray w(n, p);
    Rng rng(seed);
    enumerate_subsets(n, p, [&](const std::vector<int>& s) {
        if (rng.bernoulli(keep_prob)) w.add(s, 1.0);
    });
    w.finalize();
    return w;
}

WeightArray banded_weights(int n, int p, int band_width) {
    WeightArray w(n, p);
    enumerate_subsets(n, p, [&](const std::vector<int>& s) {
        if (s.back() - s.front() < band_width) w.add(s, 1.0);
    });
    w.finalize();
    return w;
}

void UProcessSpec::validate(double degeneracy_tol) const {
    if (d != static_cast<int>(comp.size())) throw std::invalid_argument("spec: d mismatch");
    for (int i = 0; i < d; ++i) {
        const auto& c = comp[i];
        if (c.psi.p != c.weights.p()) throw std::invalid_argument("spec: kernel/weight order");
        if (c.weights.n() != n) throw std::invalid_argument("spec: weight array n mismatch");
        if (!(c.sigma > 0.0)) throw std::invalid_argument("spec: sigma must be positive");
        if (i > 0 && comp[i - 1].psi.p > c.psi.p)
            throw std::invalid_argument("spec: orders p_i must be non-decreasing");
        if (c.psi.mu.finite()) {
            const auto rep = check_degenerate(c.psi, degeneracy_tol);
            if (!rep.is_degenerate)
                throw std::invalid_argument("spec: kernel not completely degenerate (residual " +
                                            std::to_string(rep.max_residual) + ")");
        }
    }
}

namespace {

// Per-component bucket accumulation by max(J), then prefix sums into a path.
void accumulate_buckets(StepPath& path, int component, const std::vector<double>& bucket,
                        double inv_sigma) {
    double acc = 0.0;
    for (int m = 0; m <= path.n; ++m) {
        acc += bucket[m];
        path.row(m)[component] += inv_sigma * acc;
    }
}

}  // namespace

StepPath path_from_sample(const UProcessSpec& spec, const std::vector<double>& sample) {
    if (static_cast<int>(sample.size()) != spec.n)
        throw std::invalid_argument("path_from_sample: sample size");
    StepPath path(spec.d, spec.n);
    std::vector<double> args;
    std::vector<double> bucket(static_cast<std::size_t>(spec.n) + 1);
    for (int i = 0; i < spec.d; ++i) {
        const auto& c = spec.comp[i];
        const int p = c.weights.p();
        args.resize(static_cast<std::size_t>(p));
        std::fill(bucket.begin(), bucket.end(), 0.0);
        for (std::size_t k = 0; k < c.weights.count(); ++k) {
            const std::int32_t* J = c.weights.subset(k);
            for (int j = 0; j < p; ++j) args[j] = sample[static_cast<std::size_t>(J[j]) - 1];
            bucket[J[p - 1]] += c.weights.weight(k) * c.psi.f(args.data());
        }
        accumulate_buckets(path, i, bucket, 1.0 / c.sigma);
    }
    return path;
}

USimResult simulate_Y(const UProcessSpec& spec, Rng& rng) {
    USimResult out;
    out.sample.resize(static_cast<std::size_t>(spec.n));
    for (auto& x : out.sample) x = spec.mu.draw(rng);
    out.path = path_from_sample(spec, out.sample);
    return out;
}

UPairResult exchangeable_pair(const UProcessSpec& spec, const std::vector<double>& sample,
                              Rng& rng) {
    UPairResult out;
    out.y = path_from_sample(spec, sample);
    out.replaced_index = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.n)));
    out.x0 = spec.mu.draw(rng);
    out.yp = out.y;

    const int I = out.replaced_index;
    std::vector<double> args_old, args_new;
    std::vector<double> bucket(static_cast<std::size_t>(spec.n) + 1);
    for (int i = 0; i < spec.d; ++i) {
        const auto& c = spec.comp[i];
        const int p = c.weights.p();
        args_old.resize(static_cast<std::size_t>(p));
        args_new.resize(static_cast<std::size_t>(p));
        std::fill(bucket.begin(), bucket.end(), 0.0);
        for (std::int32_t k : c.weights.containing(I)) {
            const std::int32_t* J = c.weights.subset(static_cast<std::size_t>(k));
            for (int j = 0; j < p; ++j) {
                const double xv = sample[static_cast<std::size_t>(J[j]) - 1];
                args_old[j] = xv;
                args_new[j] = (J[j] == I) ? out.x0 : xv;
            }
            bucket[J[p - 1]] += c.weights.weight(static_cast<std::size_t>(k)) *
                                (c.psi.f(args_new.data()) - c.psi.f(args_old.data()));
        }
        accumulate_buckets(out.yp, i, bucket, 1.0 / c.sigma);
    }
    return out;
}

std::vector<double> lambda_weighted_diag(const UProcessSpec& spec) {
    std::vector<double> diag(static_cast<std::size_t>(spec.d));
    for (int i = 0; i < spec.d; ++i)
        diag[i] = static_cast<double>(spec.n) / (2.0 * spec.comp[i].psi.p);
    return diag;
}

std::vector<double> variance_sigma(const std::vector<Kernel>& kernels,
                                   const std::vector<WeightArray>& weights) {
    if (kernels.size() != weights.size()) throw std::invalid_argument("variance_sigma: arity");
    std::vector<double> out(kernels.size());
    for (std::size_t i = 0; i < kernels.size(); ++i) {
        const double m2 = cross_moment(kernels[i], kernels[i]);
        double wsq = 0.0;
        for (double a : weights[i].weights()) wsq += a * a;
        const double s2 = m2 * wsq;
        if (!(s2 > 0.0))
            throw std::invalid_argument("variance_sigma: zero variance (sigma must be positive)");
        out[i] = std::sqrt(s2);
    }
    return out;
}

UProcessSpec homsum_spec(std::vector<WeightArray> weights, BaseMeasure mu,
                         std::vector<double> sigmas) {
    if (weights.empty()) throw std::invalid_argument("homsum_spec: no components");
    if (mu.finite()) {
        if (std::fabs(mu.mean()) > 1e-10)
            throw std::invalid_argument("homsum_spec: measure must be centered");
        if (std::fabs(mu.variance() - 1.0) > 1e-10)
            throw std::invalid_argument("homsum_spec: measure must have unit variance");
    }
    UProcessSpec spec;
    spec.d = static_cast<int>(weights.size());
    spec.n = weights.front().n();
    spec.mu = mu;
    std::vector<Kernel> kernels;
    for (auto& w : weights) kernels.push_back(product_kernel(w.p(), mu));
    if (sigmas.empty()) sigmas = variance_sigma(kernels, weights);
    if (sigmas.size() != weights.size()) throw std::invalid_argument("homsum_spec: sigma arity");
    for (std::size_t i = 0; i < weights.size(); ++i)
        spec.comp.push_back({kernels[i], std::move(weights[i]), sigmas[i]});
    std::sort(spec.comp.begin(), spec.comp.end(),
              [](const UComponent& a, const UComponent& b) { return a.psi.p < b.psi.p; });
    return spec;
}

}  // namespace fclt
